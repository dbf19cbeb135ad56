//! Rank-one flip paths `H(t) = H(0) + t·g·Π_x`, eigenbranch tracking,
//! Hellmann–Feynman and displacement checks, blocking amplitudes and the
//! ejection check.

use nalgebra::DMatrix;

use crate::disorder::DisorderField;
use crate::error::{Error, Result};
use crate::geometry::Site;
use crate::interval::Interval;
use crate::operator::{hamiltonian_matrix, symmetric_eigenvalues, SpectralData, CLUSTER_TOL};
use crate::quadrature;
use crate::scalar::Scalar;

/// Minimum eigenvector overlap between consecutive points of a tracked branch.
pub const OVERLAP_THRESHOLD: f64 = 0.9;

/// Bisection stops at this grid step; still-ambiguous steps mark branches broken.
pub const MIN_REFINE_STEP: f64 = 1e-6;

/// Eigenvalues closer than this to a neighbour are not simple.
pub const SIMPLE_GAP: f64 = 1e-6;

/// Default finite-difference step for the Hellmann–Feynman residual.
pub const HF_STEP: f64 = 1e-4;

/// Cluster pairs whose squared-overlap mass exceeds this are linked when
/// matching consecutive spectra.
const LINK_MASS: f64 = 0.19;

/// `t_k = k/(points−1)`, `k = 0..points`.
pub fn uniform_grid<T: Scalar>(points: usize) -> Vec<T> {
    assert!(points >= 2, "a grid needs two points");
    (0..points)
        .map(|k| T::from_count(k) / T::from_count(points - 1))
        .collect()
}

/// The path `t ↦ H(t)` through the two Bernoulli values at `x`, all other
/// sites held at their current values.
#[derive(Clone, Debug)]
pub struct RankOnePath<T: Scalar> {
    base: DisorderField<T>,
    site: Site,
    index: usize,
    base_matrix: DMatrix<T>,
    grid: Vec<T>,
}

impl<T: Scalar> RankOnePath<T> {
    pub fn new(field: &DisorderField<T>, x: &Site, grid: Vec<T>) -> Result<Self> {
        let index = field.region().require_index(x)?;
        if field.is_frozen(index) {
            return Err(Error::FrozenSite(*x));
        }
        if grid.len() < 2 {
            return Err(Error::Domain("flip grid needs at least two points".into()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || grid[0] < T::zero() || grid[grid.len() - 1] > T::one() {
            return Err(Error::Domain("flip grid must be strictly increasing in [0,1]".into()));
        }
        let base = field.with_value(x, T::zero())?;
        let base_matrix = hamiltonian_matrix(base.region(), base.values(), base.coupling());
        Ok(Self {
            base,
            site: *x,
            index,
            base_matrix,
            grid,
        })
    }

    pub fn uniform(field: &DisorderField<T>, x: &Site, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Domain("flip grid needs at least two points".into()));
        }
        Self::new(field, x, uniform_grid(points))
    }

    pub fn base(&self) -> &DisorderField<T> {
        &self.base
    }

    pub fn site(&self) -> Site {
        self.site
    }

    /// Matrix index of the varied site.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn coupling(&self) -> T {
        self.base.coupling()
    }

    pub fn matrix_at(&self, t: T) -> DMatrix<T> {
        let mut m = self.base_matrix.clone();
        m[(self.index, self.index)] += t * self.coupling();
        m
    }

    pub fn spectrum_at(&self, t: T) -> Result<SpectralData<T>> {
        SpectralData::decompose(&self.matrix_at(t))
    }

    pub fn eigenvalues_at(&self, t: T) -> Result<Vec<T>> {
        symmetric_eigenvalues(&self.matrix_at(t))
    }

    /// `Σ_j (λ_j(1) − λ_j(0))` over sorted spectra; equals `g` exactly.
    pub fn trace_shift(&self) -> Result<T> {
        let a = self.eigenvalues_at(T::zero())?;
        let b = self.eigenvalues_at(T::one())?;
        Ok(a.iter().zip(&b).fold(T::zero(), |s, (x, y)| s + (*y - *x)))
    }

    /// `max_j |λ_j(1) − λ_j(0)|` over sorted spectra; at most `g`.
    pub fn max_sorted_shift(&self) -> Result<T> {
        let a = self.eigenvalues_at(T::zero())?;
        let b = self.eigenvalues_at(T::one())?;
        Ok(a.iter().zip(&b).fold(T::zero(), |s, (x, y)| s.max((*y - *x).abs())))
    }
}

/// One eigenvalue branch followed across the (possibly refined) grid.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenBranch<T: Scalar> {
    /// Sorted position at `t = 0`.
    pub index: usize,
    pub t: Vec<T>,
    pub values: Vec<T>,
    /// `|ψ(t_k; x)|²`.
    pub amplitudes: Vec<T>,
    /// Distance to the nearest other eigenvalue at each `t_k`.
    pub gaps: Vec<T>,
    /// Sorted position at each `t_k`.
    pub positions: Vec<usize>,
    /// Overlap with the previous point (`overlaps[k]` links `t_k` and `t_{k+1}`).
    pub overlaps: Vec<T>,
    pub broken: bool,
}

impl<T: Scalar> EigenBranch<T> {
    pub fn min_gap(&self) -> T {
        self.gaps
            .iter()
            .fold(T::max_value().expect("bounded scalar"), |a, b| a.min(*b))
    }

    pub fn min_overlap(&self) -> T {
        self.overlaps.iter().fold(T::one(), |a, b| a.min(*b))
    }

    /// Tracked, isolated by more than `gap` everywhere, and never crossing.
    pub fn is_simple(&self, gap: T) -> bool {
        !self.broken
            && self.min_gap() > gap
            && self.positions.iter().all(|&p| p == self.positions[0])
    }

    pub fn is_monotone(&self, tol: T) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    pub fn start(&self) -> T {
        self.values[0]
    }

    pub fn end(&self) -> T {
        self.values[self.values.len() - 1]
    }
}

#[derive(Clone, Debug)]
pub struct BranchTracking<T: Scalar> {
    pub t: Vec<T>,
    pub branches: Vec<EigenBranch<T>>,
    /// Number of bisection points inserted.
    pub refinements: usize,
    spectra: Vec<SpectralData<T>>,
    site_index: usize,
}

impl<T: Scalar> BranchTracking<T> {
    pub fn broken_count(&self) -> usize {
        self.branches.iter().filter(|b| b.broken).count()
    }

    pub fn spectra(&self) -> &[SpectralData<T>] {
        &self.spectra
    }

    /// Blocking amplitude over every sampled `t` (grid plus refinements).
    pub fn blocking_amplitude(&self, window: &Interval<T>) -> Option<T> {
        self.spectra
            .iter()
            .filter_map(|s| window_amplitude(s, self.site_index, window))
            .reduce(|a, b| a.min(b))
    }
}

struct StepMatch<T> {
    map: Vec<usize>,
    overlap: Vec<T>,
    ambiguous: Vec<bool>,
}

impl<T> StepMatch<T> {
    fn valid(&self) -> bool {
        !self.ambiguous.iter().any(|&a| a)
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Matches sorted eigenpairs of `a` to those of `b` through connected
/// components of the cluster overlap graph.
fn match_spectra<T: Scalar>(a: &SpectralData<T>, b: &SpectralData<T>) -> StepMatch<T> {
    let n = a.len();
    let p2 = (a.eigenvectors().transpose() * b.eigenvectors()).map(|x| x * x);
    let ca = a.clusters();
    let cb = b.clusters();
    let (na, nb) = (ca.len(), cb.len());
    let mut parent: Vec<usize> = (0..na + nb).collect();
    for (i, ri) in ca.iter().enumerate() {
        for (j, rj) in cb.iter().enumerate() {
            let mut mass = T::zero();
            for r in ri.clone() {
                for c in rj.clone() {
                    mass += p2[(r, c)];
                }
            }
            if mass > T::lit(LINK_MASS) {
                let (x, y) = (find(&mut parent, i), find(&mut parent, na + j));
                parent[x] = y;
            }
        }
    }
    let mut comp_src: Vec<Vec<usize>> = vec![Vec::new(); na + nb];
    let mut comp_tgt: Vec<Vec<usize>> = vec![Vec::new(); na + nb];
    let mut comp_src_clusters = vec![0usize; na + nb];
    let mut comp_tgt_clusters = vec![0usize; na + nb];
    for (i, r) in ca.iter().enumerate() {
        let root = find(&mut parent, i);
        comp_src[root].extend(r.clone());
        comp_src_clusters[root] += 1;
    }
    for (j, r) in cb.iter().enumerate() {
        let root = find(&mut parent, na + j);
        comp_tgt[root].extend(r.clone());
        comp_tgt_clusters[root] += 1;
    }

    let mut map = vec![usize::MAX; n];
    let mut overlap = vec![T::zero(); n];
    let mut ambiguous = vec![false; n];
    let mut loose_src = Vec::new();
    let mut loose_tgt = Vec::new();
    for root in 0..na + nb {
        let (src, tgt) = (&comp_src[root], &comp_tgt[root]);
        if src.is_empty() && tgt.is_empty() {
            continue;
        }
        for &i in src {
            let mass = tgt.iter().fold(T::zero(), |s, &j| s + p2[(i, j)]);
            overlap[i] = mass.sqrt();
        }
        let valid = src.len() == tgt.len()
            && (comp_src_clusters[root] == 1 || comp_tgt_clusters[root] == 1)
            && src.iter().all(|&i| overlap[i] >= T::lit(OVERLAP_THRESHOLD));
        if valid {
            for (&i, &j) in src.iter().zip(tgt) {
                map[i] = j;
            }
        } else {
            for &i in src {
                ambiguous[i] = true;
            }
            loose_src.extend(src.iter().copied());
            loose_tgt.extend(tgt.iter().copied());
        }
    }
    loose_src.sort_unstable();
    loose_tgt.sort_unstable();
    for (&i, &j) in loose_src.iter().zip(&loose_tgt) {
        map[i] = j;
    }
    StepMatch {
        map,
        overlap,
        ambiguous,
    }
}

struct TrackState<T: Scalar> {
    positions: Vec<usize>,
    tracking: BranchTracking<T>,
}

impl<T: Scalar> TrackState<T> {
    fn record(&mut self, t: T, spec: &SpectralData<T>, step: Option<&StepMatch<T>>) {
        let x = self.tracking.site_index;
        for (j, branch) in self.tracking.branches.iter_mut().enumerate() {
            let mut pos = self.positions[j];
            if let Some(step) = step {
                branch.overlaps.push(step.overlap[pos]);
                branch.broken |= step.ambiguous[pos];
                pos = step.map[pos];
                self.positions[j] = pos;
            }
            let psi = spec.amplitude(pos, x);
            branch.t.push(t);
            branch.values.push(spec.eigenvalues()[pos]);
            branch.amplitudes.push(psi * psi);
            branch.gaps.push(spec.isolation(pos));
            branch.positions.push(pos);
        }
        self.tracking.t.push(t);
        self.tracking.spectra.push(spec.clone());
    }
}

fn advance<T: Scalar>(
    path: &RankOnePath<T>,
    ta: T,
    sa: &SpectralData<T>,
    tb: T,
    sb: &SpectralData<T>,
    state: &mut TrackState<T>,
) -> Result<()> {
    let step = match_spectra(sa, sb);
    if step.valid() || tb - ta <= T::lit(MIN_REFINE_STEP) {
        state.record(tb, sb, Some(&step));
        return Ok(());
    }
    let tm = (ta + tb) / T::lit(2.0);
    let sm = path.spectrum_at(tm)?;
    state.tracking.refinements += 1;
    advance(path, ta, sa, tm, &sm, state)?;
    advance(path, tm, &sm, tb, sb, state)
}

/// Follows every eigenvalue along the path by eigenvector overlap, bisecting
/// ambiguous steps down to [`MIN_REFINE_STEP`].
pub fn track_branches<T: Scalar>(path: &RankOnePath<T>) -> Result<BranchTracking<T>> {
    let n = path.base().region().len();
    let branches = (0..n)
        .map(|index| EigenBranch {
            index,
            t: Vec::new(),
            values: Vec::new(),
            amplitudes: Vec::new(),
            gaps: Vec::new(),
            positions: Vec::new(),
            overlaps: Vec::new(),
            broken: false,
        })
        .collect();
    let mut state = TrackState {
        positions: (0..n).collect(),
        tracking: BranchTracking {
            t: Vec::new(),
            branches,
            refinements: 0,
            spectra: Vec::new(),
            site_index: path.index(),
        },
    };
    let grid = path.grid();
    let mut prev = path.spectrum_at(grid[0])?;
    state.record(grid[0], &prev, None);
    for w in grid.windows(2) {
        let next = path.spectrum_at(w[1])?;
        advance(path, w[0], &prev, w[1], &next, &mut state)?;
        prev = next;
    }
    Ok(state.tracking)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HfReport<T: Scalar> {
    pub max_residual: T,
    /// `max |D(h) − D(2h)|` over the evaluated points.
    pub richardson_gap: T,
    pub evaluated: usize,
    /// Interior points skipped because the branch was not simple there.
    pub skipped: usize,
}

/// `|D_h λ(t) − g·|ψ(t;x)|²|` at one point, `D_h` the centred difference of
/// the eigenvalue at sorted position `pos`.
pub fn hf_residual_at<T: Scalar>(path: &RankOnePath<T>, t: T, pos: usize, h: T) -> Result<T> {
    let spec = path.spectrum_at(t)?;
    let psi = spec.amplitude(pos, path.index());
    Ok((centered_derivative(path, t, pos, h)? - path.coupling() * psi * psi).abs())
}

fn centered_derivative<T: Scalar>(path: &RankOnePath<T>, t: T, pos: usize, h: T) -> Result<T> {
    let up = path.eigenvalues_at(t + h)?[pos];
    let down = path.eigenvalues_at(t - h)?[pos];
    Ok((up - down) / (T::lit(2.0) * h))
}

pub fn hellmann_feynman_residual<T: Scalar>(branch: &EigenBranch<T>, path: &RankOnePath<T>) -> Result<HfReport<T>> {
    hellmann_feynman_residual_with_step(branch, path, T::lit(HF_STEP))
}

pub fn hellmann_feynman_residual_with_step<T: Scalar>(
    branch: &EigenBranch<T>,
    path: &RankOnePath<T>,
    h: T,
) -> Result<HfReport<T>> {
    if branch.broken {
        return Err(Error::BrokenBranch(branch.index));
    }
    let g = path.coupling();
    let mut report = HfReport {
        max_residual: T::zero(),
        richardson_gap: T::zero(),
        evaluated: 0,
        skipped: 0,
    };
    for k in 1..branch.t.len().saturating_sub(1) {
        if branch.gaps[k] <= T::lit(SIMPLE_GAP) {
            report.skipped += 1;
            continue;
        }
        let (t, pos) = (branch.t[k], branch.positions[k]);
        let d1 = centered_derivative(path, t, pos, h)?;
        let d2 = centered_derivative(path, t, pos, h * T::lit(2.0))?;
        report.max_residual = report.max_residual.max((d1 - g * branch.amplitudes[k]).abs());
        report.richardson_gap = report.richardson_gap.max((d1 - d2).abs());
        report.evaluated += 1;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Displacement<T: Scalar> {
    /// `λ(1) − λ(0)`.
    pub delta: T,
    /// `∫₀¹ g·|ψ(t;x)|² dt`; `None` when the branch is not simple.
    pub integral: Option<T>,
    pub error_estimate: T,
    pub valid: bool,
}

impl<T: Scalar> Displacement<T> {
    pub fn discrepancy(&self) -> Option<T> {
        self.integral.map(|i| (i - self.delta).abs())
    }
}

/// Endpoint displacement of a branch and the quadrature of its flow.
pub fn displacement<T: Scalar>(branch: &EigenBranch<T>, path: &RankOnePath<T>) -> Result<Displacement<T>> {
    let delta = branch.end() - branch.start();
    if !branch.is_simple(T::lit(SIMPLE_GAP)) || branch.t[0] != T::zero() || branch.t[branch.t.len() - 1] != T::one() {
        return Ok(Displacement {
            delta,
            integral: None,
            error_estimate: T::zero(),
            valid: false,
        });
    }
    let pos = branch.positions[0];
    let (x, g) = (path.index(), path.coupling());
    let tol = T::lit(1e-11).max(T::default_epsilon() * T::lit(100.0));
    let q = quadrature::integrate(
        |t| {
            let psi = path.spectrum_at(t)?.amplitude(pos, x);
            Ok(g * psi * psi)
        },
        T::zero(),
        T::one(),
        tol,
        30,
    )?;
    Ok(Displacement {
        delta,
        integral: Some(q.value),
        error_estimate: q.error_estimate,
        valid: true,
    })
}

/// Smallest `|ψ(x)|` over eigenpairs of one spectrum with eigenvalue in the
/// window; a degenerate cluster touching the window contributes 0.
fn window_amplitude<T: Scalar>(spec: &SpectralData<T>, x: usize, window: &Interval<T>) -> Option<T> {
    let mut out: Option<T> = None;
    for cluster in spec.clusters() {
        if !cluster.clone().any(|j| window.contains(spec.eigenvalues()[j])) {
            continue;
        }
        let m = if cluster.len() > 1 {
            T::zero()
        } else {
            spec.amplitude(cluster.start, x).abs()
        };
        out = Some(out.map_or(m, |o| o.min(m)));
    }
    out
}

/// `min` over grid points and over eigenpairs with `λ(t) ∈ I` of `|ψ(t;x)|`;
/// `None` when no eigenvalue visits the window (vacuously blocking).
pub fn blocking_amplitude<T: Scalar>(
    field: &DisorderField<T>,
    x: &Site,
    window: &Interval<T>,
    grid: &[T],
) -> Result<Option<T>> {
    if !field.law().is_bernoulli() {
        return Err(Error::NotBernoulli(field.law().to_string()));
    }
    let path = RankOnePath::new(field, x, grid.to_vec())?;
    let mut out: Option<T> = None;
    for &t in grid {
        if let Some(m) = window_amplitude(&path.spectrum_at(t)?, path.index(), window) {
            out = Some(out.map_or(m, |o| o.min(m)));
        }
    }
    Ok(out)
}

/// Whether `x` is path-blocking at level `m_star` given an observed amplitude.
pub fn is_path_blocking<T: Scalar>(m_obs: Option<T>, m_star: T) -> bool {
    m_obs.map_or(true, |m| m >= m_star)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EjectionOptions {
    /// Only check branches whose gap to neighbours exceeds `2η` along the path.
    pub gap_filter: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EjectionVerdict<T: Scalar> {
    Pass,
    Fail { branch: usize, start: T, end: T },
    /// Some branches starting in the window could not be tracked.
    Inconclusive { broken: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EjectionReport<T: Scalar> {
    pub verdict: EjectionVerdict<T>,
    pub m_obs: Option<T>,
    /// Branches starting in the window that were checked.
    pub checked: usize,
    /// Branches excluded by the gap filter.
    pub filtered: usize,
}

/// Checks that every branch starting in `window` at `t = 0` ends outside it.
pub fn ejection_check<T: Scalar>(
    field: &DisorderField<T>,
    x: &Site,
    window: &Interval<T>,
    m_star: T,
    grid: &[T],
    options: EjectionOptions,
) -> Result<EjectionReport<T>> {
    if !field.law().is_bernoulli() {
        return Err(Error::NotBernoulli(field.law().to_string()));
    }
    let path = RankOnePath::new(field, x, grid.to_vec())?;
    let tracking = track_branches(&path)?;
    ejection_check_tracked(&path, &tracking, window, m_star, options)
}

/// [`ejection_check`] on an already tracked path.
pub fn ejection_check_tracked<T: Scalar>(
    path: &RankOnePath<T>,
    tracking: &BranchTracking<T>,
    window: &Interval<T>,
    m_star: T,
    options: EjectionOptions,
) -> Result<EjectionReport<T>> {
    let eta = window.half_width();
    let g = path.coupling();
    if !(eta < g * m_star * m_star / T::lit(2.0)) {
        return Err(Error::Precondition(format!(
            "window half width {eta} is not below g·m*²/2 = {}",
            g * m_star * m_star / T::lit(2.0)
        )));
    }
    let m_obs = tracking.blocking_amplitude(window);
    if !is_path_blocking(m_obs, m_star) {
        return Err(Error::Precondition(format!(
            "site {} is not path-blocking at level {m_star}",
            path.site()
        )));
    }
    let mut checked = 0;
    let mut filtered = 0;
    let mut broken = Vec::new();
    let mut failure = None;
    for b in tracking.branches.iter().filter(|b| window.contains(b.start())) {
        if options.gap_filter && !(b.min_gap() > T::lit(2.0) * eta) {
            filtered += 1;
            continue;
        }
        checked += 1;
        if b.broken {
            broken.push(b.index);
        } else if window.contains(b.end()) && failure.is_none() {
            failure = Some(EjectionVerdict::Fail {
                branch: b.index,
                start: b.start(),
                end: b.end(),
            });
        }
    }
    let verdict = match failure {
        Some(f) => f,
        None if !broken.is_empty() => EjectionVerdict::Inconclusive { broken },
        None => EjectionVerdict::Pass,
    };
    Ok(EjectionReport {
        verdict,
        m_obs,
        checked,
        filtered,
    })
}

/// Shrinks a window centred at `E` until `η < g·m_obs²/2` holds for the
/// tracked path. Returns `None` when the amplitude vanishes in the window.
pub fn admissible_window<T: Scalar>(
    tracking: &BranchTracking<T>,
    g: T,
    center: T,
    initial_half_width: T,
) -> Option<(Interval<T>, Option<T>)> {
    let mut eta = initial_half_width;
    for _ in 0..60 {
        let window = Interval::centered(center, eta).ok()?;
        let m = tracking.blocking_amplitude(&window);
        let limit = match m {
            None => return Some((window, None)),
            Some(m) if m <= T::lit(CLUSTER_TOL) => return None,
            Some(m) => g * m * m / T::lit(2.0),
        };
        if eta < limit {
            return Some((window, m));
        }
        eta = limit * T::lit(0.9);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, FrozenAssignment, SiteLaw};
    use crate::geometry::Region;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn bern() -> SiteLaw {
        SiteLaw::bernoulli(0.5).unwrap()
    }

    fn field(region: Region, values: Vec<f64>, g: f64) -> DisorderField<f64> {
        let n = region.len();
        DisorderField::from_values(Arc::new(region), bern(), values, vec![false; n], g).unwrap()
    }

    fn single_site(g: f64) -> DisorderField<f64> {
        field(Region::centered_box(1, 1).unwrap(), vec![0.0], g)
    }

    #[test]
    fn path_differs_only_at_site() {
        let f = field(Region::cuboid(Site::d1(0), 4).unwrap(), vec![1.0, 0.0, 1.0, 1.0], 2.5);
        let p = RankOnePath::uniform(&f, &Site::d1(2), 5).unwrap();
        let d = p.matrix_at(0.7) - p.matrix_at(0.0);
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i, j) == (2, 2) { 0.7 * 2.5 } else { 0.0 };
                assert_abs_diff_eq!(d[(i, j)], want, epsilon = 1e-14);
            }
        }
        assert!(RankOnePath::new(&f, &Site::d1(0), vec![0.0]).is_err());
        assert!(RankOnePath::new(&f, &Site::d1(0), vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn scalar_branch_is_linear() {
        let g = 1.5;
        let p = RankOnePath::uniform(&single_site(g), &Site::d1(0), 9).unwrap();
        let tr = track_branches(&p).unwrap();
        assert_eq!(tr.branches.len(), 1);
        let b = &tr.branches[0];
        for (t, v) in b.t.iter().zip(&b.values) {
            assert_abs_diff_eq!(*v, 2.0 + g * t, epsilon = 1e-13);
        }
        let hf = hellmann_feynman_residual(b, &p).unwrap();
        assert!(hf.max_residual < 1e-9);
        let d = displacement(b, &p).unwrap();
        assert_abs_diff_eq!(d.delta, g, epsilon = 1e-13);
        assert_abs_diff_eq!(d.integral.unwrap(), g, epsilon = 1e-13);
    }

    #[test]
    fn branches_start_at_base_spectrum() {
        let r = Arc::new(Region::cuboid(Site::d1(0), 5).unwrap());
        let f = sample_field(bern(), r, &FrozenAssignment::new(), 1.0, 3).unwrap();
        let p = RankOnePath::uniform(&f, &Site::d1(2), 33).unwrap();
        let tr = track_branches(&p).unwrap();
        let ev = p.eigenvalues_at(0.0).unwrap();
        let mut starts: Vec<f64> = tr.branches.iter().map(|b| b.start()).collect();
        starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in starts.iter().zip(&ev) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn small_chain_tracks_cleanly() {
        let r = Arc::new(Region::cuboid(Site::d1(0), 3).unwrap());
        for seed in 0..8 {
            let f = sample_field(bern(), r.clone(), &FrozenAssignment::new(), 1.0, seed).unwrap();
            for x in f.free_sites() {
                let p = RankOnePath::uniform(&f, &x, 64).unwrap();
                let tr = track_branches(&p).unwrap();
                assert_eq!(tr.broken_count(), 0);
                for b in &tr.branches {
                    assert!(b.min_overlap() > 0.99);
                    assert!(b.is_monotone(1e-10));
                }
            }
        }
    }

    #[test]
    fn exact_crossing_is_followed() {
        // two corners occupied: one level has no weight at the centre and
        // stays flat while a moving branch passes through it
        let mut values = vec![0.0; 9];
        values[0] = 1.0;
        values[2] = 1.0;
        let f = field(Region::cuboid(Site::d2(0, 0), 3).unwrap(), values, 1.0);
        let p = RankOnePath::uniform(&f, &Site::d2(1, 1), 64).unwrap();
        let tr = track_branches(&p).unwrap();
        assert_eq!(tr.broken_count(), 0);
        let crossing: Vec<&EigenBranch<f64>> = tr
            .branches
            .iter()
            .filter(|b| b.positions.iter().any(|&q| q != b.positions[0]))
            .collect();
        assert_eq!(crossing.len(), 2);
        assert!(crossing.iter().any(|b| b.amplitudes.iter().all(|&a| a < 1e-20)));
        for b in &tr.branches {
            assert!(b.is_monotone(1e-10));
            assert!(b.min_overlap() >= OVERLAP_THRESHOLD);
        }
    }

    #[test]
    fn hf_residual_on_free_chain() {
        let f = field(Region::cuboid(Site::d1(0), 5).unwrap(), vec![0.0; 5], 1.0);
        let p = RankOnePath::uniform(&f, &Site::d1(2), 11).unwrap();
        let tr = track_branches(&p).unwrap();
        for b in tr.branches.iter().filter(|b| b.min_gap() > 1e-2) {
            let r = hellmann_feynman_residual(b, &p).unwrap();
            assert!(r.max_residual <= 1e-6, "residual {}", r.max_residual);
        }
        let f2 = field(Region::cuboid(Site::d1(0), 5).unwrap(), vec![0.0; 5], 2.0);
        let p2 = RankOnePath::uniform(&f2, &Site::d1(2), 11).unwrap();
        let tr2 = track_branches(&p2).unwrap();
        for b in tr2.branches.iter().filter(|b| b.min_gap() > 1e-2) {
            assert!(hellmann_feynman_residual(b, &p2).unwrap().max_residual <= 1e-6);
        }
    }

    #[test]
    fn hf_finite_difference_is_second_order() {
        let f = field(Region::cuboid(Site::d1(0), 4).unwrap(), vec![1.0, 0.0, 0.0, 1.0], 1.0);
        let p = RankOnePath::uniform(&f, &Site::d1(1), 3).unwrap();
        let steps = [0.08f64, 0.04, 0.02, 0.01];
        let pts: Vec<(f64, f64)> = steps
            .iter()
            .map(|&h| (h.ln(), hf_residual_at(&p, 0.5, 0, h).unwrap().ln()))
            .collect();
        let order = crate::stats::least_squares(&pts).unwrap().slope;
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn displacement_matches_quadrature_on_two_sites() {
        let f = field(Region::cuboid(Site::d1(0), 2).unwrap(), vec![0.0, 0.0], 1.0);
        let p = RankOnePath::uniform(&f, &Site::d1(1), 8).unwrap();
        let tr = track_branches(&p).unwrap();
        for b in &tr.branches {
            let d = displacement(b, &p).unwrap();
            assert!(d.valid);
            assert!(d.discrepancy().unwrap() <= 1e-8);
            // analytic: λ±(t) = 2 + t/2 ± sqrt(1 + t²/4)
            let s = if b.index == 0 { -1.0 } else { 1.0 };
            let want = 0.5 + s * (1.25f64.sqrt() - 1.0);
            assert_abs_diff_eq!(d.delta, want, epsilon = 1e-12);
            let m_min = b.amplitudes.iter().fold(f64::INFINITY, |a, &v| a.min(v));
            assert!(d.delta >= m_min - 1e-12);
        }
    }

    #[test]
    fn sum_rule_and_weyl_bound() {
        let r = Arc::new(Region::cuboid(Site::d1(0), 3).unwrap());
        for seed in 0..6 {
            let g = 0.5 + seed as f64;
            let f = sample_field(bern(), r.clone(), &FrozenAssignment::new(), g, seed).unwrap();
            for x in f.free_sites() {
                let p = RankOnePath::uniform(&f, &x, 2).unwrap();
                assert_abs_diff_eq!(p.trace_shift().unwrap(), g, epsilon = 1e-9);
                assert!(p.max_sorted_shift().unwrap() <= g + 1e-12);
            }
        }
    }

    #[test]
    fn blocking_amplitude_examples() {
        let f = single_site(1.0);
        let grid = uniform_grid::<f64>(11);
        let far = Interval::new(50.0, 60.0).unwrap();
        assert_eq!(blocking_amplitude(&f, &Site::d1(0), &far, &grid).unwrap(), None);

        let f1 = field(Region::centered_box(1, 1).unwrap(), vec![1.0], 1.0);
        let w = Interval::new(2.0, 2.5).unwrap();
        assert_eq!(blocking_amplitude(&f1, &Site::d1(0), &w, &grid).unwrap(), Some(1.0));

        let holder = DisorderField::zeros(Arc::new(Region::centered_box(1, 1).unwrap()), SiteLaw::Uniform, 1.0).unwrap();
        assert!(matches!(blocking_amplitude(&holder, &Site::d1(0), &w, &grid), Err(Error::NotBernoulli(_))));
    }

    #[test]
    fn degenerate_cluster_blocks_nothing() {
        // free 3×3 box: λ_{ij} = λ_{ji}, so i ≠ j levels are doubly degenerate
        let f = field(Region::centered_box(2, 3).unwrap(), vec![0.0; 9], 1.0);
        let op = crate::operator::FiniteVolumeOperator::assemble(f.clone());
        let s = op.spectrum().unwrap();
        let degenerate = s.clusters().into_iter().find(|c| c.len() > 1).unwrap();
        let e = s.eigenvalues()[degenerate.start];
        let w = Interval::centered(e, 1e-3).unwrap();
        let m = blocking_amplitude(&f, &Site::d2(1, 1), &w, &[0.0, 1.0]).unwrap();
        assert_eq!(m, Some(0.0));
    }

    #[test]
    fn ejection_on_single_site() {
        let f = single_site(1.0);
        let grid = uniform_grid::<f64>(17);
        let w = Interval::new(1.9, 2.1).unwrap();
        let rep = ejection_check(&f, &Site::d1(0), &w, 1.0, &grid, EjectionOptions::default()).unwrap();
        assert_eq!(rep.verdict, EjectionVerdict::Pass);
        assert_eq!(rep.checked, 1);

        let wide = Interval::new(1.4, 2.6).unwrap();
        assert!(matches!(
            ejection_check(&f, &Site::d1(0), &wide, 1.0, &grid, EjectionOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn admissible_window_satisfies_preconditions() {
        let r = Arc::new(Region::cuboid(Site::d1(0), 6).unwrap());
        let f = sample_field(bern(), r, &FrozenAssignment::new(), 1.0, 17).unwrap();
        let x = Site::d1(2);
        let p = RankOnePath::uniform(&f, &x, 32).unwrap();
        let tr = track_branches(&p).unwrap();
        let e = tr.branches[2].start();
        if let Some((w, m)) = admissible_window(&tr, 1.0, e, 0.25) {
            let m = m.unwrap();
            assert!(w.half_width() < m * m / 2.0);
            let rep = ejection_check_tracked(&p, &tr, &w, m, EjectionOptions::default()).unwrap();
            assert!(!matches!(rep.verdict, EjectionVerdict::Fail { .. }));
        }
    }
}
