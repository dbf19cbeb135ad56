//! Dirichlet finite-volume Hamiltonian `H = −Δ_Λ + g·V`, its spectral data,
//! Green's function entries and Combes–Thomas decay profiles.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::disorder::DisorderField;
use crate::error::{Error, Result};
use crate::geometry::{Region, Site};
use crate::interval::Interval;
use crate::scalar::Scalar;

/// Energies closer than this to the spectrum are treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Eigenvalues closer than this form a numerically degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-10;

/// Combes–Thomas profiles below this magnitude are excluded from the fit.
pub const PROFILE_FLOOR: f64 = 1e-12;

/// Smallest spectral distance accepted by [`FiniteVolumeOperator::combes_thomas_profile`].
pub const MIN_PROFILE_GAP: f64 = 1e-6;

/// `2d + g·v(u)` on the diagonal, `−1` on nearest-neighbour bonds.
pub fn hamiltonian_matrix<T: Scalar>(region: &Region, values: &[T], coupling: T) -> DMatrix<T> {
    let n = region.len();
    let kinetic = T::from_count(2 * region.dim());
    let mut m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            kinetic + coupling * values[i]
        } else {
            T::zero()
        }
    });
    for &(i, j) in region.bonds() {
        m[(i, j)] = -T::one();
        m[(j, i)] = -T::one();
    }
    m
}

fn eigen_failure<T: Scalar>(m: &DMatrix<T>) -> Error {
    Error::Eigen {
        dim: m.nrows(),
        norm: m.norm().as_f64(),
        max_entry: m.amax().as_f64(),
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<T>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(eigen_failure(m));
    }
    let mut values: Vec<T> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(values)
}

/// Eigenvalues (ascending) with orthonormal eigenvectors as matching columns.
#[derive(Clone, Debug)]
pub struct SpectralData<T: Scalar> {
    eigenvalues: Vec<T>,
    eigenvectors: DMatrix<T>,
}

impl<T: Scalar> SpectralData<T> {
    pub fn decompose(m: &DMatrix<T>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(eigen_failure(m));
        }
        let eig = SymmetricEigen::try_new(m.clone(), T::default_epsilon(), 0)
            .ok_or_else(|| eigen_failure(m))?;
        let n = m.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .expect("finite eigenvalues")
        });
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.eigenvectors
    }

    /// Amplitude `ψ_j(x)` of eigenvector `j` at site index `x`.
    pub fn amplitude(&self, j: usize, x: usize) -> T {
        self.eigenvectors[(x, j)]
    }

    /// dist(E, σ).
    pub fn gap(&self, energy: T) -> T {
        distance_to_spectrum(&self.eigenvalues, energy)
    }

    /// `Tr 1_I(H)`.
    pub fn count_in(&self, window: &Interval<T>) -> usize {
        window.count(&self.eigenvalues)
    }

    /// Distance from eigenvalue `j` to its nearest neighbour in the spectrum.
    pub fn isolation(&self, j: usize) -> T {
        isolation(&self.eigenvalues, j)
    }

    /// `max_j ‖Hψ_j − λ_jψ_j‖₂`.
    pub fn max_residual(&self, m: &DMatrix<T>) -> T {
        (0..self.len())
            .map(|j| {
                let v = self.eigenvectors.column(j);
                (m * v - v * self.eigenvalues[j]).norm()
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `max |ΨᵀΨ − Id|` entrywise.
    pub fn orthonormality_defect(&self) -> T {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        let n = self.len();
        (g - DMatrix::<T>::identity(n, n)).amax()
    }

    /// Runs of consecutive eigenvalues closer than [`CLUSTER_TOL`].
    pub fn clusters(&self) -> Vec<std::ops::Range<usize>> {
        clusters(&self.eigenvalues, T::lit(CLUSTER_TOL))
    }
}

pub fn distance_to_spectrum<T: Scalar>(eigenvalues: &[T], energy: T) -> T {
    eigenvalues
        .iter()
        .map(|l| (*l - energy).abs())
        .fold(T::max_value().expect("bounded scalar"), |a, b| a.min(b))
}

pub(crate) fn isolation<T: Scalar>(values: &[T], j: usize) -> T {
    let mut g = T::max_value().expect("bounded scalar");
    if j > 0 {
        g = g.min(values[j] - values[j - 1]);
    }
    if j + 1 < values.len() {
        g = g.min(values[j + 1] - values[j]);
    }
    g
}

pub(crate) fn clusters<T: Scalar>(values: &[T], tol: T) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for j in 1..=values.len() {
        if j == values.len() || values[j] - values[j - 1] >= tol {
            out.push(start..j);
            start = j;
        }
    }
    out
}

/// `H = −Δ_Λ + g·V` on the field's region together with lazily computed
/// spectral data.
#[derive(Clone, Debug)]
pub struct FiniteVolumeOperator<T: Scalar> {
    field: DisorderField<T>,
    matrix: DMatrix<T>,
    eigenvalues: OnceLock<Result<Vec<T>>>,
    spectrum: OnceLock<Result<SpectralData<T>>>,
}

/// One row of a Combes–Thomas profile: `max |G(E;u,v)|` over `‖v−u‖₁ = r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileRow<T: Scalar> {
    pub distance: usize,
    pub max_green: T,
}

#[derive(Clone, Debug)]
pub struct DecayProfile<T: Scalar> {
    pub energy: T,
    /// δ = dist(E, σ).
    pub gap: T,
    pub rows: Vec<ProfileRow<T>>,
    /// Least-squares slope of `−log|G|` against `r`; `None` with fewer than
    /// two rows above [`PROFILE_FLOOR`].
    pub rate: Option<T>,
    /// Every row satisfies `|G| ≤ (2/δ)·exp(−rate·r·(1−tol))`.
    pub prefactor_bound_holds: bool,
    pub tolerance: T,
}

impl<T: Scalar> DecayProfile<T> {
    pub fn max_green(&self) -> T {
        self.rows
            .iter()
            .map(|r| r.max_green)
            .fold(T::zero(), |a, b| a.max(b))
    }
}

impl<T: Scalar> FiniteVolumeOperator<T> {
    pub fn assemble(field: DisorderField<T>) -> Self {
        let matrix = hamiltonian_matrix(field.region(), field.values(), field.coupling());
        Self {
            field,
            matrix,
            eigenvalues: OnceLock::new(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn field(&self) -> &DisorderField<T> {
        &self.field
    }

    pub fn region(&self) -> &Region {
        self.field.region()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Full eigendecomposition, computed once.
    pub fn spectrum(&self) -> Result<&SpectralData<T>> {
        self.spectrum
            .get_or_init(|| SpectralData::decompose(&self.matrix))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Ascending eigenvalues without eigenvectors, computed once.
    pub fn eigenvalues(&self) -> Result<&[T]> {
        if let Some(Ok(s)) = self.spectrum.get() {
            return Ok(s.eigenvalues());
        }
        self.eigenvalues
            .get_or_init(|| symmetric_eigenvalues(&self.matrix))
            .as_ref()
            .map(|v| v.as_slice())
            .map_err(Clone::clone)
    }

    pub fn gap(&self, energy: T) -> Result<T> {
        Ok(distance_to_spectrum(self.eigenvalues()?, energy))
    }

    fn check_resonance(&self, energy: T) -> Result<T> {
        let gap = self.gap(energy)?;
        if gap <= T::lit(RESONANCE_TOL) {
            return Err(Error::Resonance {
                energy: energy.as_f64(),
                distance: gap.as_f64(),
            });
        }
        Ok(gap)
    }

    fn shifted(&self, energy: T) -> DMatrix<T> {
        let mut a = self.matrix.clone();
        for i in 0..a.nrows() {
            a[(i, i)] -= energy;
        }
        a
    }

    /// Column `G(E; ·, y)` of the resolvent by a direct LU solve.
    pub fn green_column(&self, energy: T, y: &Site) -> Result<DVector<T>> {
        let yi = self.region().require_index(y)?;
        let gap = self.check_resonance(energy)?;
        let mut rhs = DVector::zeros(self.dim());
        rhs[yi] = T::one();
        self.shifted(energy).lu().solve(&rhs).ok_or(Error::Resonance {
            energy: energy.as_f64(),
            distance: gap.as_f64(),
        })
    }

    /// `⟨δ_x, (H − E)^{-1} δ_y⟩`.
    pub fn green_function(&self, energy: T, x: &Site, y: &Site) -> Result<T> {
        let xi = self.region().require_index(x)?;
        Ok(self.green_column(energy, y)?[xi])
    }

    /// Full resolvent `(H − E)^{-1}`.
    pub fn resolvent(&self, energy: T) -> Result<DMatrix<T>> {
        let gap = self.check_resonance(energy)?;
        self.shifted(energy).try_inverse().ok_or(Error::Resonance {
            energy: energy.as_f64(),
            distance: gap.as_f64(),
        })
    }

    /// Shell maxima of `|G(E; u, ·)|` with a fitted exponential rate.
    pub fn combes_thomas_profile(&self, energy: T, u: &Site) -> Result<DecayProfile<T>> {
        let gap = self.gap(energy)?;
        if gap < T::lit(MIN_PROFILE_GAP) {
            return Err(Error::Resonance {
                energy: energy.as_f64(),
                distance: gap.as_f64(),
            });
        }
        let column = self.green_column(energy, u)?;
        let region = self.region();
        let mut shells: Vec<T> = Vec::new();
        for (i, v) in region.sites().iter().enumerate() {
            let r = u.l1_distance(v) as usize;
            if shells.len() <= r {
                shells.resize(r + 1, T::zero());
            }
            shells[r] = shells[r].max(column[i].abs());
        }
        let rows: Vec<ProfileRow<T>> = shells
            .into_iter()
            .enumerate()
            .map(|(distance, max_green)| ProfileRow {
                distance,
                max_green,
            })
            .collect();

        let fit_points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.max_green.as_f64() > PROFILE_FLOOR)
            .map(|r| (r.distance as f64, -r.max_green.as_f64().ln()))
            .collect();
        let rate = crate::stats::least_squares(&fit_points).map(|fit| T::lit(fit.slope));

        let tolerance = T::lit(0.1);
        let two_over_gap = T::lit(2.0) / gap;
        let prefactor_bound_holds = match rate {
            Some(c) => rows.iter().all(|r| {
                let bound =
                    two_over_gap * (-(c * T::from_count(r.distance) * (T::one() - tolerance))).exp();
                r.max_green <= bound
            }),
            None => false,
        };
        Ok(DecayProfile {
            energy,
            gap,
            rows,
            rate,
            prefactor_bound_holds,
            tolerance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, FrozenAssignment, SiteLaw};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn free_line<T: Scalar>(n: usize) -> FiniteVolumeOperator<T> {
        let r = Arc::new(Region::cuboid(Site::d1(0), n).unwrap());
        FiniteVolumeOperator::assemble(DisorderField::zeros(r, SiteLaw::Uniform, T::one()).unwrap())
    }

    fn bernoulli_op(dim: usize, side: usize, g: f64, seed: u64) -> FiniteVolumeOperator<f64> {
        let r = Arc::new(Region::cuboid(Site::origin(dim).unwrap(), side).unwrap());
        let f = sample_field(SiteLaw::bernoulli(0.5).unwrap(), r, &FrozenAssignment::new(), g, seed).unwrap();
        FiniteVolumeOperator::assemble(f)
    }

    /// λ_j = 2 − 2cos(jπ/(n+1)), the Dirichlet path Laplacian.
    fn dirichlet_oracle(n: usize) -> Vec<f64> {
        (1..=n)
            .map(|j| 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect()
    }

    #[test]
    fn assemble_examples() {
        let op = free_line::<f64>(1);
        assert_eq!(op.matrix(), &DMatrix::from_row_slice(1, 1, &[2.0]));
        let op = free_line::<f64>(2);
        assert_eq!(op.matrix(), &DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));

        let r = Arc::new(Region::centered_box(2, 1).unwrap());
        let f = DisorderField::from_values(r, SiteLaw::bernoulli(0.5).unwrap(), vec![1.0], vec![false], 3.0).unwrap();
        assert_eq!(FiniteVolumeOperator::assemble(f).matrix()[(0, 0)], 7.0);
    }

    #[test]
    fn kinetic_structure() {
        let op = bernoulli_op(2, 4, 2.5, 11);
        let m = op.matrix();
        assert_eq!(m, &m.transpose());
        let values = op.field().values();
        for i in 0..m.nrows() {
            let kin_row: f64 = (0..m.ncols()).map(|j| m[(i, j)]).sum::<f64>() - 2.5 * values[i];
            assert!((0.0..=4.0).contains(&kin_row));
            assert_eq!(m[(i, i)], 4.0 + 2.5 * values[i]);
        }
    }

    #[test]
    fn dirichlet_spectrum() {
        for n in 1..=50 {
            let op = free_line::<f64>(n);
            let s = op.spectrum().unwrap();
            for (got, want) in s.eigenvalues().iter().zip(dirichlet_oracle(n)) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
            }
        }
        let s = free_line::<f64>(2).spectrum().unwrap().clone();
        assert_abs_diff_eq!(s.eigenvalues()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues()[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn single_precision_spectrum() {
        let op = free_line::<f32>(12);
        for (got, want) in op.spectrum().unwrap().eigenvalues().iter().zip(dirichlet_oracle(12)) {
            assert!((*got as f64 - want).abs() < 1e-5);
        }
    }

    #[test]
    fn scalar_operator() {
        let r = Arc::new(Region::centered_box(1, 1).unwrap());
        let f = DisorderField::from_values(r, SiteLaw::Uniform, vec![1.0], vec![false], 5.0).unwrap();
        let s: SpectralData<f64> = FiniteVolumeOperator::assemble(f).spectrum().unwrap().clone();
        assert_eq!(s.eigenvalues(), &[7.0]);
        assert_eq!(s.eigenvectors()[(0, 0)].abs(), 1.0);
    }

    #[test]
    fn spectral_invariants() {
        for seed in 0..5 {
            let op = bernoulli_op(2, 5, 3.0, seed);
            let s = op.spectrum().unwrap();
            let norm = op.matrix().norm();
            assert!(s.max_residual(op.matrix()) <= 1e-9 * norm);
            assert!(s.orthonormality_defect() <= 1e-9);
            assert!(s.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
            let values_only = op.eigenvalues().unwrap();
            for (a, b) in values_only.iter().zip(s.eigenvalues()) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn count_in_interval_is_exact() {
        let op = bernoulli_op(2, 4, 1.0, 3);
        let s = op.spectrum().unwrap();
        let w = Interval::new(1.0, 3.0).unwrap();
        let brute = s.eigenvalues().iter().filter(|l| **l >= 1.0 && **l <= 3.0).count();
        assert_eq!(s.count_in(&w), brute);
    }

    #[test]
    fn non_finite_matrix_reports_failure() {
        let m = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0]);
        assert!(matches!(SpectralData::decompose(&m), Err(Error::Eigen { dim: 2, .. })));
        assert!(symmetric_eigenvalues(&m).is_err());
    }

    #[test]
    fn green_examples() {
        let op = free_line::<f64>(1);
        assert_abs_diff_eq!(op.green_function(0.0, &Site::d1(0), &Site::d1(0)).unwrap(), 0.5, epsilon = 1e-15);

        let op = free_line::<f64>(2);
        let g = op.green_function(2.0, &Site::d1(0), &Site::d1(1)).unwrap();
        assert_abs_diff_eq!(g, -1.0, epsilon = 1e-14);

        assert!(matches!(op.green_function(1.0, &Site::d1(0), &Site::d1(0)), Err(Error::Resonance { .. })));
        assert!(matches!(
            op.green_function(0.0, &Site::d1(5), &Site::d1(0)),
            Err(Error::SiteOutsideRegion(_))
        ));
    }

    #[test]
    fn green_symmetric_and_bounded() {
        for seed in 0..4 {
            let op = bernoulli_op(2, 4, 1.5, 100 + seed);
            let e = 2.345;
            let sites = op.region().sites().to_vec();
            let gap = op.gap(e).unwrap();
            for x in sites.iter().step_by(3) {
                for y in sites.iter().step_by(5) {
                    let a = op.green_function(e, x, y).unwrap();
                    let b = op.green_function(e, y, x).unwrap();
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                    assert!(a.abs() <= 1.0 / gap + 1e-8);
                }
            }
            let inv = op.resolvent(e).unwrap();
            let mut shifted = op.matrix().clone();
            for i in 0..shifted.nrows() {
                shifted[(i, i)] -= e;
            }
            let n = shifted.nrows();
            assert!((&inv * shifted - DMatrix::<f64>::identity(n, n)).amax() <= 1e-8);
            assert!(inv.norm() >= 0.0);
            // spectral norm of the resolvent equals 1/gap
            let spec = SpectralData::decompose(&inv).unwrap();
            let op_norm = spec.eigenvalues().iter().fold(0.0f64, |a, b| a.max(b.abs()));
            assert!(op_norm <= 1.0 / gap * (1.0 + 1e-8));
        }
    }

    #[test]
    fn combes_thomas_free_line() {
        let op = free_line::<f64>(21);
        let u = Site::d1(10);
        let p = op.combes_thomas_profile(-1.0, &u).unwrap();
        assert!(p.gap > 1.0);
        assert!(p.rate.unwrap() > 0.0);
        assert!(p.rows[0].max_green <= 1.0 / p.gap);
        let g_uu = op.green_function(-1.0, &u, &u).unwrap().abs();
        assert_abs_diff_eq!(p.rows[0].max_green, g_uu, epsilon = 1e-15);
        assert!(p.prefactor_bound_holds);

        // moving E further from the spectrum does not slow the decay
        let lam_min = op.spectrum().unwrap().eigenvalues()[0];
        let mut last = 0.0;
        for delta in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let rate = op.combes_thomas_profile(lam_min - delta, &u).unwrap().rate.unwrap();
            assert!(rate >= last);
            last = rate;
        }
        assert!(op.combes_thomas_profile(lam_min, &u).is_err());
    }

    #[test]
    fn eigenvalues_monotone_under_site_increase() {
        // exhaustive over Bernoulli fields on 2×2 and 3×3 boxes
        for side in [2usize, 3] {
            let r = Arc::new(Region::cuboid(Site::d2(0, 0), side).unwrap());
            let n = r.len();
            for mask in 0u32..(1 << n) {
                let values: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
                let base = symmetric_eigenvalues(&hamiltonian_matrix(&r, &values, 1.0)).unwrap();
                for x in (0..n).filter(|x| (mask >> x) & 1 == 0) {
                    let mut up = values.clone();
                    up[x] = 1.0;
                    let raised = symmetric_eigenvalues(&hamiltonian_matrix(&r, &up, 1.0)).unwrap();
                    for (lo, hi) in base.iter().zip(&raised) {
                        assert!(hi >= &(lo - 1e-12));
                    }
                }
            }
        }
    }
}
