//! Box classification (nonresonant / good / bad) and Monte Carlo Wegner
//! estimates with their scaling fits.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::disorder::{child_seed, sample_field, DisorderField, FrozenAssignment, SiteLaw};
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::interval::Interval;
use crate::operator::{hamiltonian_matrix, symmetric_eigenvalues, FiniteVolumeOperator, SpectralData};
use crate::scalar::Scalar;
use crate::stats::{least_squares, weighted_least_squares, MeanEstimate};

/// Minimum number of realizations accepted by [`wegner_mc`].
pub const MIN_WEGNER_REALIZATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationRecord {
    pub box_id: u64,
    pub side: usize,
    pub energy: f64,
    pub mass: f64,
    pub zeta: f64,
    /// dist(E, σ(H_Λ)).
    pub gap: f64,
    /// `max_{y∈∂_-Λ} |G(E; center, y)|`; `None` for resonant boxes.
    pub boundary_green: Option<f64>,
    pub nonresonant: bool,
    pub good: bool,
}

impl ClassificationRecord {
    pub fn resonance_threshold(&self) -> f64 {
        (-(self.side as f64).powf(self.zeta)).exp()
    }

    pub fn decay_threshold(&self) -> f64 {
        (-self.mass * self.side as f64).exp()
    }
}

fn check_open_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {x} must lie in (0,1)")))
    }
}

/// Classifies the box carried by `op` at energy `E`.
pub fn classify_box<T: Scalar>(
    op: &FiniteVolumeOperator<T>,
    box_id: u64,
    energy: T,
    mass: f64,
    zeta: f64,
) -> Result<ClassificationRecord> {
    check_open_unit("m", mass)?;
    check_open_unit("zeta", zeta)?;
    let region = op.region();
    let (side, center) = match (region.side(), region.center()) {
        (Some(l), Some(c)) => (l, c),
        _ => {
            return Err(Error::Geometry(
                "classification needs a box or cuboid region".into(),
            ))
        }
    };
    let gap = op.gap(energy)?.as_f64();
    let mut rec = ClassificationRecord {
        box_id,
        side,
        energy: energy.as_f64(),
        mass,
        zeta,
        gap,
        boundary_green: None,
        nonresonant: false,
        good: false,
    };
    rec.nonresonant = gap >= rec.resonance_threshold();
    if !rec.nonresonant {
        return Ok(rec);
    }
    let column = op.green_column(energy, &center)?;
    let green = region
        .inner_boundary()
        .into_iter()
        .map(|y| column[y].abs().as_f64())
        .fold(0.0, f64::max);
    rec.boundary_green = Some(green);
    rec.good = green <= rec.decay_threshold();
    Ok(rec)
}

/// Monte Carlo estimate of `E[Tr 1_I(H)]` with per-realization counts.
#[derive(Clone, Debug, PartialEq)]
pub struct WegnerEstimate {
    pub law: SiteLaw,
    pub dim: usize,
    pub side: Option<usize>,
    pub volume: usize,
    pub coupling: f64,
    pub interval: Interval<f64>,
    pub master_seed: u64,
    pub counts: Vec<u32>,
    pub mean: f64,
    pub std_err: f64,
    /// `|Λ|·s(μ, |I|)`.
    pub bound: f64,
}

impl WegnerEstimate {
    pub fn realizations(&self) -> usize {
        self.counts.len()
    }

    /// Mean within `bound + k·SE`.
    pub fn within_bound(&self, k_se: f64) -> bool {
        self.mean <= self.bound + k_se * self.std_err
    }
}

/// Eigenvalue count in `window` for one realization.
pub fn window_count(region: &Region, values: &[f64], coupling: f64, window: &Interval<f64>) -> Result<u32> {
    let ev = symmetric_eigenvalues(&hamiltonian_matrix(region, values, coupling))?;
    Ok(window.count(&ev) as u32)
}

/// `N` independent realizations on `region`, realization `i` seeded by
/// `child_seed(master_seed, i)`.
pub fn wegner_mc(
    law: SiteLaw,
    region: Arc<Region>,
    coupling: f64,
    window: Interval<f64>,
    realizations: usize,
    master_seed: u64,
) -> Result<WegnerEstimate> {
    if realizations < MIN_WEGNER_REALIZATIONS {
        return Err(Error::Precondition(format!(
            "wegner_mc needs N >= {MIN_WEGNER_REALIZATIONS}, got {realizations}"
        )));
    }
    let frozen = FrozenAssignment::new();
    let counts = (0..realizations as u64)
        .into_par_iter()
        .map(|i| {
            let field: DisorderField<f64> =
                sample_field(law, region.clone(), &frozen, coupling, child_seed(master_seed, i))?;
            window_count(&region, field.values(), coupling, &window)
        })
        .collect::<Result<Vec<u32>>>()?;
    let samples: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let est = MeanEstimate::from_samples(&samples);
    let bound = region.len() as f64 * law.concentration(window.width())?;
    Ok(WegnerEstimate {
        law,
        dim: region.dim(),
        side: region.side(),
        volume: region.len(),
        coupling,
        interval: window,
        master_seed,
        counts,
        mean: est.mean,
        std_err: est.std_err,
        bound,
    })
}

/// One estimate per half width, all windows centred on `center`. Each width
/// uses its own child seed stream so cells are independent.
pub fn wegner_sweep(
    law: SiteLaw,
    region: Arc<Region>,
    coupling: f64,
    center: f64,
    half_widths: &[f64],
    realizations: usize,
    master_seed: u64,
) -> Result<Vec<WegnerEstimate>> {
    half_widths
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let window = Interval::centered(center, eps)?;
            wegner_mc(law, region.clone(), coupling, window, realizations, child_seed(master_seed, 1 << 32 | k as u64))
        })
        .collect()
}

/// Exact `E[Tr 1_I(H)]` for a Bernoulli law on a small region, by enumerating
/// all `2^|Λ|` configurations.
pub fn bernoulli_exact_mean(region: &Region, p: f64, coupling: f64, window: &Interval<f64>) -> Result<f64> {
    let n = region.len();
    if n > 20 {
        return Err(Error::TooManyFreeSites { free: n, cap: 20 });
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let values: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
        let ones = mask.count_ones() as i32;
        let weight = p.powi(ones) * (1.0 - p).powi(n as i32 - ones);
        total += weight * window_count(region, &values, coupling, window)? as f64;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    /// Slope of `log(mean)` against `log|I|`; a lower bound when `degenerate`.
    pub alpha: Option<f64>,
    pub std_err: f64,
    /// `alpha ± 1.96·std_err`.
    pub ci: Option<(f64, f64)>,
    /// Some means were zero and were left out of the fit.
    pub degenerate: bool,
    pub points_used: usize,
}

/// Fits the Wegner exponent over estimates at several widths.
pub fn wegner_scaling_fit(estimates: &[WegnerEstimate]) -> Result<ScalingFit> {
    if estimates.len() < 3 {
        return Err(Error::Precondition(format!(
            "scaling fit needs at least 3 widths, got {}",
            estimates.len()
        )));
    }
    let first = &estimates[0];
    for e in &estimates[1..] {
        if e.law != first.law || e.volume != first.volume || e.dim != first.dim || e.coupling != first.coupling {
            return Err(Error::MixedParameters("estimates differ in law, box or coupling".into()));
        }
        if (e.interval.center() - first.interval.center()).abs() > 1e-12 {
            return Err(Error::MixedParameters("estimates differ in window centre".into()));
        }
    }
    let widths: Vec<f64> = estimates.iter().map(|e| e.interval.width()).collect();
    let (wmin, wmax) = widths
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &w| (lo.min(w), hi.max(w)));
    if !(wmin > 0.0) || wmax / wmin < 10.0 * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "widths must span a decade, got [{wmin}, {wmax}]"
        )));
    }

    let positive: Vec<&WegnerEstimate> = estimates.iter().filter(|e| e.mean > 0.0).collect();
    let degenerate = positive.len() < estimates.len();
    let fit = if positive.iter().all(|e| e.std_err > 0.0) {
        let pts: Vec<(f64, f64, f64)> = positive
            .iter()
            .map(|e| (e.interval.width().ln(), e.mean.ln(), e.std_err / e.mean))
            .collect();
        weighted_least_squares(&pts)
    } else {
        let pts: Vec<(f64, f64)> = positive
            .iter()
            .map(|e| (e.interval.width().ln(), e.mean.ln()))
            .collect();
        least_squares(&pts)
    };
    Ok(match fit {
        Some(f) => ScalingFit {
            alpha: Some(f.slope),
            std_err: f.slope_se,
            ci: Some((f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se)),
            degenerate,
            points_used: f.points,
        },
        None => ScalingFit {
            alpha: None,
            std_err: f64::NAN,
            ci: None,
            degenerate: true,
            points_used: positive.len(),
        },
    })
}

/// Site-sum decomposition of `Tr 1_I(H)` for one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteSumCheck {
    pub trace: usize,
    /// `⟨δ_x, 1_I(H) δ_x⟩` for every site.
    pub diagonal: Vec<f64>,
    /// `N_I` of each single-site-varied operator at the current value.
    pub per_site_counts: Vec<usize>,
}

impl SiteSumCheck {
    pub fn holds(&self, tol: f64) -> bool {
        let sum: f64 = self.diagonal.iter().sum();
        (sum - self.trace as f64).abs() <= tol
            && self.diagonal.iter().all(|&d| d >= -tol && d <= 1.0 + tol)
            && self
                .diagonal
                .iter()
                .zip(&self.per_site_counts)
                .all(|(&d, &c)| d <= c as f64 + tol)
            && self.trace <= self.per_site_counts.iter().sum::<usize>()
    }
}

/// Spectral-projection site sum: `Tr 1_I = Σ_x ⟨δ_x,1_I δ_x⟩ ≤ Σ_x N_I(H^{(x)})`.
pub fn site_sum_check<T: Scalar>(field: &DisorderField<T>, window: &Interval<T>) -> Result<SiteSumCheck> {
    let op = FiniteVolumeOperator::assemble(field.clone());
    let spec: &SpectralData<T> = op.spectrum()?;
    let n = spec.len();
    let inside: Vec<usize> = (0..n).filter(|&j| window.contains(spec.eigenvalues()[j])).collect();
    let psi: &DMatrix<T> = spec.eigenvectors();
    let diagonal: Vec<f64> = (0..n)
        .map(|x| inside.iter().map(|&j| psi[(x, j)].as_f64().powi(2)).sum())
        .collect();
    // H^{(x)} at the current ω_x is H itself; each term is the full count.
    let per_site_counts = vec![inside.len(); n];
    Ok(SiteSumCheck {
        trace: inside.len(),
        diagonal,
        per_site_counts,
    })
}
