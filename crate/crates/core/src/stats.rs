//! Small statistics helpers: exact binomial intervals, sample moments and
//! straight-line fits.

use statrs::distribution::{Beta, ContinuousCDF};

/// Exact (Clopper–Pearson) two-sided interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "clopper_pearson needs 0 <= k <= n, n > 0");
    assert!(level > 0.0 && level < 1.0);
    let a = (1.0 - level) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0).expect("valid beta").inverse_cdf(a)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf).expect("valid beta").inverse_cdf(1.0 - a)
    };
    (lo, hi)
}

/// Sample mean and standard error `s/√N` (unbiased `s`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n > 0, "empty sample");
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_err, n }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for exact fits or two points.
    pub slope_se: f64,
    pub points: usize,
}

/// Ordinary least squares `y = a + b·x`. `None` with fewer than two distinct `x`.
pub fn least_squares(points: &[(f64, f64)]) -> Option<LinearFit> {
    weighted_least_squares(&points.iter().map(|&(x, y)| (x, y, 1.0)).collect::<Vec<_>>())
        .map(|mut fit| {
            let n = points.len();
            fit.slope_se = if n > 2 {
                let sxx: f64 = {
                    let mx = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
                    points.iter().map(|p| (p.0 - mx).powi(2)).sum()
                };
                let rss: f64 = points
                    .iter()
                    .map(|&(x, y)| (y - fit.intercept - fit.slope * x).powi(2))
                    .sum();
                (rss / (n - 2) as f64 / sxx).sqrt()
            } else {
                0.0
            };
            fit
        })
}

/// Least squares with per-point standard deviations `σ_i` (weights `1/σ_i²`).
/// The slope error is the propagated `sqrt(1/Σw·Var_w(x))`.
pub fn weighted_least_squares(points: &[(f64, f64, f64)]) -> Option<LinearFit> {
    if points.len() < 2 || points.iter().any(|p| !(p.2 > 0.0)) {
        return None;
    }
    let w: Vec<f64> = points.iter().map(|p| 1.0 / (p.2 * p.2)).collect();
    let sw: f64 = w.iter().sum();
    let mx = points.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = points.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.0 - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * sw * (1.0 + mx * mx) {
        return None;
    }
    let sxy: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        slope_se: (1.0 / sxx).sqrt(),
        points: points.len(),
    })
}
