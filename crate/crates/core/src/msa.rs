//! Multiscale schedule, per-scale good-box probability estimates and the
//! induction monitor.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::box_analysis::classify_box;
use crate::disorder::{child_seed, sample_field, FrozenAssignment, SiteLaw};
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::operator::FiniteVolumeOperator;
use crate::stats::clopper_pearson;

/// Minimum number of realizations per scale.
pub const MIN_SCALE_REALIZATIONS: usize = 200;

/// Confidence level of the per-scale binomial interval.
pub const SCALE_CONFIDENCE: f64 = 0.99;

/// How the mass parameter decays from one scale to the next. All rules are
/// floored at `m₀/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MassRule {
    /// `m_{k+1} = m_k (1 − 1/ln L_k)`.
    LogarithmicLoss,
    Constant,
    /// `m_{k+1} = r·m_k`.
    Geometric { ratio: f64 },
}

impl Default for MassRule {
    fn default() -> Self {
        MassRule::LogarithmicLoss
    }
}

impl MassRule {
    pub fn next(&self, m: f64, side: usize, floor: f64) -> f64 {
        let raw = match *self {
            MassRule::LogarithmicLoss => m * (1.0 - 1.0 / (side as f64).ln()),
            MassRule::Constant => m,
            MassRule::Geometric { ratio } => m * ratio,
        };
        raw.max(floor)
    }
}

impl fmt::Display for MassRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassRule::LogarithmicLoss => write!(f, "log"),
            MassRule::Constant => write!(f, "constant"),
            MassRule::Geometric { ratio } => write!(f, "geometric:r={ratio}"),
        }
    }
}

impl FromStr for MassRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Parse {
            what: "mass rule",
            input: s.to_string(),
        };
        match s.trim() {
            "log" => Ok(MassRule::LogarithmicLoss),
            "constant" => Ok(MassRule::Constant),
            other => {
                let ratio: f64 = other
                    .strip_prefix("geometric:r=")
                    .ok_or_else(err)?
                    .parse()
                    .map_err(|_| err())?;
                if ratio > 0.0 && ratio <= 1.0 {
                    Ok(MassRule::Geometric { ratio })
                } else {
                    Err(err())
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleSchedule {
    pub dim: usize,
    pub eta: f64,
    pub kappa: f64,
    pub m0: f64,
    pub rule: MassRule,
    pub sides: Vec<usize>,
    pub masses: Vec<f64>,
}

impl ScaleSchedule {
    pub fn len(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }

    pub fn target(&self, k: usize) -> f64 {
        1.0 - (self.sides[k] as f64).powf(-self.kappa)
    }

    pub fn mass_floor(&self) -> f64 {
        self.m0 / 2.0
    }
}

/// Smallest odd integer `≥ L^{1+η}`.
pub fn next_side(side: usize, eta: f64) -> usize {
    let raw = (side as f64).powf(1.0 + eta);
    let mut next = (raw - 1e-9).ceil() as usize;
    if next % 2 == 0 {
        next += 1;
    }
    next.max(side + 2)
}

pub fn build_schedule(
    dim: usize,
    l0: usize,
    eta: f64,
    kappa: f64,
    count: usize,
    m0: f64,
    rule: MassRule,
) -> Result<ScaleSchedule> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Domain(format!("dimension {dim} not in 1..=3")));
    }
    if !(eta > 0.0 && eta <= 0.1) {
        return Err(Error::Domain(format!("eta = {eta} must lie in (0, 1/10]")));
    }
    if !(kappa > 2.0 * dim as f64) {
        return Err(Error::Domain(format!("kappa = {kappa} must exceed 2d = {}", 2 * dim)));
    }
    if l0 < 5 || l0 % 2 == 0 {
        return Err(Error::Domain(format!("L0 = {l0} must be odd and at least 5")));
    }
    if count == 0 {
        return Err(Error::Domain("schedule needs at least one scale".into()));
    }
    if !(m0 > 0.0 && m0 < 1.0) {
        return Err(Error::Domain(format!("m0 = {m0} must lie in (0,1)")));
    }
    let mut sides = vec![l0];
    let mut masses = vec![m0];
    for k in 1..count {
        sides.push(next_side(sides[k - 1], eta));
        masses.push(rule.next(masses[k - 1], sides[k - 1], m0 / 2.0));
    }
    Ok(ScaleSchedule {
        dim,
        eta,
        kappa,
        m0,
        rule,
        sides,
        masses,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Pass iff the lower bound meets the target, fail iff the upper bound is
/// below it.
pub fn verdict(ci_lo: f64, ci_hi: f64, target: f64) -> Verdict {
    if ci_lo >= target {
        Verdict::Pass
    } else if ci_hi < target {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleReport {
    pub k: usize,
    pub side: usize,
    pub energy: f64,
    pub mass: f64,
    pub realizations: usize,
    pub good_count: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub target: f64,
    pub verdict: Verdict,
}

impl ScaleReport {
    pub fn from_counts(k: usize, side: usize, energy: f64, mass: f64, good: usize, n: usize, target: f64) -> Self {
        let (ci_lo, ci_hi) = clopper_pearson(good as u64, n as u64, SCALE_CONFIDENCE);
        Self {
            k,
            side,
            energy,
            mass,
            realizations: n,
            good_count: good,
            p_hat: good as f64 / n as f64,
            ci_lo,
            ci_hi,
            target,
            verdict: verdict(ci_lo, ci_hi, target),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoodProbRequest {
    pub law: SiteLaw,
    pub coupling: f64,
    pub energy: f64,
    pub mass: f64,
    pub zeta: f64,
    pub realizations: usize,
    pub master_seed: u64,
}

/// Classifies `N` independent boxes of side `L_k` and tallies good ones.
pub fn estimate_good_prob(schedule: &ScaleSchedule, k: usize, req: &GoodProbRequest) -> Result<ScaleReport> {
    if k >= schedule.len() {
        return Err(Error::Domain(format!("scale {k} beyond schedule of {}", schedule.len())));
    }
    if req.realizations < MIN_SCALE_REALIZATIONS {
        return Err(Error::Precondition(format!(
            "good-box estimate needs N >= {MIN_SCALE_REALIZATIONS}, got {}",
            req.realizations
        )));
    }
    let side = schedule.sides[k];
    let region = Arc::new(Region::centered_box(schedule.dim, side)?);
    let frozen = FrozenAssignment::new();
    let good = (0..req.realizations as u64)
        .into_par_iter()
        .map(|i| {
            let field = sample_field(req.law, region.clone(), &frozen, req.coupling, child_seed(req.master_seed, i))?;
            let op = FiniteVolumeOperator::assemble(field);
            Ok(classify_box(&op, i, req.energy, req.mass, req.zeta)?.good as usize)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    Ok(ScaleReport::from_counts(k, side, req.energy, req.mass, good, req.realizations, schedule.target(k)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct InductionSummary {
    pub rows: Vec<ScaleReport>,
    pub masses_nonincreasing: bool,
    /// First scale (index into `rows`) whose verdict is fail.
    pub first_failure: Option<usize>,
    /// No scale fails and masses do not increase.
    pub consistent: bool,
}

pub fn induction_monitor(reports: &[ScaleReport]) -> Result<InductionSummary> {
    if reports.len() < 2 {
        return Err(Error::Precondition("induction monitor needs at least two scales".into()));
    }
    if reports.iter().any(|r| r.energy != reports[0].energy) {
        return Err(Error::MixedParameters("scale reports at different energies".into()));
    }
    let masses_nonincreasing = reports.windows(2).all(|w| w[1].mass <= w[0].mass);
    let first_failure = reports.iter().position(|r| r.verdict == Verdict::Fail);
    Ok(InductionSummary {
        rows: reports.to_vec(),
        masses_nonincreasing,
        first_failure,
        consistent: masses_nonincreasing && first_failure.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schedule_examples() {
        let s = build_schedule(2, 11, 0.1, 5.0, 3, 0.5, MassRule::default()).unwrap();
        assert_eq!(s.sides[0], 11);
        assert_eq!(s.sides[1], 15);
        assert!(build_schedule(2, 11, 0.15, 5.0, 3, 0.5, MassRule::default()).is_err());
        let one = build_schedule(2, 11, 0.05, 5.0, 1, 0.5, MassRule::default()).unwrap();
        assert_eq!(one.sides, vec![11]);
        assert!(build_schedule(2, 11, 0.05, 4.0, 2, 0.5, MassRule::default()).is_err());
        assert!(build_schedule(2, 10, 0.05, 5.0, 2, 0.5, MassRule::default()).is_err());
    }

    #[test]
    fn mass_rules() {
        let s = build_schedule(1, 5, 0.09, 3.0, 8, 0.8, MassRule::LogarithmicLoss).unwrap();
        assert!((s.masses[1] - (0.8 * (1.0 - 1.0 / 5f64.ln())).max(0.4)).abs() < 1e-15);
        let big = build_schedule(1, 101, 0.09, 3.0, 2, 0.8, MassRule::LogarithmicLoss).unwrap();
        assert!((big.masses[1] - 0.8 * (1.0 - 1.0 / 101f64.ln())).abs() < 1e-15);
        assert!(s.masses.iter().all(|&m| m >= 0.4));
        let c = build_schedule(1, 5, 0.09, 3.0, 4, 0.8, MassRule::Constant).unwrap();
        assert!(c.masses.iter().all(|&m| m == 0.8));
        let g = build_schedule(1, 5, 0.09, 3.0, 3, 0.8, MassRule::Geometric { ratio: 0.9 }).unwrap();
        assert!((g.masses[2] - 0.648).abs() < 1e-15);
        for r in ["log", "constant", "geometric:r=0.9"] {
            assert_eq!(r.parse::<MassRule>().unwrap().to_string(), r);
        }
        assert!("geometric:r=1.5".parse::<MassRule>().is_err());
    }

    proptest! {
        #[test]
        fn schedule_invariants(l0 in (2usize..40).prop_map(|k| 2 * k + 1), eta in 0.001f64..0.099, m0 in 0.01f64..0.99, count in 1usize..7) {
            let s = build_schedule(2, l0, eta, 4.5, count, m0, MassRule::default()).unwrap();
            prop_assert!(s.sides.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(s.sides.iter().all(|l| l % 2 == 1));
            prop_assert!(s.sides.windows(2).all(|w| w[1] as f64 >= (w[0] as f64).powf(1.0 + eta) - 1e-9));
            prop_assert!(s.masses.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(s.masses.iter().all(|&m| m >= m0 / 2.0 && m > 0.0));
        }
    }

    fn request(coupling: f64, energy: f64) -> GoodProbRequest {
        GoodProbRequest {
            law: SiteLaw::bernoulli(0.5).unwrap(),
            coupling,
            energy,
            mass: 0.3,
            zeta: 0.5,
            realizations: 200,
            master_seed: 11,
        }
    }

    #[test]
    fn free_operator_far_below_spectrum_is_always_good() {
        let s = build_schedule(2, 5, 0.05, 5.0, 1, 0.3, MassRule::default()).unwrap();
        let r = estimate_good_prob(&s, 0, &request(0.0, -20.0)).unwrap();
        assert_eq!(r.good_count, 200);
        assert_eq!(r.p_hat, 1.0);
        assert_eq!(r.ci_hi, 1.0);
        assert!(r.ci_lo <= r.p_hat);
    }

    #[test]
    fn free_operator_at_eigenvalue_is_never_good() {
        let s = build_schedule(1, 5, 0.05, 3.0, 1, 0.3, MassRule::default()).unwrap();
        // 2 − 2cos(3π/6) = 2 is an eigenvalue of the free 5-chain
        let r = estimate_good_prob(&s, 0, &request(0.0, 2.0)).unwrap();
        assert_eq!(r.p_hat, 0.0);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn realization_floor() {
        let s = build_schedule(1, 5, 0.05, 3.0, 1, 0.3, MassRule::default()).unwrap();
        let mut req = request(1.0, 0.5);
        req.realizations = 199;
        assert!(estimate_good_prob(&s, 0, &req).is_err());
    }

    #[test]
    fn reports_are_reproducible() {
        let s = build_schedule(2, 5, 0.05, 5.0, 1, 0.3, MassRule::default()).unwrap();
        let a = estimate_good_prob(&s, 0, &request(3.0, 0.5)).unwrap();
        let b = estimate_good_prob(&s, 0, &request(3.0, 0.5)).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_lo <= a.p_hat && a.p_hat <= a.ci_hi);
    }

    fn synthetic(k: usize, good: usize, n: usize, target: f64, mass: f64) -> ScaleReport {
        ScaleReport::from_counts(k, 5 + 2 * k, 0.5, mass, good, n, target)
    }

    #[test]
    fn monitor_examples() {
        let both = [synthetic(0, 1000, 1000, 0.99, 0.5), synthetic(1, 1000, 1000, 0.99, 0.4)];
        assert_eq!(both[0].verdict, Verdict::Pass);
        assert!(induction_monitor(&both).unwrap().consistent);

        let broken = [synthetic(0, 1000, 1000, 0.99, 0.5), synthetic(1, 500, 1000, 0.99, 0.4)];
        let s = induction_monitor(&broken).unwrap();
        assert!(!s.consistent);
        assert_eq!(s.first_failure, Some(1));

        for kappa_target in [0.9, 0.999, 1.0 - 1e-9] {
            let ones = [synthetic(0, 300, 300, kappa_target, 0.5), synthetic(1, 300, 300, kappa_target, 0.45)];
            assert!(induction_monitor(&ones).unwrap().consistent);
        }
        assert!(induction_monitor(&both[..1]).is_err());
    }
}
