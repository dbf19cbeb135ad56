//! Desk-scale sampling of the quantitative unique-continuation event on
//! tilted squares with frozen sites.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::disorder::{child_seed, rng_from_seed, sample_field, FrozenAssignment, SiteLaw};
use crate::error::{Error, Result};
use crate::geometry::{delta_regularity, Region, RegularityVerdict, Site, TiltedRegion};
use crate::operator::FiniteVolumeOperator;
use crate::stats::clopper_pearson;

pub const MIN_UCP_SIDE: usize = 8;
pub const MIN_UCP_TRIALS: usize = 100;
pub const UCP_CONFIDENCE: f64 = 0.95;
pub const UCP_PASS_FREQUENCY: f64 = 0.95;

/// Attempts per requested trial before a batch gives up on finding regular
/// frozen patterns.
pub const MAX_ATTEMPTS_PER_TRIAL: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UcpParams {
    pub law: SiteLaw,
    pub coupling: f64,
    pub epsilon: f64,
    pub alpha: f64,
}

impl UcpParams {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Domain(format!("epsilon = {} must lie in (0,1)", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha = {} must be positive", self.alpha)));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::Domain(format!("coupling = {} must be nonnegative", self.coupling)));
        }
        Ok(())
    }
}

/// Disjoint tilted squares of side `⌊ℓ/4⌋` tiling `q`.
pub fn witness_family(q: &TiltedRegion) -> Result<Vec<TiltedRegion>> {
    let side = q.side().ok_or_else(|| Error::Geometry("UCP domain must be a tilted square".into()))?;
    q.subdivide((side / 4).max(1))
}

pub fn check_regularity(q: &TiltedRegion, frozen: &FrozenAssignment, epsilon: f64) -> Result<RegularityVerdict> {
    let domain = Region::tilted(*q)?;
    let set: HashSet<Site> = frozen.keys().copied().collect();
    delta_regularity(&set, &domain, epsilon, &witness_family(q)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UcpTrialRecord {
    pub side: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub coupling: f64,
    pub law: SiteLaw,
    pub seed: u64,
    pub frozen: FrozenAssignment,
    pub regularity: RegularityVerdict,
    /// Eigenpair attaining the growth statistic.
    pub eigen_index: usize,
    pub eigenpairs_tested: usize,
    /// Eigenvectors vanishing on `Q∖F`, which cannot be normalized there.
    pub eigenpairs_skipped: usize,
    /// Smallest fraction of `Q∖F` with `|ψ| ≤ 1` after normalization.
    pub mass_fraction: f64,
    /// Fraction demanded by the normalization clause, `1 − ε(ℓ ln ℓ)^{−1/2}`.
    pub required_fraction: f64,
    pub growth_statistic: f64,
    /// `ln` of the growth statistic; finite even when the statistic underflows.
    pub log_growth: f64,
    pub event: bool,
}

/// One trial: sample the free sites, diagonalize on the tilted square,
/// sup-normalize each eigenvector on `Q∖F` and compare `‖ψ‖_∞(½Q)` with
/// `exp(αℓ ln ℓ)`.
pub fn run_ucp_trial(
    q: &TiltedRegion,
    frozen: &FrozenAssignment,
    params: &UcpParams,
    seed: u64,
) -> Result<UcpTrialRecord> {
    params.validate()?;
    let side = q.side().ok_or_else(|| Error::Geometry("UCP domain must be a tilted square".into()))?;
    if side < MIN_UCP_SIDE {
        return Err(Error::Domain(format!("tilted square side {side} below {MIN_UCP_SIDE}")));
    }
    let regularity = check_regularity(q, frozen, params.epsilon)?;
    if !regularity.regular {
        return Err(Error::IrregularFrozenSet {
            nonsparse: regularity.nonsparse_mass,
            budget: regularity.budget,
        });
    }
    let region = Arc::new(Region::tilted(*q)?);
    let half = q.half()?;
    let inner: Vec<usize> = (0..region.len()).filter(|&i| half.contains(&region.site(i))).collect();
    let field = sample_field(params.law, region.clone(), frozen, params.coupling, seed)?;
    let free: Vec<usize> = (0..region.len()).filter(|&i| !field.is_frozen(i)).collect();
    let op = FiniteVolumeOperator::assemble(field);
    let spec = op.spectrum()?;

    let l = side as f64;
    let log_threshold = params.alpha * l * l.ln();
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut tested = 0;
    let mut skipped = 0;
    let mut mass_fraction: f64 = 1.0;
    for j in 0..spec.len() {
        let norm = free.iter().map(|&i| spec.amplitude(j, i).abs()).fold(0.0, f64::max);
        if norm <= f64::EPSILON {
            skipped += 1;
            continue;
        }
        tested += 1;
        let controlled = free.iter().filter(|&&i| spec.amplitude(j, i).abs() / norm <= 1.0).count();
        mass_fraction = mass_fraction.min(controlled as f64 / free.len() as f64);
        let peak = inner.iter().map(|&i| spec.amplitude(j, i).abs() / norm).fold(0.0, f64::max);
        let log_growth = peak.ln() - log_threshold;
        if log_growth > best.0 {
            best = (log_growth, j);
        }
    }
    let log_growth = best.0;
    Ok(UcpTrialRecord {
        side,
        epsilon: params.epsilon,
        alpha: params.alpha,
        coupling: params.coupling,
        law: params.law,
        seed,
        frozen: frozen.clone(),
        regularity,
        eigen_index: best.1,
        eigenpairs_tested: tested,
        eigenpairs_skipped: skipped,
        mass_fraction,
        required_fraction: 1.0 - params.epsilon / (l * l.ln()).sqrt(),
        growth_statistic: log_growth.exp(),
        log_growth,
        event: log_growth <= 0.0,
    })
}

/// Frozen pattern with each site of `q` frozen independently with
/// probability `fraction`, value drawn from `law`.
pub fn random_frozen_pattern<R: Rng + ?Sized>(
    q: &TiltedRegion,
    fraction: f64,
    law: SiteLaw,
    rng: &mut R,
) -> FrozenAssignment {
    let mut out = FrozenAssignment::new();
    for s in q.sites() {
        if rng.random::<f64>() < fraction {
            out.insert(s, law.sample(rng));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UcpBatchSpec {
    pub side: usize,
    pub params: UcpParams,
    pub frozen_fraction: f64,
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UcpBatch {
    pub spec: UcpBatchSpec,
    pub records: Vec<UcpTrialRecord>,
    /// Frozen patterns discarded as irregular.
    pub rejected: usize,
}

/// Runs trials on `Q = square(0, 0, ℓ)` until `trials` regular frozen
/// patterns have been used. Patterns are screened in attempt order, so the
/// accepted set does not depend on the thread count.
pub fn run_ucp_batch(spec: &UcpBatchSpec) -> Result<UcpBatch> {
    spec.params.validate()?;
    if !(0.0..1.0).contains(&spec.frozen_fraction) {
        return Err(Error::Domain(format!("frozen fraction {} not in [0,1)", spec.frozen_fraction)));
    }
    let q = TiltedRegion::square(0, 0, spec.side)?;
    let max_attempts = spec.trials.saturating_mul(MAX_ATTEMPTS_PER_TRIAL);
    let mut accepted = Vec::with_capacity(spec.trials);
    let mut rejected = 0;
    let mut attempt = 0u64;
    while accepted.len() < spec.trials {
        if attempt as usize >= max_attempts {
            return Err(Error::Precondition(format!(
                "only {} regular frozen patterns in {max_attempts} attempts",
                accepted.len()
            )));
        }
        let attempt_seed = child_seed(spec.master_seed, attempt);
        let frozen = if spec.frozen_fraction > 0.0 {
            let mut rng = rng_from_seed(attempt_seed);
            random_frozen_pattern(&q, spec.frozen_fraction, spec.params.law, &mut rng)
        } else {
            FrozenAssignment::new()
        };
        if check_regularity(&q, &frozen, spec.params.epsilon)?.regular {
            accepted.push((child_seed(attempt_seed, 1), frozen));
        } else {
            rejected += 1;
        }
        attempt += 1;
    }
    let records = accepted
        .par_iter()
        .map(|(seed, frozen)| run_ucp_trial(&q, frozen, &spec.params, *seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(UcpBatch {
        spec: *spec,
        records,
        rejected,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct UcpFrequency {
    pub side: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub trials: usize,
    pub rejected: usize,
    pub successes: usize,
    pub frequency: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `1 − exp(−ε ℓ^{1/4})`, reported for comparison only.
    pub asymptotic_rate: f64,
    pub passes: bool,
}

pub fn ucp_frequency(records: &[UcpTrialRecord], rejected: usize) -> Result<UcpFrequency> {
    if records.len() < MIN_UCP_TRIALS {
        return Err(Error::Precondition(format!(
            "UCP frequency needs at least {MIN_UCP_TRIALS} trials, got {}",
            records.len()
        )));
    }
    let first = &records[0];
    let key = |r: &UcpTrialRecord| (r.side, r.epsilon, r.alpha, r.coupling, r.law);
    if records.iter().any(|r| key(r) != key(first)) {
        return Err(Error::MixedParameters("UCP trials differ in (side, epsilon, alpha, coupling, law)".into()));
    }
    let n = records.len();
    let successes = records.iter().filter(|r| r.event).count();
    let (ci_lo, ci_hi) = clopper_pearson(successes as u64, n as u64, UCP_CONFIDENCE);
    let frequency = successes as f64 / n as f64;
    Ok(UcpFrequency {
        side: first.side,
        epsilon: first.epsilon,
        alpha: first.alpha,
        trials: n,
        rejected,
        successes,
        frequency,
        ci_lo,
        ci_hi,
        asymptotic_rate: 1.0 - (-first.epsilon * (first.side as f64).powf(0.25)).exp(),
        passes: frequency >= UCP_PASS_FREQUENCY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(alpha: f64) -> UcpParams {
        UcpParams {
            law: SiteLaw::bernoulli(0.5).unwrap(),
            coupling: 1.0,
            epsilon: 0.1,
            alpha,
        }
    }

    #[test]
    fn empty_frozen_set_small_square() {
        let q = TiltedRegion::square(0, 0, 8).unwrap();
        let r = run_ucp_trial(&q, &FrozenAssignment::new(), &params(1.0), 3).unwrap();
        assert_eq!(r.eigenpairs_tested, 32);
        assert_eq!(r.eigenpairs_skipped, 0);
        assert!(r.event);
        // ψ ≤ 1 everywhere after sup-normalization on all of Q
        assert!(r.growth_statistic <= (-8.0 * 8f64.ln()).exp() * (1.0 + 1e-12));
        assert_eq!(r.mass_fraction, 1.0);
        assert!(r.mass_fraction >= r.required_fraction);
        assert_eq!(r, run_ucp_trial(&q, &FrozenAssignment::new(), &params(1.0), 3).unwrap());
    }

    #[test]
    fn guards() {
        let q = TiltedRegion::square(0, 0, 6).unwrap();
        assert!(run_ucp_trial(&q, &FrozenAssignment::new(), &params(1.0), 0).is_err());
        let q = TiltedRegion::square(0, 0, 8).unwrap();
        // frozen sites in two different witness squares exceed the 10% budget
        let mut frozen = FrozenAssignment::new();
        frozen.insert(Site::d2(0, 0), 1.0);
        frozen.insert(Site::d2(3, -3), 0.0);
        assert!(matches!(
            run_ucp_trial(&q, &frozen, &params(1.0), 0),
            Err(Error::IrregularFrozenSet { .. })
        ));
    }

    #[test]
    fn single_frozen_site_is_regular() {
        let q = TiltedRegion::square(0, 0, 8).unwrap();
        let mut frozen = FrozenAssignment::new();
        frozen.insert(Site::d2(2, 1), 1.0);
        let r = run_ucp_trial(&q, &frozen, &params(1.0), 9).unwrap();
        assert!(r.regularity.regular);
        assert_eq!(r.eigenpairs_tested + r.eigenpairs_skipped, 32);
        assert!(r.event);
    }

    #[test]
    fn frequency_examples() {
        let q = TiltedRegion::square(0, 0, 8).unwrap();
        let base = run_ucp_trial(&q, &FrozenAssignment::new(), &params(1.0), 0).unwrap();
        let mut all = vec![base.clone(); 100];
        let f = ucp_frequency(&all, 0).unwrap();
        assert_eq!(f.frequency, 1.0);
        assert!(f.passes);

        for r in &mut all {
            r.event = false;
        }
        let f = ucp_frequency(&all, 0).unwrap();
        assert!(!f.passes);
        assert_eq!(f.ci_lo, 0.0);
        assert!((f.ci_hi - 0.0362).abs() < 1e-3);

        assert!(ucp_frequency(&all[..99], 0).is_err());
        all[5].alpha = 2.0;
        assert!(matches!(ucp_frequency(&all, 0), Err(Error::MixedParameters(_))));
    }

    #[test]
    fn batch_is_deterministic_and_counts_rejections() {
        let spec = UcpBatchSpec {
            side: 8,
            params: params(1.0),
            frozen_fraction: 0.05,
            trials: 20,
            master_seed: 77,
        };
        let a = run_ucp_batch(&spec).unwrap();
        assert_eq!(a.records.len(), 20);
        assert!(a.records.iter().all(|r| r.regularity.regular));
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_ucp_batch(&spec).unwrap());
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn event_is_monotone_in_alpha(seed in any::<u64>(), a in 0.01f64..2.0, extra in 0.0f64..2.0) {
            let q = TiltedRegion::square(0, 0, 8).unwrap();
            let mut frozen = FrozenAssignment::new();
            frozen.insert(Site::d2(1, 1), 1.0);
            let lo = run_ucp_trial(&q, &frozen, &params(a), seed).unwrap();
            let hi = run_ucp_trial(&q, &frozen, &params(a + extra), seed).unwrap();
            prop_assert!(hi.log_growth <= lo.log_growth);
            prop_assert!(!lo.event || hi.event);
            prop_assert!(lo.growth_statistic >= 0.0);
        }
    }
}
