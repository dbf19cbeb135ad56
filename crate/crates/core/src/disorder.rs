//! Single-site laws, their concentration function, and seeded disorder fields.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Region, Site};
use crate::scalar::Scalar;

/// Law of the i.i.d. single-site values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SiteLaw {
    /// Atoms at 0 and 1, `P(1) = p`.
    Bernoulli { p: f64 },
    /// CDF `t^α` on `[0,1]`.
    HolderPower { alpha: f64 },
    Uniform,
}

impl SiteLaw {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("Bernoulli p={p} not in (0,1)")));
        }
        Ok(Self::Bernoulli { p })
    }

    pub fn holder(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("Hölder alpha={alpha} not in (0,1]")));
        }
        Ok(Self::HolderPower { alpha })
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self, Self::Bernoulli { .. })
    }

    /// Hölder exponent of the CDF; `None` for atomic laws.
    pub fn holder_exponent(&self) -> Option<f64> {
        match *self {
            Self::Bernoulli { .. } => None,
            Self::HolderPower { alpha } => Some(alpha),
            Self::Uniform => Some(1.0),
        }
    }

    /// `s(μ,ε) = sup_E μ([E−ε, E+ε])`, in closed form.
    pub fn concentration(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("concentration needs ε > 0, got {eps}")));
        }
        Ok(match *self {
            Self::Bernoulli { p } => {
                if eps < 0.5 {
                    p.max(1.0 - p)
                } else {
                    1.0
                }
            }
            // the CDF is concave, so the sup sits at the window [0, 2ε]
            Self::HolderPower { alpha } => (2.0 * eps).powf(alpha).min(1.0),
            Self::Uniform => (2.0 * eps).min(1.0),
        })
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            Self::Bernoulli { p } => {
                if t < 0.0 {
                    0.0
                } else if t < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Self::HolderPower { alpha } => t.clamp(0.0, 1.0).powf(alpha),
            Self::Uniform => t.clamp(0.0, 1.0),
        }
    }

    pub fn in_support(&self, v: f64) -> bool {
        match self {
            Self::Bernoulli { .. } => v == 0.0 || v == 1.0,
            _ => (0.0..=1.0).contains(&v),
        }
    }

    /// One draw; Hölder values by inverse CDF `U^{1/α}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match *self {
            Self::Bernoulli { p } => {
                if u < p {
                    1.0
                } else {
                    0.0
                }
            }
            Self::HolderPower { alpha } => u.powf(1.0 / alpha),
            Self::Uniform => u,
        }
    }
}

impl fmt::Display for SiteLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bernoulli { p } => write!(f, "bernoulli:p={p}"),
            Self::HolderPower { alpha } => write!(f, "holder:alpha={alpha}"),
            Self::Uniform => write!(f, "uniform"),
        }
    }
}

impl FromStr for SiteLaw {
    type Err = Error;

    /// `bernoulli:p=0.5`, `holder:alpha=0.5`, `uniform`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            what: "site law",
            input: s.to_string(),
        };
        let s = s.trim();
        let (kind, params) = match s.split_once(':') {
            Some((k, p)) => (k.trim(), Some(p.trim())),
            None => (s, None),
        };
        let param = |name: &str| -> Result<f64> {
            let (k, v) = params.and_then(|p| p.split_once('=')).ok_or_else(bad)?;
            if k.trim() != name {
                return Err(bad());
            }
            v.trim().parse::<f64>().map_err(|_| bad())
        };
        match kind {
            "bernoulli" => Self::bernoulli(param("p")?),
            "holder" => Self::holder(param("alpha")?),
            "uniform" if params.is_none() => Ok(Self::Uniform),
            _ => Err(bad()),
        }
    }
}

/// Derives the seed of realization `index` from a master seed.
///
/// SplitMix64 finalizer applied to `master + (index + 1)·γ`, with γ the
/// 64-bit golden-ratio increment. Order-independent by construction.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Values fixed on the frozen sites F.
pub type FrozenAssignment = BTreeMap<Site, f64>;

/// One realization of the site values on a region, split into frozen and
/// free sites.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderField<T: Scalar> {
    region: Arc<Region>,
    law: SiteLaw,
    values: Vec<T>,
    frozen: Vec<bool>,
    coupling: T,
}

impl<T: Scalar> DisorderField<T> {
    /// Builds a field from explicit values. `frozen[i]` marks site `i` frozen.
    pub fn from_values(
        region: Arc<Region>,
        law: SiteLaw,
        values: Vec<T>,
        frozen: Vec<bool>,
        coupling: T,
    ) -> Result<Self> {
        if values.len() != region.len() || frozen.len() != region.len() {
            return Err(Error::Domain(format!(
                "field of {} values / {} flags on a region of {} sites",
                values.len(),
                frozen.len(),
                region.len()
            )));
        }
        if coupling < T::zero() {
            return Err(Error::Domain(format!("coupling {coupling} is negative")));
        }
        if let Some(v) = values.iter().find(|v| !law.in_support(v.as_f64())) {
            return Err(Error::OutsideSupport {
                value: v.as_f64(),
                law: law.to_string(),
            });
        }
        Ok(Self {
            region,
            law,
            values,
            frozen,
            coupling,
        })
    }

    /// All sites free, all values zero.
    pub fn zeros(region: Arc<Region>, law: SiteLaw, coupling: T) -> Result<Self> {
        let n = region.len();
        Self::from_values(region, law, vec![T::zero(); n], vec![false; n], coupling)
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn law(&self) -> SiteLaw {
        self.law
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    pub fn value(&self, s: &Site) -> Result<T> {
        Ok(self.values[self.region.require_index(s)?])
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_sites(&self) -> Vec<Site> {
        self.split(true)
    }

    pub fn free_sites(&self) -> Vec<Site> {
        self.split(false)
    }

    fn split(&self, frozen: bool) -> Vec<Site> {
        self.region
            .sites()
            .iter()
            .zip(&self.frozen)
            .filter(|(_, f)| **f == frozen)
            .map(|(s, _)| *s)
            .collect()
    }

    /// Same field with one value replaced; used to build flip paths.
    pub fn with_value(&self, s: &Site, v: T) -> Result<Self> {
        let i = self.region.require_index(s)?;
        if !self.law.in_support(v.as_f64()) {
            return Err(Error::OutsideSupport {
                value: v.as_f64(),
                law: self.law.to_string(),
            });
        }
        let mut out = self.clone();
        out.values[i] = v;
        Ok(out)
    }

    /// Toggles the Bernoulli value at a free site.
    pub fn flip(&self, s: &Site) -> Result<Self> {
        if !self.law.is_bernoulli() {
            return Err(Error::NotBernoulli(self.law.to_string()));
        }
        let i = self.region.require_index(s)?;
        if self.frozen[i] {
            return Err(Error::FrozenSite(*s));
        }
        let mut out = self.clone();
        out.values[i] = T::one() - out.values[i];
        Ok(out)
    }
}

/// Samples free sites i.i.d. from `law` in site order; frozen sites take the
/// assigned values.
pub fn sample_field<T: Scalar>(
    law: SiteLaw,
    region: Arc<Region>,
    frozen: &FrozenAssignment,
    coupling: T,
    seed: u64,
) -> Result<DisorderField<T>> {
    let mut flags = vec![false; region.len()];
    let mut values = vec![T::zero(); region.len()];
    for (s, v) in frozen {
        let i = region.require_index(s)?;
        if !law.in_support(*v) {
            return Err(Error::OutsideSupport {
                value: *v,
                law: law.to_string(),
            });
        }
        flags[i] = true;
        values[i] = T::lit(*v);
    }
    let mut rng = rng_from_seed(seed);
    for (value, _) in values.iter_mut().zip(&flags).filter(|(_, f)| !**f) {
        *value = T::lit(law.sample(&mut rng));
    }
    DisorderField::from_values(region, law, values, flags, coupling)
}
