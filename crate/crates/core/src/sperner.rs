//! Eigenvalue-window families over free-site Bernoulli configurations,
//! maximal blocking sets and the generalized Sperner bound.

use std::sync::Arc;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::disorder::{DisorderField, FrozenAssignment, SiteLaw};
use crate::error::{Error, Result};
use crate::flip::{track_branches, uniform_grid, RankOnePath};
use crate::geometry::{Region, Site};
use crate::interval::Interval;
use crate::operator::{hamiltonian_matrix, symmetric_eigenvalues};

/// Hard cap on free sites (2ⁿ diagonalizations).
pub const MAX_FREE_SITES: usize = 20;

/// Free-site configurations `A ⊆ S` (bitmask over the free sites in site
/// order) whose spectrum meets the window.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFamily {
    pub free_sites: Vec<Site>,
    pub frozen: FrozenAssignment,
    pub window: Interval<f64>,
    pub coupling: f64,
    /// Sorted member bitmasks.
    pub members: Vec<u32>,
    /// Eigenvalues inside the window for each member.
    pub in_window: Vec<Vec<f64>>,
    is_member: Vec<bool>,
}

impl ConfigFamily {
    pub fn n(&self) -> usize {
        self.free_sites.len()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, mask: u32) -> bool {
        self.is_member.get(mask as usize).copied().unwrap_or(false)
    }

    /// A family given directly by its members, for combinatorial tests.
    pub fn synthetic(n: usize, members: impl IntoIterator<Item = u32>) -> Result<Self> {
        if n > MAX_FREE_SITES {
            return Err(Error::TooManyFreeSites {
                free: n,
                cap: MAX_FREE_SITES,
            });
        }
        let mut is_member = vec![false; 1 << n];
        for m in members {
            if (m as usize) >= is_member.len() {
                return Err(Error::Domain(format!("mask {m:#b} exceeds {n} sites")));
            }
            is_member[m as usize] = true;
        }
        let members: Vec<u32> = (0..1u32 << n).filter(|&m| is_member[m as usize]).collect();
        Ok(Self {
            free_sites: (0..n as i64).map(Site::d1).collect(),
            frozen: FrozenAssignment::new(),
            window: Interval::new(0.0, 0.0)?,
            coupling: 0.0,
            in_window: vec![Vec::new(); members.len()],
            members,
            is_member,
        })
    }

    /// Site values of the configuration `mask`.
    pub fn values(&self, region: &Region, mask: u32) -> Result<Vec<f64>> {
        config_values(region, &self.frozen, &self.free_sites, mask)
    }
}

fn config_values(region: &Region, frozen: &FrozenAssignment, free: &[Site], mask: u32) -> Result<Vec<f64>> {
    let mut values = vec![0.0; region.len()];
    for (s, v) in frozen {
        values[region.require_index(s)?] = *v;
    }
    for (k, s) in free.iter().enumerate() {
        values[region.require_index(s)?] = ((mask >> k) & 1) as f64;
    }
    Ok(values)
}

/// Diagonalizes all `2ⁿ` free-site configurations and keeps those with an
/// eigenvalue in the window.
pub fn enumerate_family(
    region: &Region,
    frozen: &FrozenAssignment,
    law: SiteLaw,
    coupling: f64,
    window: Interval<f64>,
) -> Result<ConfigFamily> {
    if !law.is_bernoulli() {
        return Err(Error::NotBernoulli(law.to_string()));
    }
    for (s, v) in frozen {
        region.require_index(s)?;
        if !law.in_support(*v) {
            return Err(Error::OutsideSupport {
                value: *v,
                law: law.to_string(),
            });
        }
    }
    let free_sites: Vec<Site> = region
        .sites()
        .iter()
        .filter(|s| !frozen.contains_key(s))
        .copied()
        .collect();
    let n = free_sites.len();
    if n > MAX_FREE_SITES {
        return Err(Error::TooManyFreeSites {
            free: n,
            cap: MAX_FREE_SITES,
        });
    }
    let hits: Vec<Vec<f64>> = (0..1u32 << n)
        .into_par_iter()
        .map(|mask| {
            let values = config_values(region, frozen, &free_sites, mask)?;
            let ev = symmetric_eigenvalues(&hamiltonian_matrix(region, &values, coupling))?;
            Ok(ev.into_iter().filter(|e| window.contains(*e)).collect())
        })
        .collect::<Result<_>>()?;
    let is_member: Vec<bool> = hits.iter().map(|h| !h.is_empty()).collect();
    let mut members = Vec::new();
    let mut in_window = Vec::new();
    for (mask, h) in hits.into_iter().enumerate() {
        if !h.is_empty() {
            members.push(mask as u32);
            in_window.push(h);
        }
    }
    Ok(ConfigFamily {
        free_sites,
        frozen: frozen.clone(),
        window,
        coupling,
        members,
        in_window,
        is_member,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockingWitness {
    /// `B_max(A)` for each member, aligned with `family.members`.
    pub blocking: Vec<u32>,
    /// `|B_max(A)| / (n − |A|)`, or 1 for `A = S`.
    pub ratios: Vec<f64>,
    /// Minimum ratio; 1 for the empty family.
    pub rho_star: f64,
}

/// `up[m]` is true iff some member contains `m`.
fn superset_closure(family: &ConfigFamily) -> Vec<bool> {
    let n = family.n();
    let mut up = family.is_member.clone();
    for bit in 0..n {
        let b = 1usize << bit;
        for m in 0..up.len() {
            if m & b == 0 && up[m | b] {
                up[m] = true;
            }
        }
    }
    up
}

/// `B_max(A) = {x ∉ A : no member contains A ∪ {x}}` for every member.
pub fn maximal_blocking(family: &ConfigFamily) -> BlockingWitness {
    let n = family.n();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let up = superset_closure(family);
    let mut blocking = Vec::with_capacity(family.len());
    let mut ratios = Vec::with_capacity(family.len());
    for &a in &family.members {
        let mut b = 0u32;
        for x in 0..n {
            let bit = 1u32 << x;
            if a & bit == 0 && !up[(a | bit) as usize] {
                b |= bit;
            }
        }
        let free = n - a.count_ones() as usize;
        ratios.push(if a == full {
            1.0
        } else {
            b.count_ones() as f64 / free as f64
        });
        blocking.push(b);
    }
    let rho_star = ratios.iter().copied().fold(1.0, f64::min);
    BlockingWitness {
        blocking,
        ratios,
        rho_star,
    }
}

/// Independent check of a witness against the member list: `B ∩ A = ∅`, no
/// member above `A` meets `B`, and `B` cannot be enlarged.
pub fn verify_blocking(family: &ConfigFamily, witness: &BlockingWitness) -> bool {
    let full: u32 = ((1u64 << family.n()) - 1) as u32;
    family
        .members
        .par_iter()
        .zip(witness.blocking.par_iter())
        .all(|(&a, &b)| {
            let union_above = family
                .members
                .iter()
                .filter(|&&m| m & a == a)
                .fold(0u32, |u, &m| u | m);
            b & a == 0 && b & union_above == 0 && (b | union_above) == full
        })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpernerCheck {
    pub size: usize,
    pub n: usize,
    pub rho_star: f64,
    /// `2ⁿ n^{-1/2} / ρ*`; `None` when ρ* = 0.
    pub bound: Option<f64>,
    /// `size / bound`.
    pub slack: Option<f64>,
}

impl SpernerCheck {
    pub fn applicable(&self) -> bool {
        self.bound.is_some()
    }

    /// Vacuous (not applicable) checks count as passing.
    pub fn passes(&self) -> bool {
        self.bound.map_or(true, |b| self.size as f64 <= b)
    }
}

pub fn sperner_bound_check(family: &ConfigFamily, witness: &BlockingWitness) -> SpernerCheck {
    let n = family.n();
    let bound = (witness.rho_star > 0.0).then(|| {
        if n == 0 {
            f64::INFINITY
        } else {
            2f64.powi(n as i32) / (n as f64).sqrt() / witness.rho_star
        }
    });
    SpernerCheck {
        size: family.len(),
        n,
        rho_star: witness.rho_star,
        bound,
        slack: bound.map(|b| family.len() as f64 / b),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WegnerProbability {
    /// `P(σ ∩ I ≠ ∅ | V|_F = v)` under Bernoulli(p) on the free sites.
    pub probability: f64,
    /// `|A|/2ⁿ` as an exact fraction (p = 1/2 only).
    pub exact: Option<Ratio<u64>>,
    /// `n^{-1/2}/ρ*` (p = 1/2 and ρ* > 0 only).
    pub sperner_bound: Option<f64>,
    pub counting_only: bool,
}

pub fn bernoulli_wegner_prob(family: &ConfigFamily, witness: &BlockingWitness, p: f64) -> Result<WegnerProbability> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("Bernoulli parameter {p} outside (0,1)")));
    }
    let n = family.n();
    if p == 0.5 {
        let exact = Ratio::new(family.len() as u64, 1u64 << n);
        let bound = (witness.rho_star > 0.0 && n > 0).then(|| 1.0 / (n as f64).sqrt() / witness.rho_star);
        return Ok(WegnerProbability {
            probability: *exact.numer() as f64 / *exact.denom() as f64,
            exact: Some(exact),
            sperner_bound: bound,
            counting_only: false,
        });
    }
    let probability = family
        .members
        .iter()
        .map(|m| {
            let k = m.count_ones() as i32;
            p.powi(k) * (1.0 - p).powi(n as i32 - k)
        })
        .sum();
    Ok(WegnerProbability {
        probability,
        exact: None,
        sperner_bound: None,
        counting_only: true,
    })
}

/// Amplitude-based blocking compared with the maximal witness for one member.
#[derive(Clone, Debug, PartialEq)]
pub struct MemberComparison {
    pub member: u32,
    /// Free sites `x ∉ A` whose flip path is blocking at level `m_*`.
    pub amplitude_blocking: u32,
    pub maximal_blocking: u32,
    /// Members of `B_amp(A)` whose augmentation `A ∪ {x}` leaves the family.
    pub augment_exits: u32,
    pub broken_paths: u32,
}

impl MemberComparison {
    pub fn included(&self) -> bool {
        self.amplitude_blocking & !self.maximal_blocking == 0
    }

    pub fn all_augmentations_exit(&self) -> bool {
        self.augment_exits == self.amplitude_blocking
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockingComparison {
    pub m_star: f64,
    pub members: Vec<MemberComparison>,
    /// Members where `B_amp ⊄ B_max`.
    pub inclusion_violations: usize,
    /// Single-site augmentations by `B_amp` sites that stay in the family.
    pub augmentations_staying: usize,
    pub augmentations_total: usize,
    /// Members with at least one broken path, excluded from the counts.
    pub excluded: usize,
}

/// Builds `B_amp(A)` from flip paths on every member and tabulates it
/// against `B_max(A)`.
pub fn ucp_blocking_comparison(
    family: &ConfigFamily,
    witness: &BlockingWitness,
    region: Arc<Region>,
    m_star: f64,
    grid_points: usize,
) -> Result<BlockingComparison> {
    let law = SiteLaw::bernoulli(0.5)?;
    let n = family.n();
    let grid = uniform_grid::<f64>(grid_points);
    let frozen_flags: Vec<bool> = region.sites().iter().map(|s| family.frozen.contains_key(s)).collect();
    let members: Vec<MemberComparison> = family
        .members
        .par_iter()
        .zip(witness.blocking.par_iter())
        .map(|(&a, &b_max)| {
            let values = family.values(&region, a)?;
            let field = DisorderField::from_values(region.clone(), law, values, frozen_flags.clone(), family.coupling)?;
            let mut cmp = MemberComparison {
                member: a,
                amplitude_blocking: 0,
                maximal_blocking: b_max,
                augment_exits: 0,
                broken_paths: 0,
            };
            for x in 0..n {
                let bit = 1u32 << x;
                if a & bit != 0 {
                    continue;
                }
                let path = RankOnePath::new(&field, &family.free_sites[x], grid.clone())?;
                let tracking = track_branches(&path)?;
                if tracking.broken_count() > 0 {
                    cmp.broken_paths |= bit;
                    continue;
                }
                let blocking = tracking.blocking_amplitude(&family.window).map_or(true, |m| m >= m_star);
                if blocking {
                    cmp.amplitude_blocking |= bit;
                    if !family.contains(a | bit) {
                        cmp.augment_exits |= bit;
                    }
                }
            }
            Ok(cmp)
        })
        .collect::<Result<_>>()?;
    let counted: Vec<&MemberComparison> = members.iter().filter(|c| c.broken_paths == 0).collect();
    let augmentations_total = counted.iter().map(|c| c.amplitude_blocking.count_ones() as usize).sum();
    let exits: usize = counted.iter().map(|c| c.augment_exits.count_ones() as usize).sum();
    Ok(BlockingComparison {
        m_star,
        inclusion_violations: counted.iter().filter(|c| !c.included()).count(),
        augmentations_staying: augmentations_total - exits,
        augmentations_total,
        excluded: members.len() - counted.len(),
        members,
    })
}
