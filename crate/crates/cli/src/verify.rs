//! Built-in acceptance checks, numbered 1–12. Each check runs at its full
//! stated size and tolerance.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use anderson_core::box_analysis::{wegner_mc, wegner_scaling_fit, wegner_sweep};
use anderson_core::flip::{
    admissible_window, displacement, ejection_check_tracked, hellmann_feynman_residual, track_branches, EjectionOptions,
    EjectionVerdict, SIMPLE_GAP,
};
use anderson_core::msa::{build_schedule, estimate_good_prob, GoodProbRequest, MassRule, ScaleReport};
use anderson_core::operator::{hamiltonian_matrix, symmetric_eigenvalues};
use anderson_core::sperner::{
    bernoulli_wegner_prob, enumerate_family, maximal_blocking, sperner_bound_check, verify_blocking, ConfigFamily,
};
use anderson_core::ucp::{run_ucp_batch, ucp_frequency, UcpBatchSpec, UcpParams};
use anderson_core::{
    child_seed, sample_field, Field, FlipPath, FrozenAssignment, Interval, Operator, Region, Result,
    Site, SiteLaw,
};

use crate::config::parse_config;
use crate::runner::{directories_identical, run_experiment, RunOptions};

pub const CRITERIA: [u8; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {}: {} [{}] ({:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "free Laplacian spectrum",
        2 => "Wegner bound",
        3 => "Wegner scaling exponent",
        4 => "Hellmann-Feynman derivative",
        5 => "displacement identity and trace sum",
        6 => "branch ejection",
        7 => "generalized Sperner bound",
        8 => "Bernoulli-Wegner probability",
        9 => "Combes-Thomas decay",
        10 => "initial length scale probe",
        11 => "UCP event frequency",
        12 => "reproducibility across worker counts",
        _ => "unknown criterion",
    }
}

/// Options shared by all checks.
#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Directory for the reproducibility runs; a temporary one when `None`.
    pub scratch: Option<PathBuf>,
}

pub fn run_criterion(id: u8, opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let result: Result<(bool, String)> = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        11 => criterion_11(),
        12 => criterion_12(opts),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        title: title(id),
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

pub fn run_all(ids: &[u8], opts: &VerifyOptions) -> Vec<CriterionOutcome> {
    ids.iter().map(|&id| run_criterion(id, opts)).collect()
}

fn criterion_1() -> Result<(bool, String)> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in 1..=50usize {
        let region = Region::cuboid(Site::d1(0), n)?;
        let ev = symmetric_eigenvalues(&hamiltonian_matrix(&region, &vec![0.0; n], 0.0))?;
        for (j, e) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            worst = worst.max((e - exact).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-10 && elapsed < 1.0, format!("max error {worst:.2e}, {elapsed:.3}s")))
}

const WEGNER_SEED: u64 = 0x5745_474E;
const WEGNER_CENTER: f64 = 1.0;

fn criterion_2() -> Result<(bool, String)> {
    let mut cells = 0;
    let mut failures = Vec::new();
    let mut worst_margin = f64::NEG_INFINITY;
    for alpha in [0.5, 1.0] {
        let law = SiteLaw::holder(alpha)?;
        for side in [6usize, 10] {
            let region = Arc::new(Region::cuboid(Site::d2(0, 0), side)?);
            for width in [0.02, 0.04, 0.08] {
                let window = Interval::centered(WEGNER_CENTER, width / 2.0)?;
                let seed = child_seed(WEGNER_SEED, cells);
                let est = wegner_mc(law, region.clone(), 1.0, window, 2000, seed)?;
                cells += 1;
                let margin = (est.mean - est.bound - 3.0 * est.std_err) / est.bound;
                worst_margin = worst_margin.max(margin);
                if !est.within_bound(3.0) {
                    failures.push(format!("alpha={alpha} L={side} |I|={width}: {:.4} > {:.4}", est.mean, est.bound));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{cells} cells, largest (mean − bound − 3SE)/bound = {worst_margin:.3}")
    } else {
        failures.join("; ")
    };
    Ok((failures.is_empty(), detail))
}

fn criterion_3() -> Result<(bool, String)> {
    let law = SiteLaw::holder(0.5)?;
    let region = Arc::new(Region::cuboid(Site::d2(0, 0), 10)?);
    let est = wegner_sweep(law, region, 1000.0, 4.0, &[0.1, 0.2, 0.5, 1.0], 2000, WEGNER_SEED ^ 3)?;
    let fit = wegner_scaling_fit(&est)?;
    match fit.alpha {
        Some(a) => Ok((
            (0.3..=0.7).contains(&a),
            format!("alpha = {a:.3} ± {:.3} over {} widths", fit.std_err, fit.points_used),
        )),
        None => Ok((false, "fit degenerate".into())),
    }
}

/// A random rank-one path whose branches are all tracked and simple.
pub struct FlipInstance {
    pub path: FlipPath,
    pub tracking: anderson_core::flip::BranchTracking<f64>,
}

const FLIP_SEED: u64 = 0x464C_4950;
const FLIP_INSTANCES: usize = 100;
const FLIP_GRID: usize = 41;

fn flip_instances() -> Result<&'static [FlipInstance]> {
    static CELL: OnceLock<Result<Vec<FlipInstance>>> = OnceLock::new();
    CELL.get_or_init(|| {
        let law = SiteLaw::bernoulli(0.5)?;
        let build = |attempt: u64| -> Result<Option<FlipInstance>> {
            let seed = child_seed(FLIP_SEED, attempt);
            let region = if attempt % 2 == 0 {
                Region::cuboid(Site::d1(0), 2 + (child_seed(seed, 2) % 7) as usize)?
            } else {
                Region::cuboid(Site::d2(0, 0), 3)?
            };
            let region = Arc::new(region);
            let x = region.site((child_seed(seed, 3) % region.len() as u64) as usize);
            let field: Field = sample_field(law, region, &FrozenAssignment::new(), 1.0, child_seed(seed, 1))?;
            let path = FlipPath::uniform(&field, &x, FLIP_GRID)?;
            let tracking = track_branches(&path)?;
            let simple = tracking.branches.iter().all(|b| b.is_simple(SIMPLE_GAP));
            Ok(simple.then_some(FlipInstance { path, tracking }))
        };
        let mut out = Vec::with_capacity(FLIP_INSTANCES);
        let mut attempt = 0;
        while out.len() < FLIP_INSTANCES {
            // batches keep the accepted set independent of thread count
            let batch: Vec<Option<FlipInstance>> = (attempt..attempt + 32)
                .into_par_iter()
                .map(build)
                .collect::<Result<_>>()?;
            out.extend(batch.into_iter().flatten());
            attempt += 32;
        }
        out.truncate(FLIP_INSTANCES);
        Ok(out)
    })
    .as_ref()
    .map(|v| v.as_slice())
    .map_err(Clone::clone)
}

fn criterion_4() -> Result<(bool, String)> {
    let instances = flip_instances()?;
    let mut worst = 0.0f64;
    let mut evaluated = 0;
    for inst in instances {
        for b in &inst.tracking.branches {
            let r = hellmann_feynman_residual(b, &inst.path)?;
            worst = worst.max(r.max_residual);
            evaluated += r.evaluated;
        }
    }
    Ok((
        worst <= 1e-6,
        format!("{} instances, {evaluated} points, max residual {worst:.2e}", instances.len()),
    ))
}

fn criterion_5() -> Result<(bool, String)> {
    let instances = flip_instances()?;
    let mut worst_disp = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut branches = 0;
    for inst in instances {
        for b in &inst.tracking.branches {
            let d = displacement(b, &inst.path)?;
            if let Some(err) = d.discrepancy() {
                worst_disp = worst_disp.max(err);
                branches += 1;
            }
        }
        worst_trace = worst_trace.max((inst.path.trace_shift()? - inst.path.coupling()).abs());
    }
    Ok((
        worst_disp <= 1e-8 && worst_trace <= 1e-9,
        format!("{branches} branches, max displacement error {worst_disp:.2e}, max trace error {worst_trace:.2e}"),
    ))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EjectionTally {
    pub paths: usize,
    pub checks: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    /// Branches whose window could not be made admissible.
    pub skipped: usize,
}

impl EjectionTally {
    fn add(mut self, o: Self) -> Self {
        self.paths += o.paths;
        self.checks += o.checks;
        self.pass += o.pass;
        self.fail += o.fail;
        self.inconclusive += o.inconclusive;
        self.skipped += o.skipped;
        self
    }
}

/// Every Bernoulli configuration of the 3×3 box, every site, every branch:
/// the window is centred on the branch start and shrunk until admissible.
pub fn ejection_sweep(grid: usize, initial_half_width: f64) -> Result<EjectionTally> {
    let region = Arc::new(Region::cuboid(Site::d2(0, 0), 3)?);
    let law = SiteLaw::bernoulli(0.5)?;
    let n = region.len();
    let tallies = (0u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            let values: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
            let field = Field::from_values(region.clone(), law, values, vec![false; n], 1.0)?;
            let mut t = EjectionTally::default();
            for x in region.sites() {
                let path = FlipPath::uniform(&field, x, grid)?;
                let tracking = track_branches(&path)?;
                t.paths += 1;
                for b in &tracking.branches {
                    let Some((window, m_obs)) = admissible_window(&tracking, 1.0, b.start(), initial_half_width) else {
                        t.skipped += 1;
                        continue;
                    };
                    let m_star = m_obs.unwrap_or(1.0);
                    let report = ejection_check_tracked(&path, &tracking, &window, m_star, EjectionOptions::default())?;
                    t.checks += 1;
                    match report.verdict {
                        EjectionVerdict::Pass => t.pass += 1,
                        EjectionVerdict::Fail { .. } => t.fail += 1,
                        EjectionVerdict::Inconclusive { .. } => t.inconclusive += 1,
                    }
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tallies.into_iter().fold(EjectionTally::default(), EjectionTally::add))
}

fn criterion_6() -> Result<(bool, String)> {
    let t = ejection_sweep(FLIP_GRID, 0.25)?;
    let rate = t.inconclusive as f64 / t.checks.max(1) as f64;
    Ok((
        t.fail == 0 && rate < 0.05 && t.checks > 0,
        format!(
            "{} paths, {} checks: {} pass, {} fail, {} inconclusive ({:.2}%), {} skipped",
            t.paths,
            t.checks,
            t.pass,
            t.fail,
            t.inconclusive,
            100.0 * rate,
            t.skipped
        ),
    ))
}

#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub label: String,
    pub family: ConfigFamily,
    pub rho_star: f64,
    pub bound: Option<f64>,
    pub witness_verified: bool,
    pub probability: f64,
    pub probability_bound: Option<f64>,
}

fn frozen(entries: &[(Site, f64)]) -> FrozenAssignment {
    entries.iter().copied().collect()
}

/// The (box, frozen pattern, window) triples of the Sperner sweep.
pub fn sperner_triples() -> Result<Vec<(String, Region, FrozenAssignment, Interval<f64>)>> {
    let mut shapes: Vec<(String, Region, FrozenAssignment)> = Vec::new();
    for side in [6usize, 10, 14] {
        shapes.push((format!("chain {side}"), Region::cuboid(Site::d1(0), side)?, FrozenAssignment::new()));
    }
    let sq = |l| Region::cuboid(Site::d2(0, 0), l);
    shapes.push(("2x2".into(), sq(2)?, FrozenAssignment::new()));
    shapes.push(("3x3".into(), sq(3)?, FrozenAssignment::new()));
    shapes.push(("3x3 corner on".into(), sq(3)?, frozen(&[(Site::d2(0, 0), 1.0)])));
    shapes.push(("3x3 centre off".into(), sq(3)?, frozen(&[(Site::d2(1, 1), 0.0)])));
    shapes.push((
        "3x3 diagonal".into(),
        sq(3)?,
        frozen(&[(Site::d2(0, 0), 0.0), (Site::d2(2, 2), 1.0)]),
    ));
    shapes.push((
        "4x4 corners".into(),
        sq(4)?,
        frozen(&[(Site::d2(0, 0), 1.0), (Site::d2(3, 3), 0.0)]),
    ));
    shapes.push((
        "4x4 centre".into(),
        sq(4)?,
        frozen(&[(Site::d2(1, 1), 1.0), (Site::d2(2, 2), 1.0)]),
    ));
    shapes.push(("2x2x2".into(), Region::cuboid(Site::d3(0, 0, 0), 2)?, FrozenAssignment::new()));
    let mut out = Vec::new();
    for (label, region, fz) in shapes {
        for center in [0.5, 1.5, 2.5, 3.5, 4.5] {
            out.push((format!("{label} I={center}±0.1"), region.clone(), fz.clone(), Interval::centered(center, 0.1)?));
        }
    }
    Ok(out)
}

pub const SPERNER_COUPLING: f64 = 1.0;

fn sperner_sweep() -> Result<&'static [SweepEntry]> {
    static CELL: OnceLock<Result<Vec<SweepEntry>>> = OnceLock::new();
    CELL.get_or_init(|| {
        let law = SiteLaw::bernoulli(0.5)?;
        sperner_triples()?
            .into_iter()
            .map(|(label, region, fz, window)| {
                let family = enumerate_family(&region, &fz, law, SPERNER_COUPLING, window)?;
                let witness = maximal_blocking(&family);
                let check = sperner_bound_check(&family, &witness);
                let prob = bernoulli_wegner_prob(&family, &witness, 0.5)?;
                Ok(SweepEntry {
                    label,
                    witness_verified: verify_blocking(&family, &witness),
                    rho_star: check.rho_star,
                    bound: check.bound,
                    probability: prob.probability,
                    probability_bound: prob.sperner_bound,
                    family,
                })
            })
            .collect()
    })
    .as_ref()
    .map(|v| v.as_slice())
    .map_err(Clone::clone)
}

fn criterion_7() -> Result<(bool, String)> {
    let sweep = sperner_sweep()?;
    let mut exceptions = Vec::new();
    let mut applicable = 0;
    let mut max_slack = 0.0f64;
    for e in sweep {
        if !e.witness_verified {
            exceptions.push(format!("{}: witness fails re-verification", e.label));
        }
        if let Some(b) = e.bound {
            applicable += 1;
            max_slack = max_slack.max(e.family.len() as f64 / b);
            if e.family.len() as f64 > b {
                exceptions.push(format!("{}: |A| = {} > {b:.3}", e.label, e.family.len()));
            }
        }
    }
    let mut mid_layer_ok = true;
    for n in 2..=12usize {
        let k = n / 2;
        let family = ConfigFamily::synthetic(n, (0u32..1 << n).filter(|m| m.count_ones() as usize == k))?;
        let witness = maximal_blocking(&family);
        let check = sperner_bound_check(&family, &witness);
        if witness.rho_star != 1.0 || !check.passes() || !check.applicable() {
            mid_layer_ok = false;
            exceptions.push(format!("mid-layer n={n}: rho*={} size={}", witness.rho_star, check.size));
        }
    }
    Ok((
        exceptions.is_empty() && sweep.len() >= 50 && mid_layer_ok,
        if exceptions.is_empty() {
            format!("{} triples, {applicable} with rho* > 0, max |A|/bound = {max_slack:.3}; mid-layer n=2..12 pass", sweep.len())
        } else {
            exceptions.join("; ")
        },
    ))
}

fn criterion_8() -> Result<(bool, String)> {
    let law = SiteLaw::bernoulli(0.5)?;
    let region = Region::cuboid(Site::d1(0), 1)?;
    let family = enumerate_family(&region, &FrozenAssignment::new(), law, 1.0, Interval::new(1.9, 2.1)?)?;
    let witness = maximal_blocking(&family);
    let prob = bernoulli_wegner_prob(&family, &witness, 0.5)?;
    let single = prob.exact.map(|r| (*r.numer(), *r.denom())) == Some((1, 2)) && prob.probability == 0.5;
    let sweep = sperner_sweep()?;
    let mut violations = 0;
    let mut checked = 0;
    for e in sweep {
        if let Some(b) = e.probability_bound {
            checked += 1;
            let exact = e.family.len() as f64 / (1u64 << e.family.n()) as f64;
            if e.probability > b || e.probability != exact {
                violations += 1;
            }
        }
    }
    Ok((
        single && violations == 0,
        format!(
            "1x1 probability {} (exact {}); {checked} sweep families bounded, {violations} violations",
            prob.probability,
            prob.exact.map(|r| format!("{}/{}", r.numer(), r.denom())).unwrap_or_else(|| "n/a".into())
        ),
    ))
}

fn criterion_9() -> Result<(bool, String)> {
    let n = 41;
    let region = Arc::new(Region::cuboid(Site::d1(0), n)?);
    let op = Operator::assemble(Field::zeros(region.clone(), SiteLaw::Uniform, 0.0)?);
    let bottom = op.eigenvalues()?[0];
    let u = region.site(n / 2);
    let mut rates = Vec::new();
    let mut ok = true;
    let mut parts = Vec::new();
    for delta in [0.5, 1.0, 2.0] {
        let profile = op.combes_thomas_profile(bottom - delta, &u)?;
        let rate = profile.rate.unwrap_or(f64::NAN);
        let max_green = profile.max_green();
        ok &= rate > 0.0 && max_green <= 2.0 / delta;
        rates.push(rate);
        parts.push(format!("δ={delta}: c={rate:.4}, max|G|={max_green:.3}"));
    }
    ok &= rates.windows(2).all(|w| w[1] >= w[0]);
    Ok((ok, parts.join(", ")))
}

pub const ILS_SEED: u64 = 0x494C_5300;

/// Good-box estimate at side `L` with the target `1 − L^{-4}`.
pub fn ils_probe(side: usize, realizations: usize) -> Result<ScaleReport> {
    let schedule = build_schedule(2, side, 0.1, 4.5, 1, 0.3, MassRule::Constant)?;
    let req = GoodProbRequest {
        law: SiteLaw::bernoulli(0.5)?,
        coupling: 20.0,
        energy: 0.5,
        mass: 0.3,
        zeta: 0.5,
        realizations,
        master_seed: child_seed(ILS_SEED, side as u64),
    };
    let r = estimate_good_prob(&schedule, 0, &req)?;
    let target = 1.0 - (side as f64).powi(-4);
    Ok(ScaleReport::from_counts(0, side, r.energy, r.mass, r.good_count, r.realizations, target))
}

fn criterion_10() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for side in [9usize, 15] {
        let r = ils_probe(side, 1000)?;
        ok &= r.ci_lo >= r.target;
        parts.push(format!(
            "L={side}: {}/{} good, 99% lower bound {:.5} vs target {:.5}",
            r.good_count, r.realizations, r.ci_lo, r.target
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_11() -> Result<(bool, String)> {
    let params = UcpParams {
        law: SiteLaw::bernoulli(0.5)?,
        coupling: 1.0,
        epsilon: 0.1,
        alpha: 1.0,
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (j, side) in [8usize, 12, 16].into_iter().enumerate() {
        for (k, fraction) in [0.0, 0.05].into_iter().enumerate() {
            let spec = UcpBatchSpec {
                side,
                params,
                frozen_fraction: fraction,
                trials: 100,
                master_seed: child_seed(0x5543_5000, (2 * j + k) as u64),
            };
            let batch = run_ucp_batch(&spec)?;
            let f = ucp_frequency(&batch.records, batch.rejected)?;
            ok &= f.passes;
            parts.push(format!(
                "ℓ={side} F={}: {}/{} (rejected {})",
                if fraction == 0.0 { "∅" } else { "5%" },
                f.successes,
                f.trials,
                f.rejected
            ));
        }
    }
    Ok((ok, parts.join(", ")))
}

/// Configurations rerun under different worker counts.
pub const REPRO_CONFIGS: [&str; 7] = [
    "experiment = spectrum\nseed = 1\nlaw = uniform\ncoupling = 2\nrealizations = 8\ngeometry.dim = 2\ngeometry.side = 4\n",
    "experiment = classify\nseed = 2\nlaw = bernoulli:p=0.5\ncoupling = 5\nrealizations = 64\ngeometry.dim = 2\n\
     geometry.side = 5\ngeometry.shape = box\nenergy = 0.5\nclassify.mass = 0.3\n",
    "experiment = wegner\nseed = 3\nlaw = holder:alpha=0.5\ncoupling = 1\nrealizations = 200\ngeometry.dim = 2\n\
     geometry.side = 6\nenergy = 1.0\nwegner.half_widths = 0.01; 0.02; 0.05; 0.1\n",
    "experiment = flip\nseed = 4\nlaw = bernoulli:p=0.5\ncoupling = 1\nrealizations = 6\ngeometry.dim = 2\n\
     geometry.side = 3\ninterval = 2.0 ± 0.01\nflip.site = 1,1\nflip.m_star = 0.3\n",
    "experiment = sperner\nseed = 5\nlaw = bernoulli:p=0.5\ncoupling = 1\ngeometry.dim = 2\ngeometry.side = 3\n\
     interval = 2.5 ± 0.1\nsperner.frozen = 0,0:1\nsperner.m_star = 0.3\n",
    "experiment = msa\nseed = 6\nlaw = bernoulli:p=0.5\ncoupling = 20\nrealizations = 200\ngeometry.dim = 2\n\
     energy = 0.5\nmsa.l0 = 5\nmsa.eta = 0.1\nmsa.kappa = 4.5\nmsa.scales = 2\nmsa.m0 = 0.3\n",
    "experiment = ucp\nseed = 7\nlaw = bernoulli:p=0.5\ncoupling = 1\nrealizations = 100\ngeometry.dim = 2\n\
     ucp.sides = 8; 12\nucp.epsilon = 0.1\nucp.frozen_fraction = 0.05\n",
];

/// Runs every reproducibility config with 1 and 4 workers under `scratch`
/// and compares the output directories byte for byte.
pub fn reproducibility_check(scratch: &Path) -> Result<Vec<(String, bool)>> {
    let mut out = Vec::new();
    for text in REPRO_CONFIGS {
        let cfg = parse_config(text).map_err(|e| anderson_core::Error::Precondition(e.to_string()))?;
        let mut dirs = Vec::new();
        for workers in [1usize, 4] {
            let dir = scratch.join(format!("{}-w{workers}", cfg.kind));
            let opts = RunOptions {
                out_dir: Some(dir.clone()),
                seed: None,
                workers: Some(workers),
            };
            run_experiment(&cfg, &opts).map_err(|e| anderson_core::Error::Precondition(e.to_string()))?;
            dirs.push(dir);
        }
        let same = directories_identical(&dirs[0], &dirs[1])
            .map_err(|e| anderson_core::Error::Precondition(e.to_string()))?;
        out.push((cfg.kind.to_string(), same));
    }
    Ok(out)
}

fn criterion_12(opts: &VerifyOptions) -> Result<(bool, String)> {
    let (scratch, temporary) = match &opts.scratch {
        Some(p) => (p.join("reproducibility"), false),
        None => (std::env::temp_dir().join(format!("anderson-lab-verify-{}", std::process::id())), true),
    };
    let result = reproducibility_check(&scratch);
    if temporary {
        let _ = std::fs::remove_dir_all(&scratch);
    }
    let rows = result?;
    let ok = rows.iter().all(|(_, same)| *same);
    let detail = rows
        .iter()
        .map(|(k, same)| format!("{k} {}", if *same { "identical" } else { "DIFFERENT" }))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((ok, format!("workers 1 vs 4: {detail}")))
}
