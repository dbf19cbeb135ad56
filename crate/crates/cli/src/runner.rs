//! Experiment dispatch. Every experiment turns a validated config into
//! [`Outputs`]; the runner owns the worker pool and the output directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;

use anderson_core::box_analysis::{wegner_mc, wegner_scaling_fit, wegner_sweep, WegnerEstimate};
use anderson_core::flip::{
    displacement, ejection_check_tracked, hellmann_feynman_residual, track_branches, EjectionOptions, EjectionVerdict,
    RankOnePath,
};
use anderson_core::msa::{build_schedule, estimate_good_prob, induction_monitor, GoodProbRequest};
use anderson_core::operator::{hamiltonian_matrix, symmetric_eigenvalues};
use anderson_core::sperner::{
    bernoulli_wegner_prob, enumerate_family, maximal_blocking, sperner_bound_check, ucp_blocking_comparison,
    verify_blocking,
};
use anderson_core::stats::{clopper_pearson, MeanEstimate};
use anderson_core::ucp::{run_ucp_batch, ucp_frequency, UcpBatchSpec, UcpParams};
use anderson_core::{
    child_seed, classify_box, sample_field, Error as CoreError, Field, FrozenAssignment, Operator, Region, SiteLaw,
};

use crate::config::{ConfigErrors, ExperimentConfig, ExperimentKind, Scheme};
use crate::output::{float, opt_float, write_outputs, JsonLines, Manifest, Outputs, ResultRow, Table, WrittenFile};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numerical { .. } | RunError::Io(_) => 2,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<WrittenFile>,
    pub results: Vec<ResultRow>,
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> io::Result<R> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(io::Error::other)?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &opts.out_dir {
        cfg.output = dir.clone();
    }
    fs::create_dir_all(&cfg.output)?;
    let mut manifest = Manifest {
        experiment: cfg.kind.to_string(),
        seed: cfg.seed,
        config: cfg.to_portable_text(),
        files: Vec::new(),
        complete: false,
        error: None,
    };
    manifest.write(&cfg.output)?;

    let computed = with_workers(opts.workers, || compute(&cfg))?;
    match computed {
        Ok(outputs) => {
            manifest.files = write_outputs(&cfg.output, &outputs)?;
            manifest.complete = true;
            manifest.write(&cfg.output)?;
            Ok(RunSummary {
                out_dir: cfg.output.clone(),
                files: manifest.files,
                results: outputs.results,
            })
        }
        Err(source) => {
            manifest.error = Some(source.to_string());
            manifest.write(&cfg.output)?;
            Err(RunError::Numerical {
                context: format!("{} experiment failed", cfg.kind),
                source,
            })
        }
    }
}

pub fn compute(cfg: &ExperimentConfig) -> anderson_core::Result<Outputs> {
    match cfg.kind {
        ExperimentKind::Spectrum => spectrum(cfg),
        ExperimentKind::Classify => classify(cfg),
        ExperimentKind::Wegner => wegner(cfg),
        ExperimentKind::Flip => flip(cfg),
        ExperimentKind::Sperner => sperner(cfg),
        ExperimentKind::Msa => msa(cfg),
        ExperimentKind::Ucp => ucp(cfg),
    }
}

fn echo(cfg: &ExperimentConfig) -> String {
    let mut parts = vec![format!("law={}", cfg.law), format!("g={}", cfg.coupling), format!("d={}", cfg.dim)];
    if let Some(g) = &cfg.geometry {
        parts.push(format!("L={}", g.side));
        parts.push(format!("shape={}", g.shape));
    }
    if let Some(e) = cfg.energy {
        parts.push(format!("E={e}"));
    }
    if let Some(i) = &cfg.interval {
        parts.push(format!("I=[{},{}]", i.lo(), i.hi()));
    }
    parts.join(";")
}

fn last_index(n: usize) -> u64 {
    n.saturating_sub(1) as u64
}

fn sample(cfg: &ExperimentConfig, region: &Arc<Region>, i: u64) -> anderson_core::Result<Field> {
    sample_field(cfg.law, region.clone(), &FrozenAssignment::new(), cfg.coupling, child_seed(cfg.seed, i))
}

fn spectrum(cfg: &ExperimentConfig) -> anderson_core::Result<Outputs> {
    let region = Arc::new(cfg.region()?);
    let spectra = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|i| {
            let field = sample(cfg, &region, i)?;
            symmetric_eigenvalues(&hamiltonian_matrix(&region, field.values(), cfg.coupling))
        })
        .collect::<anderson_core::Result<Vec<_>>>()?;
    let mut table = Table::new("eigenvalues.csv", &["realization", "index", "eigenvalue"]);
    for (i, ev) in spectra.iter().enumerate() {
        for (j, &e) in ev.iter().enumerate() {
            table.push(vec![i.to_string(), j.to_string(), float(e)]);
        }
    }
    let lowest = MeanEstimate::from_samples(&spectra.iter().map(|e| e[0]).collect::<Vec<_>>());
    let highest = MeanEstimate::from_samples(&spectra.iter().map(|e| e[e.len() - 1]).collect::<Vec<_>>());
    let p = echo(cfg);
    let hi = last_index(cfg.realizations);
    let results = vec![
        ResultRow::new("spectrum", &p, "lowest_eigenvalue", lowest.mean, cfg.seed)
            .with_uncertainty(lowest.std_err)
            .with_indices(0, hi),
        ResultRow::new("spectrum", &p, "highest_eigenvalue", highest.mean, cfg.seed)
            .with_uncertainty(highest.std_err)
            .with_indices(0, hi),
    ];
    Ok(Outputs {
        results,
        tables: vec![table],
        dumps: Vec::new(),
    })
}

fn classify(cfg: &ExperimentConfig) -> anderson_core::Result<Outputs> {
    let Scheme::Classify { mass, zeta } = cfg.scheme else {
        unreachable!("classify scheme")
    };
    let energy = cfg.energy.expect("validated energy");
    let region = Arc::new(cfg.region()?);
    let records = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|i| {
            let op: Operator = Operator::assemble(sample(cfg, &region, i)?);
            classify_box(&op, i, energy, mass, zeta)
        })
        .collect::<anderson_core::Result<Vec<_>>>()?;
    let mut table = Table::new(
        "classification.csv",
        &["box_id", "side", "energy", "mass", "zeta", "gap", "boundary_green", "nonresonant", "good"],
    );
    for r in &records {
        table.push(vec![
            r.box_id.to_string(),
            r.side.to_string(),
            float(r.energy),
            float(r.mass),
            float(r.zeta),
            float(r.gap),
            opt_float(r.boundary_green),
            r.nonresonant.to_string(),
            r.good.to_string(),
        ]);
    }
    let n = records.len() as f64;
    let good = records.iter().filter(|r| r.good).count() as f64;
    let nonres = records.iter().filter(|r| r.nonresonant).count() as f64;
    let se = |k: f64| (k / n * (1.0 - k / n) / n).sqrt();
    let p = format!("{};m={mass};zeta={zeta}", echo(cfg));
    let hi = last_index(records.len());
    Ok(Outputs {
        results: vec![
            ResultRow::new("classify", &p, "good_fraction", good / n, cfg.seed)
                .with_uncertainty(se(good))
                .with_indices(0, hi),
            ResultRow::new("classify", &p, "nonresonant_fraction", nonres / n, cfg.seed)
                .with_uncertainty(se(nonres))
                .with_indices(0, hi),
        ],
        tables: vec![table],
        dumps: Vec::new(),
    })
}

fn wegner(cfg: &ExperimentConfig) -> anderson_core::Result<Outputs> {
    let Scheme::Wegner { half_widths } = &cfg.scheme else {
        unreachable!("wegner scheme")
    };
    let region = Arc::new(cfg.region()?);
    let estimates: Vec<WegnerEstimate> = if half_widths.is_empty() {
        let window = cfg.interval.expect("validated interval");
        vec![wegner_mc(cfg.law, region, cfg.coupling, window, cfg.realizations, cfg.seed)?]
    } else {
        let center = cfg.energy.expect("validated energy");
        wegner_sweep(cfg.law, region, cfg.coupling, center, half_widths, cfg.realizations, cfg.seed)?
    };
    let mut table = Table::new(
        "wegner.csv",
        &["center", "half_width", "realizations", "mean", "std_err", "bound", "within_3se"],
    );
    let mut results = Vec::new();
    let base = echo(cfg);
    for e in &estimates {
        table.push(vec![
            float(e.interval.center()),
            float(e.interval.half_width()),
            e.realizations().to_string(),
            float(e.mean),
            float(e.std_err),
            float(e.bound),
            e.within_bound(3.0).to_string(),
        ]);
        let p = format!("{base};window=[{},{}]", e.interval.lo(), e.interval.hi());
        results.push(
            ResultRow::new("wegner", &p, "mean_count", e.mean, e.master_seed)
                .with_uncertainty(e.std_err)
                .with_indices(0, last_index(e.realizations())),
        );
        results.push(ResultRow::new("wegner", &p, "bound", e.bound, e.master_seed));
    }
    if estimates.len() >= 3 {
        match wegner_scaling_fit(&estimates) {
            Ok(fit) => {
                if let Some(alpha) = fit.alpha {
                    results.push(ResultRow::new("wegner", &base, "scaling_exponent", alpha, cfg.seed).with_uncertainty(fit.std_err));
                }
            }
            Err(CoreError::Precondition(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Outputs {
        results,
        tables: vec![table],
        dumps: Vec::new(),
    })
}

fn verdict_label(v: &EjectionVerdict<f64>) -> (String, String) {
    match v {
        EjectionVerdict::Pass => ("pass".into(), String::new()),
        EjectionVerdict::Fail { branch, start, end } => ("fail".into(), format!("branch {branch}: {start} -> {end}")),
        EjectionVerdict::Inconclusive { broken } => ("inconclusive".into(), format!("broken branches {broken:?}")),
    }
}

fn flip(cfg: &ExperimentConfig) -> anderson_core::Result<Outputs> {
    let Scheme::Flip { site, grid, m_star } = cfg.scheme else {
        unreachable!("flip scheme")
    };
    let window = cfg.interval.expect("validated interval");
    let region = Arc::new(cfg.region()?);
    struct Realization {
        rows: Vec<Vec<String>>,
        branches: Vec<serde_json::Value>,
        max_hf: f64,
        max_disp: f64,
        trace_error: f64,
        broken: usize,
        ejection: Option<Vec<String>>,
    }
    let per = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|i| {
            let field = sample(cfg, &region, i)?.with_value(&site, 0.0)?;
            let path = RankOnePath::uniform(&field, &site, grid)?;
            let tracking = track_branches(&path)?;
            let mut out = Realization {
                rows: Vec::new(),
                branches: Vec::new(),
                max_hf: 0.0,
                max_disp: 0.0,
                trace_error: (path.trace_shift()? - cfg.coupling).abs(),
                broken: tracking.broken_count(),
                ejection: None,
            };
            for b in &tracking.branches {
                let hf = if b.broken { None } else { Some(hellmann_feynman_residual(b, &path)?) };
                let disp = displacement(b, &path)?;
                if let Some(h) = &hf {
                    out.max_hf = out.max_hf.max(h.max_residual);
                }
                if let Some(d) = disp.discrepancy() {
                    out.max_disp = out.max_disp.max(d);
                }
                out.rows.push(vec![
                    i.to_string(),
                    b.index.to_string(),
                    float(b.start()),
                    float(b.end()),
                    float(disp.delta),
                    opt_float(disp.integral),
                    opt_float(disp.discrepancy()),
                    opt_float(hf.map(|h| h.max_residual)),
                    b.is_simple(anderson_core::flip::SIMPLE_GAP).to_string(),
                    b.broken.to_string(),
                ]);
                out.branches.push(json!({
                    "realization": i,
                    "branch": b.index,
                    "t": b.t,
                    "values": b.values,
                    "amplitudes": b.amplitudes,
                    "positions": b.positions,
                    "broken": b.broken,
                }));
            }
            if let Some(m) = m_star {
                let row = match ejection_check_tracked(&path, &tracking, &window, m, EjectionOptions::default()) {
                    Ok(r) => {
                        let (label, detail) = verdict_label(&r.verdict);
                        vec![i.to_string(), opt_float(r.m_obs), r.checked.to_string(), label, detail]
                    }
                    Err(CoreError::Precondition(msg)) => {
                        vec![i.to_string(), String::new(), "0".into(), "precondition".into(), msg]
                    }
                    Err(e) => return Err(e),
                };
                out.ejection = Some(row);
            }
            Ok(out)
        })
        .collect::<anderson_core::Result<Vec<Realization>>>()?;

    let mut table = Table::new(
        "branches.csv",
        &["realization", "branch", "start", "end", "delta", "integral", "discrepancy", "hf_residual", "simple", "broken"],
    );
    let mut dump = JsonLines::new("branches.jsonl");
    let mut ejection = Table::new("ejection.csv", &["realization", "m_obs", "checked", "verdict", "detail"]);
    for r in &per {
        for row in &r.rows {
            table.push(row.clone());
        }
        for b in &r.branches {
            dump.push(b.clone());
        }
        if let Some(row) = &r.ejection {
            ejection.push(row.clone());
        }
    }
    let p = format!("{};x={site};grid={grid}", echo(cfg));
    let hi = last_index(per.len());
    let fold = |f: fn(&Realization) -> f64| per.iter().map(f).fold(0.0, f64::max);
    let mut results = vec![
        ResultRow::new("flip", &p, "max_hf_residual", fold(|r| r.max_hf), cfg.seed).with_indices(0, hi),
        ResultRow::new("flip", &p, "max_displacement_discrepancy", fold(|r| r.max_disp), cfg.seed).with_indices(0, hi),
        ResultRow::new("flip", &p, "max_trace_error", fold(|r| r.trace_error), cfg.seed).with_indices(0, hi),
        ResultRow::new("flip", &p, "broken_branches", per.iter().map(|r| r.broken).sum::<usize>() as f64, cfg.seed)
            .with_indices(0, hi),
    ];
    let mut tables = vec![table];
    if m_star.is_some() {
        let count = |label: &str| ejection.rows.iter().filter(|r| r[4] == label).count() as f64;
        for label in ["pass", "fail", "inconclusive", "precondition"] {
            results.push(ResultRow::new("flip", &p, &format!("ejection_{label}"), count(label), cfg.seed).with_indices(0, hi));
        }
        tables.push(ejection);
    }
    Ok(Outputs {
        results,
        tables,
        dumps: vec![dump],
    })
}

fn sperner(cfg: &ExperimentConfig) -> anderson_core::Result<Outputs> {
    let Scheme::Sperner { frozen, m_star, grid } = &cfg.scheme else {
        unreachable!("sperner scheme")
    };
    let SiteLaw::Bernoulli { p } = cfg.law else {
        return Err(CoreError::NotBernoulli(cfg.law.to_string()));
    };
    let window = cfg.interval.expect("validated interval");
    let region = Arc::new(cfg.region()?);
    let family = enumerate_family(&region, frozen, cfg.law, cfg.coupling, window)?;
    let witness = maximal_blocking(&family);
    let verified = verify_blocking(&family, &witness);
    let check = sperner_bound_check(&family, &witness);
    let prob = bernoulli_wegner_prob(&family, &witness, p)?;

    let mut dump = JsonLines::new("family.jsonl");
    for (k, &m) in family.members.iter().enumerate() {
        dump.push(json!({
            "mask": m,
            "size": m.count_ones(),
            "in_window": family.in_window[k],
            "b_max": witness.blocking[k],
            "ratio": witness.ratios[k],
        }));
    }
    let mut table = Table::new(
        "sperner.csv",
        &["n", "size", "rho_star", "bound", "slack", "passes", "probability", "exact", "probability_bound", "witness_verified"],
    );
    table.push(vec![
        check.n.to_string(),
        check.size.to_string(),
        float(check.rho_star),
        opt_float(check.bound),
        opt_float(check.slack),
        check.passes().to_string(),
        float(prob.probability),
        prob.exact.map(|r| format!("{}/{}", r.numer(), r.denom())).unwrap_or_default(),
        opt_float(prob.sperner_bound),
        verified.to_string(),
    ]);
    let ps = echo(cfg);
    let mut results = vec![
        ResultRow::new("sperner", &ps, "family_size", check.size as f64, cfg.seed),
        ResultRow::new("sperner", &ps, "rho_star", check.rho_star, cfg.seed),
        ResultRow::new("sperner", &ps, "probability", prob.probability, cfg.seed),
    ];
    if let Some(b) = check.bound {
        results.push(ResultRow::new("sperner", &ps, "sperner_bound", b, cfg.seed));
    }
    let mut tables = vec![table];
    if let Some(m) = *m_star {
        let cmp = ucp_blocking_comparison(&family, &witness, region.clone(), m, *grid)?;
        let mut t = Table::new(
            "blocking_comparison.csv",
            &["member", "amplitude_blocking", "maximal_blocking", "augment_exits", "broken_paths", "included"],
        );
        for c in &cmp.members {
            t.push(vec![
                c.member.to_string(),
                c.amplitude_blocking.to_string(),
                c.maximal_blocking.to_string(),
                c.augment_exits.to_string(),
                c.broken_paths.to_string(),
                c.included().to_string(),
            ]);
        }
        tables.push(t);
        let pm = format!("{ps};m_star={m}");
        results.push(ResultRow::new("sperner", &pm, "inclusion_violations", cmp.inclusion_violations as f64, cfg.seed));
        results.push(ResultRow::new("sperner", &pm, "augmentations_staying", cmp.augmentations_staying as f64, cfg.seed));
        results.push(ResultRow::new("sperner", &pm, "augmentations_total", cmp.augmentations_total as f64, cfg.seed));
        results.push(ResultRow::new("sperner", &pm, "members_excluded", cmp.excluded as f64, cfg.seed));
    }
    Ok(Outputs {
        results,
        tables,
        dumps: vec![dump],
    })
}

fn msa(cfg: &ExperimentConfig) -> anderson_core::Result<Outputs> {
    let Scheme::Msa { l0, eta, kappa, scales, m0, rule, zeta } = cfg.scheme else {
        unreachable!("msa scheme")
    };
    let energy = cfg.energy.expect("validated energy");
    let schedule = build_schedule(cfg.dim, l0, eta, kappa, scales, m0, rule)?;
    let reports = (0..schedule.len())
        .map(|k| {
            let req = GoodProbRequest {
                law: cfg.law,
                coupling: cfg.coupling,
                energy,
                mass: schedule.masses[k],
                zeta,
                realizations: cfg.realizations,
                master_seed: child_seed(cfg.seed, k as u64),
            };
            estimate_good_prob(&schedule, k, &req)
        })
        .collect::<anderson_core::Result<Vec<_>>>()?;
    let mut table = Table::new(
        "msa.csv",
        &["k", "L", "E", "N", "good_count", "p_hat", "ci_lo", "ci_hi", "target", "verdict", "mass"],
    );
    let p = format!("{};eta={eta};kappa={kappa};rule={rule};zeta={zeta}", echo(cfg));
    let mut results = Vec::new();
    for r in &reports {
        table.push(vec![
            r.k.to_string(),
            r.side.to_string(),
            float(r.energy),
            r.realizations.to_string(),
            r.good_count.to_string(),
            float(r.p_hat),
            float(r.ci_lo),
            float(r.ci_hi),
            float(r.target),
            r.verdict.to_string(),
            float(r.mass),
        ]);
        results.push(
            ResultRow::new("msa", format!("{p};L={}", r.side), "good_probability", r.p_hat, child_seed(cfg.seed, r.k as u64))
                .with_uncertainty((r.ci_hi - r.ci_lo) / 2.0)
                .with_indices(0, last_index(r.realizations)),
        );
    }
    if reports.len() >= 2 {
        let summary = induction_monitor(&reports)?;
        results.push(ResultRow::new("msa", &p, "induction_consistent", summary.consistent as u8 as f64, cfg.seed));
    }
    Ok(Outputs {
        results,
        tables: vec![table],
        dumps: Vec::new(),
    })
}

fn ucp(cfg: &ExperimentConfig) -> anderson_core::Result<Outputs> {
    let Scheme::Ucp { sides, epsilon, alpha, frozen_fraction } = &cfg.scheme else {
        unreachable!("ucp scheme")
    };
    let params = UcpParams {
        law: cfg.law,
        coupling: cfg.coupling,
        epsilon: *epsilon,
        alpha: *alpha,
    };
    let mut table = Table::new(
        "ucp.csv",
        &["side", "epsilon", "alpha", "frozen_fraction", "trials", "rejected", "successes", "frequency", "ci_lo", "ci_hi", "asymptotic_rate", "passes"],
    );
    let mut dump = JsonLines::new("trials.jsonl");
    let mut results = Vec::new();
    for (j, &side) in sides.iter().enumerate() {
        let spec = UcpBatchSpec {
            side,
            params,
            frozen_fraction: *frozen_fraction,
            trials: cfg.realizations,
            master_seed: child_seed(cfg.seed, j as u64),
        };
        let batch = run_ucp_batch(&spec)?;
        let freq = ucp_frequency(&batch.records, batch.rejected)?;
        table.push(vec![
            side.to_string(),
            float(*epsilon),
            float(*alpha),
            float(*frozen_fraction),
            freq.trials.to_string(),
            freq.rejected.to_string(),
            freq.successes.to_string(),
            float(freq.frequency),
            float(freq.ci_lo),
            float(freq.ci_hi),
            float(freq.asymptotic_rate),
            freq.passes.to_string(),
        ]);
        for r in &batch.records {
            let frozen: Vec<_> = r.frozen.iter().map(|(s, v)| json!([s.coords(), v])).collect();
            dump.push(json!({
                "side": r.side,
                "seed": r.seed,
                "frozen": frozen,
                "nonsparse_mass": r.regularity.nonsparse_mass,
                "budget": r.regularity.budget,
                "eigen_index": r.eigen_index,
                "eigenpairs_tested": r.eigenpairs_tested,
                "eigenpairs_skipped": r.eigenpairs_skipped,
                "mass_fraction": r.mass_fraction,
                "required_fraction": r.required_fraction,
                "growth_statistic": r.growth_statistic,
                "log_growth": r.log_growth,
                "event": r.event,
            }));
        }
        let (lo, hi) = clopper_pearson(freq.successes as u64, freq.trials as u64, anderson_core::ucp::UCP_CONFIDENCE);
        results.push(
            ResultRow::new(
                "ucp",
                format!("{};side={side};eps={epsilon};alpha={alpha};frozen={frozen_fraction}", echo(cfg)),
                "event_frequency",
                freq.frequency,
                spec.master_seed,
            )
            .with_uncertainty((hi - lo) / 2.0)
            .with_indices(0, last_index(freq.trials)),
        );
    }
    Ok(Outputs {
        results,
        tables: vec![table],
        dumps: vec![dump],
    })
}

/// Byte comparison of two run directories.
pub fn directories_identical(a: &Path, b: &Path) -> io::Result<bool> {
    let list = |d: &Path| -> io::Result<Vec<(String, Vec<u8>)>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(d)? {
            let entry = entry?;
            if entry.file_type()?.is_file() {
                out.push((entry.file_name().to_string_lossy().into_owned(), fs::read(entry.path())?));
            }
        }
        out.sort();
        Ok(out)
    };
    Ok(list(a)? == list(b)?)
}
