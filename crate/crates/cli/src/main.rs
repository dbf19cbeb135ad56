use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anderson_lab::config::{parse_config, ExperimentKind};
use anderson_lab::runner::{run_experiment, with_workers, RunOptions};
use anderson_lab::verify::{run_all, VerifyOptions, CRITERIA};

#[derive(Parser)]
#[command(name = "anderson-lab", version, about = "Finite-volume Anderson model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of sampled operators.
    Spectrum(RunArgs),
    /// Good/bad box classification.
    Classify(RunArgs),
    /// Monte Carlo Wegner estimates.
    Wegner(RunArgs),
    /// Rank-one flip paths, branch tracking and ejection checks.
    Flip(RunArgs),
    /// Window families, blocking sets and the Sperner bound.
    Sperner(RunArgs),
    /// Per-scale good-box probabilities.
    Msa(RunArgs),
    /// Unique-continuation event frequencies.
    Ucp(RunArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated criterion numbers; all when omitted.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
    /// Keeps reproducibility runs under this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn run(kind: ExperimentKind, args: RunArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("{}: invalid configuration\n{errors}", args.config.display());
            return ExitCode::from(1);
        }
    };
    if cfg.kind != kind {
        eprintln!("{} configures `{}`, not `{kind}`", args.config.display(), cfg.kind);
        return ExitCode::from(1);
    }
    let opts = RunOptions {
        out_dir: args.out,
        seed: args.seed,
        workers: args.workers,
    };
    match run_experiment(&cfg, &opts) {
        Ok(summary) => {
            for r in &summary.results {
                match r.uncertainty {
                    Some(u) => println!("{} {} = {:.6e} ± {:.2e}  [{}]", r.experiment, r.metric, r.value, u, r.params),
                    None => println!("{} {} = {:.6e}  [{}]", r.experiment, r.metric, r.value, r.params),
                }
            }
            println!("wrote {} files to {}", summary.files.len() + 1, summary.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn verify(args: VerifyArgs) -> ExitCode {
    let ids = if args.criteria.is_empty() { CRITERIA.to_vec() } else { args.criteria };
    let opts = VerifyOptions { scratch: args.out };
    let outcomes = match with_workers(args.workers, || run_all(&ids, &opts)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    for o in &outcomes {
        println!("{o}");
    }
    if outcomes.iter().all(|o| o.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Spectrum(a) => run(ExperimentKind::Spectrum, a),
        Command::Classify(a) => run(ExperimentKind::Classify, a),
        Command::Wegner(a) => run(ExperimentKind::Wegner, a),
        Command::Flip(a) => run(ExperimentKind::Flip, a),
        Command::Sperner(a) => run(ExperimentKind::Sperner, a),
        Command::Msa(a) => run(ExperimentKind::Msa, a),
        Command::Ucp(a) => run(ExperimentKind::Ucp, a),
        Command::Verify(a) => verify(a),
    }
}
