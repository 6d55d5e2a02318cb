//! Command-line front end of the Klein-Gordon scattering laboratory.
//!
//! Every subcommand loads one JSON experiment config, runs its pipeline
//! stage, and writes `report.json` plus per-probe CSVs (and optionally
//! binary snapshots) into the output directory. Exit status 0 means every
//! probe marked `required` passed.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use kglab_core::harness::report::render_report;
use kglab_core::harness::runner::{run_experiment, Stage};
use kglab_core::harness::ExperimentConfig;

#[derive(Parser)]
#[command(name = "kglab", about = "Klein-Gordon scattering laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json, CSVs, and snapshots.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads recorded in the reproducibility envelope. The current
    /// pipeline computes sequentially; the value must be at least 1.
    #[arg(long)]
    threads: Option<usize>,
    /// Root seed override for all stochastic probes.
    #[arg(long)]
    seed: Option<u64>,
    /// Permit exponents outside proven windows and skip the no-wrap check.
    #[arg(long)]
    exploratory: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured data and store snapshots plus monitors.
    Simulate(StageArgs),
    /// Certify the channel wave operator and run the interaction-decay
    /// probes.
    WaveOp(StageArgs),
    /// Dispersive sup-norm decay and weighted local-decay probes.
    DecayCheck(StageArgs),
    /// Commutator-scaling and velocity-bound probes.
    CommutatorCheck(StageArgs),
    /// Free/weak decomposition with the localization fit.
    Decompose(StageArgs),
    /// Render a stored report.json as a human-readable summary.
    Report {
        /// Path to a report.json (or a directory containing one).
        path: PathBuf,
    },
}

fn load_config(args: &StageArgs) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = ExperimentConfig::from_json(&text)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(threads) = args.threads {
        config.threads = threads;
    }
    if args.exploratory {
        config.exploratory = true;
    }
    config.validate()?;
    Ok(config)
}

fn run_stage(stage: Stage, args: &StageArgs) -> Result<bool> {
    let config = load_config(args)?;
    let artifacts = run_experiment(&config, stage, &args.out)?;
    for outcome in &artifacts.report.outcomes {
        println!(
            "[{:^12}] {} ({})",
            outcome.verdict,
            outcome.id,
            if outcome.required { "required" } else { "optional" }
        );
    }
    if let Some(reason) = &artifacts.report.aborted {
        println!("aborted: {reason}");
    }
    println!("status: {}  (report: {})", artifacts.report.status, artifacts.report_path.display());
    Ok(artifacts.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => run_stage(Stage::Simulate, args),
        Command::WaveOp(args) => run_stage(Stage::WaveOp, args),
        Command::DecayCheck(args) => run_stage(Stage::DecayCheck, args),
        Command::CommutatorCheck(args) => run_stage(Stage::CommutatorCheck, args),
        Command::Decompose(args) => run_stage(Stage::Decompose, args),
        Command::Report { path } => {
            let file = if path.is_dir() { path.join("report.json") } else { path.clone() };
            std::fs::read_to_string(&file)
                .map_err(anyhow::Error::from)
                .and_then(|text| render_report(&text).map_err(anyhow::Error::from))
                .map(|rendered| {
                    print!("{rendered}");
                    true
                })
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
