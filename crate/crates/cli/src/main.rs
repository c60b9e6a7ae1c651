//! Experiment harness CLI.
//!
//! Exit codes: 0 on success, 1 when any experiment's pass flag is
//! false, 2 on configuration or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use altmin_core::experiments::{run_experiment, Experiment, ExperimentConfig};
use altmin_core::Error;

#[derive(Parser)]
#[command(name = "altmin", about = "Batched alternating-minimization phase retrieval experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-step angle map: observed quantiles of theta(T(x)) vs the prediction
    StepMap(CommonArgs),
    /// Tabulate h and h' by Monte Carlo and verify the growth condition
    HCurve(CommonArgs),
    /// Check the expectation formula for a single measurement term
    Expectation(CommonArgs),
    /// Recovery success-rate sweep of the batched solver
    Recovery(CommonArgs),
    /// Run all four experiments into one output directory
    All(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
    /// Individual field overrides, e.g. -s m=8192 -s trials=200
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(args: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_kv_text(&text)?;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {kv:?} is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, Error> {
    let (experiments, args): (Vec<Experiment>, &CommonArgs) = match &cli.command {
        Command::StepMap(a) => (vec![Experiment::StepMap], a),
        Command::HCurve(a) => (vec![Experiment::HCurve], a),
        Command::Expectation(a) => (vec![Experiment::Expectation], a),
        Command::Recovery(a) => (vec![Experiment::Recovery], a),
        Command::All(a) => (
            vec![Experiment::HCurve, Experiment::StepMap, Experiment::Expectation, Experiment::Recovery],
            a,
        ),
    };
    let base = build_config(args)?;
    let mut all_pass = true;
    for exp in experiments {
        let mut cfg = base.clone();
        if matches!(cli.command, Command::All(_)) {
            cfg.out_dir = base.out_dir.join(exp.name());
        }
        let pass = run_experiment(exp, &cfg)?;
        eprintln!("{}: {}", exp.name(), if pass { "pass" } else { "FAIL" });
        all_pass &= pass;
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
