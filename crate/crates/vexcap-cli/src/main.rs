//! Batch experiment runner: configure a domain, exponent, weight and
//! task in a TOML file, then `run`, `verify` or `study` it.

// `!(x > 0)` guards reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::{ExperimentConfig, TaskSection};
use tasks::{execute, Outcome, RunContext};

#[derive(Parser)]
#[command(
    name = "vexcap",
    version,
    about = "capacity and thinness experiments on grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task configured in the experiment file.
    Run(CommonArgs),
    /// Run the full verification battery on the configured domain.
    Verify(CommonArgs),
    /// Run the configured task as a dyadic-refinement convergence study.
    Study(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Multiply the per-axis resolution: spacing is divided by this
    /// factor, node alignment preserved.
    #[arg(long, default_value_t = 1)]
    grid_scale: usize,
}

fn load(args: &CommonArgs) -> Result<(ExperimentConfig, String), String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.display().to_string();
    }
    let hash = Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    Ok((cfg, hash))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, mode) = match &cli.command {
        Command::Run(a) => (a, "run"),
        Command::Verify(a) => (a, "verify"),
        Command::Study(a) => (a, "study"),
    };

    let (mut cfg, config_hash) = match load(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    match mode {
        "verify" => cfg.task = TaskSection::VerifyAll {},
        "study" if !matches!(cfg.task, TaskSection::ConvergenceStudy { .. }) => {
            cfg.task = TaskSection::ConvergenceStudy {
                target: Box::new(cfg.task.clone()),
                levels: 3,
                reference: None,
            };
        }
        _ => {}
    }

    if let Some(workers) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("config error: cannot size worker pool: {e}");
            return ExitCode::from(2);
        }
    }

    let ctx = RunContext {
        out_dir: PathBuf::from(&cfg.output.dir),
        cfg,
        grid_scale: args.grid_scale.max(1),
        config_hash,
        workers: args.workers,
    };

    match execute(&ctx) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!(
                "{}",
                match outcome {
                    Outcome::SolverFailed => "solver did not converge",
                    Outcome::VerificationFailed => "verification failures recorded",
                    Outcome::Ok => unreachable!(),
                }
            );
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            // precondition violations surface as configuration errors
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
    }
}
