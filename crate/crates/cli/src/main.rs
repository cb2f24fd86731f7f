//! `xb`: expected-booking pipeline over StatsBomb-layout open data.
//!
//! Four subcommands cover the pipeline end to end: `fetch` populates
//! and validates the cache, `build` assembles the foul dataset, `train`
//! fits and evaluates a card classifier, and `analyze` turns scored
//! fouls into team or player discipline tables.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Usage problems exit 2, runtime failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

#[derive(Debug, Parser)]
#[command(name = "xb", version, about = "Expected bookings from open event data")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration file; `./xb.toml` is picked up when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Feature preset: naive6, event7, or full9.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Learner: boosted, logreg, or tree.
    #[arg(long, global = true)]
    learner: Option<String>,
    /// Seed for both training and splitting.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Goal angle definition: subtended or bearing.
    #[arg(long, global = true)]
    angle_mode: Option<String>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Named experiment bundle: exp1, exp2, or exp3.
    #[arg(long, global = true)]
    experiment: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download and validate raw files for the selected competitions.
    Fetch,
    /// Assemble the foul dataset CSV from the cached corpus.
    Build,
    /// Split the dataset, fit the configured learner, and evaluate it.
    Train {
        /// Dataset CSV; defaults to `<out>/dataset.csv`.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score fouls and emit discipline tables plus plot data.
    Analyze {
        /// Dataset CSV; defaults to `<out>/dataset.csv`.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Trained model; defaults to `<out>/model.json`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Aggregation subject: teams or players.
        #[arg(long, default_value = "teams")]
        scope: String,
        /// Minimum minutes played for a player row.
        #[arg(long, default_value_t = xb_core::analytics::DEFAULT_MIN_MINUTES)]
        min_minutes: f64,
    },
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = config::load_config(cli.common.config.as_deref())?;
    let overrides = config::Overrides {
        preset: cli.common.preset.clone(),
        learner: cli.common.learner.clone(),
        seed: cli.common.seed,
        angle_mode: cli.common.angle_mode.clone(),
        out: cli.common.out.clone(),
        experiment: cli.common.experiment.clone(),
    };
    config::apply_overrides(&mut cfg, &overrides)?;
    let effective = config::validate(cfg)?;
    match &cli.command {
        Command::Fetch => commands::cmd_fetch(&effective),
        Command::Build => commands::cmd_build(&effective),
        Command::Train { dataset } => commands::cmd_train(&effective, dataset.as_deref()),
        Command::Analyze { dataset, model, scope, min_minutes } => commands::cmd_analyze(
            &effective,
            dataset.as_deref(),
            model.as_deref(),
            scope,
            *min_minutes,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(error)) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}
