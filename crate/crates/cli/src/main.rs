//! `bayesmr`: fit the Bayesian MR model, run simulation studies, or compute
//! the weighted median estimate.
//!
//! Exit codes: 0 on success, 2 on invalid input or configuration, 3 when the
//! sampler fails its reliability checks (outputs are still written).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Library(#[from] bayesmr::Error),
}

#[derive(Debug, Parser)]
#[command(name = "bayesmr", version, about = "Bayesian Mendelian randomization with a horseshoe prior")]
struct Cli {
    /// Master random seed; overrides seeds in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (`fit`, `simulate`) or JSON file (`wme`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Inputs {
    /// Dataset CSV with columns `x`, `y`, optional `w`, then `z1..zJ`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the posterior for one dataset.
    Fit(Inputs),
    /// Run the simulation scenarios listed in a config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Weighted median estimate with a bootstrap interval.
    Wme(Inputs),
}

fn load(config: Option<&PathBuf>, cli: &Cli, data: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let mut c = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = data {
        c.data = Some(d.clone());
    }
    if let Some(o) = &cli.out {
        c.out = Some(o.clone());
    }
    if cli.seed.is_some() {
        c.seed = cli.seed;
    }
    Ok(c)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot start thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Fit(i) => commands::cmd_fit(load(i.config.as_ref(), cli, i.data.as_ref())?),
        Command::Simulate { config } => commands::cmd_simulate(load(Some(config), cli, None)?).map(|_| true),
        Command::Wme(i) => commands::cmd_wme(load(i.config.as_ref(), cli, i.data.as_ref())?).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: sampler reliability checks failed; outputs were written and flagged");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
