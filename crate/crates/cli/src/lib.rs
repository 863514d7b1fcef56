//! Command-line front end of `survcop`: TOML run configuration, CSV datasets,
//! JSON reports written atomically.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod prepare;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "survcop", version, about = "Survival copula models with Yang-Prentice margins")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for simulation, multistart jitter and bootstrap; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replicas, resamples and sweeps.
    #[arg(long, global = true, env = "SURVCOP_WORKERS")]
    pub workers: Option<usize>,
    /// Directory for output files; overrides the config.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the configured model to a dataset.
    Fit {
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit every copula, baseline and regression class combination and tabulate AIC.
    Sweep {
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
    },
    /// Draw one dataset from the configured scenario.
    Simulate {
        config: PathBuf,
        /// Replica index; selects the random stream.
        #[arg(long, default_value_t = 0)]
        replica: u64,
    },
    /// Monte Carlo study of the configured scenario.
    Mc { config: PathBuf },
    /// Crossing time of two covariate profiles with a cluster bootstrap interval.
    Crossing {
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Likelihood-ratio test of a PH or PO model against YP.
    Lrtest {
        reduced: PathBuf,
        full: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Significance level of the decision (default 0.05).
        #[arg(long)]
        level: Option<f64>,
    },
    /// Build a bivariate dataset from semi-competing risks records.
    Prepare {
        input: PathBuf,
        /// File name of the dataset inside the output directory.
        #[arg(long, default_value = "dataset.csv")]
        output: PathBuf,
        /// Center and scale covariates (not part of the original analysis).
        #[arg(long)]
        standardize: bool,
    },
}

/// Runs the parsed command and returns the process exit code: 0 on success,
/// 2 when a fit did not converge, 1 on input errors.
pub fn run(cli: Cli) -> i32 {
    let ctx = commands::Context { seed: cli.seed, workers: cli.workers, out_dir: cli.out_dir };
    let result = match &cli.command {
        Command::Fit { config, data } => commands::cmd_fit(&ctx, config, data),
        Command::Sweep { config, data } => commands::cmd_sweep(&ctx, config.as_deref(), data),
        Command::Simulate { config, replica } => commands::cmd_simulate(&ctx, config, *replica),
        Command::Mc { config } => commands::cmd_mc(&ctx, config),
        Command::Crossing { config, data } => commands::cmd_crossing(&ctx, config, data),
        Command::Lrtest { reduced, full, data, level } => commands::cmd_lrtest(&ctx, reduced, full, data, *level),
        Command::Prepare { input, output, standardize } => commands::cmd_prepare(&ctx, input, output, *standardize),
    };
    match result {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
