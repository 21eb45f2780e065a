mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use solarcast_core::dataset::Regime;
use solarcast_core::ErrorClass;

use config::{RunArgs, RunConfig, UsageError};

/// Short-horizon solar irradiance forecasting with ensemble-deducted
/// autoregression and neural baselines.
#[derive(Debug, Parser)]
#[command(name = "solarcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic irradiance series as CSV.
    Synth {
        #[arg(long, default_value_t = 100)]
        days: usize,
        /// clear, cloudy or mixed
        #[arg(long, default_value = "mixed")]
        regime: Regime,
        #[command(flatten)]
        run: RunArgs,
    },
    /// ACF and PACF of the training split, with a recommended order.
    Diagnose {
        #[arg(long, default_value_t = 20)]
        max_lag: usize,
        /// Use the standardized series instead of the ensemble-deducted one.
        #[arg(long)]
        z_domain: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fit one model on the training split and save it.
    Fit {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Forecast the test split with a saved model.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        model_file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train and score mar, ar, cnn and lstm on one split.
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth { days, regime, run } => commands::synth(&RunConfig::resolve(&run)?, days, regime),
        Command::Diagnose { max_lag, z_domain, run } => {
            commands::diagnose(&RunConfig::resolve(&run)?, max_lag, z_domain)
        }
        Command::Fit { run } => commands::fit(&RunConfig::resolve(&run)?),
        Command::Evaluate { model_file, run } => commands::evaluate(&RunConfig::resolve(&run)?, &model_file),
        Command::Compare { run } => commands::compare(&RunConfig::resolve(&run)?),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<solarcast_core::Error>() {
            return match e.class() {
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
