//! `esmppt` command-line driver.
//!
//! Exit codes: 0 success, 1 tuning validation failure, 2 runtime or solver
//! failure.

mod commands;
mod inputs;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::inputs::ConfigArgs;

#[derive(Debug, Parser)]
#[command(name = "esmppt", version, about = "Extremum-seeking MPPT simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep module P-V curves over irradiance and temperature.
    PvCurve {
        #[command(flatten)]
        config: ConfigArgs,
        /// Irradiance values, W/m^2.
        #[arg(long = "g", value_delimiter = ',', default_value = "1000")]
        irradiance: Vec<f64>,
        /// Cell temperatures, degrees Celsius.
        #[arg(long = "t", value_delimiter = ',', default_value = "25")]
        temperature_c: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one closed-loop simulation.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Overrides `scenario.rng_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Run even when the tuning conditions fail.
        #[arg(long)]
        force: bool,
        /// Relative power band for the convergence time.
        #[arg(long, default_value_t = 0.02)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several presets on a shared plant and scenario and rank them.
    Compare {
        #[arg(required = true)]
        presets: Vec<String>,
        /// Overrides applied to every preset.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Shared duration; defaults to the shortest preset duration.
        #[arg(long)]
        duration: Option<f64>,
        /// Shared step; defaults to the smallest preset step.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 0.02)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the tuning conditions against the plant curvature.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also write `tuning_report.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Cartesian parameter sweep in parallel.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Config key to vary; give once or twice.
        #[arg(long = "param", required = true)]
        params: Vec<String>,
        /// Comma-separated values, one list per `--param`.
        #[arg(long = "values", required = true)]
        values: Vec<String>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value_t = 0.02)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// List built-in presets, or print one.
    Presets { name: Option<String> },
}

/// Successful command results that still map to a non-zero exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ValidationFailed,
}

fn dispatch(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::PvCurve { config, irradiance, temperature_c, points, out } => {
            commands::pv_curve::run(&config, &irradiance, &temperature_c, points, &out)
        }
        Command::Simulate { config, seed, force, epsilon, out } => {
            commands::simulate::run(&config, seed, force, epsilon, &out)
        }
        Command::Compare { presets, sets, duration, dt, epsilon, out } => {
            commands::compare::run(&presets, &sets, duration, dt, epsilon, &out)
        }
        Command::Validate { config, out } => commands::validate::run(&config, out.as_deref()),
        Command::Sweep { config, params, values, jobs, epsilon, out } => {
            commands::sweep::run(&config, &params, &values, jobs, epsilon, &out)
        }
        Command::Presets { name } => commands::list_presets(name.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
