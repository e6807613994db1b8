//! `nsk`: simulations, traveling waves, exact solutions and diagnostics.

mod diagnose;
mod simulate;
mod waves;

use clap::{Parser, Subcommand};
use nsk_core::NskError;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "nsk", version, about = "Periodic NSK/EK simulator and traveling-wave toolkit")]
struct Cli {
    /// Reserved; every command is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a simulation from a config file.
    Simulate(simulate::SimulateArgs),
    /// Build a traveling-wave profile.
    Twave(waves::TwaveArgs),
    /// Sample the exact cnoidal solution.
    Exact(waves::ExactArgs),
    /// Report interface, flux and tangent lines of a snapshot.
    Diagnose(diagnose::DiagnoseArgs),
    /// Run a config over a (mu_bar, eps) grid.
    Sweep(simulate::SweepArgs),
}

/// Failure with the process exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad config, flags or input files: exit 2.
    Input(String),
    /// Solver or simulation failure: exit 3.
    Runtime(String),
}

impl From<NskError> for Failure {
    fn from(e: NskError) -> Self {
        match e {
            NskError::Config { .. }
            | NskError::Io(_)
            | NskError::InvalidArgument(_)
            | NskError::InadmissibleEps { .. }
            | NskError::InvalidModulus(_)
            | NskError::NoBitangent { .. } => Failure::Input(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(seed) = cli.seed {
        log::debug!("--seed {seed} ignored");
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate::simulate(a),
        Command::Twave(a) => waves::twave(a),
        Command::Exact(a) => waves::exact(a),
        Command::Diagnose(a) => diagnose::diagnose(a),
        Command::Sweep(a) => simulate::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
