//! `vblast`: spectrum tables, analytic BER curves and Monte Carlo sweeps
//! driven by JSON experiment files.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Experiment;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("gate failure: {0}")]
    Gate(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Gate(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "vblast", version, about = "RCPC-coded V-BLAST MIMO experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed, overriding the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Spectrum truncation weight, overriding the file.
    #[arg(long)]
    dmax: Option<u32>,
    /// Do not list written files.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Distance spectra of every family member.
    Spectrum(RunArgs),
    /// Analytic BER curves.
    Analytic(RunArgs),
    /// Monte Carlo BER sweep.
    Simulate(RunArgs),
    /// Print the experiment-file JSON schema.
    Schema,
}

fn load(path: &Path, expected: &str) -> Result<Experiment, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let experiment: Experiment =
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    if experiment.mode() != expected {
        return Err(CliError::Schema(format!(
            "{} describes a {} run, not {expected}",
            path.display(),
            experiment.mode()
        )));
    }
    Ok(experiment)
}

fn run(command: Command) -> Result<(), CliError> {
    let (args, mode) = match command {
        Command::Schema => {
            println!("{}", config::json_schema());
            return Ok(());
        }
        Command::Spectrum(a) => (a, "spectrum"),
        Command::Analytic(a) => (a, "analytic"),
        Command::Simulate(a) => (a, "simulate"),
    };
    let overrides = commands::Overrides { seed: args.seed, dmax: args.dmax };
    let (written, gate_failures) = match load(&args.config, mode)? {
        Experiment::Spectrum(r) => (commands::spectrum(&r, &args.out, &overrides)?, Vec::new()),
        Experiment::Analytic(r) => (commands::analytic(&r, &args.out, &overrides)?, Vec::new()),
        Experiment::Simulate(r) => {
            let o = commands::simulate(&r, &args.out, &overrides)?;
            (o.written, o.gate_failures)
        }
    };
    if !args.quiet {
        for path in &written {
            println!("{}", path.display());
        }
    }
    if !gate_failures.is_empty() {
        return Err(CliError::Gate(gate_failures.join("; ")));
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vblast: {e}");
            ExitCode::from(e.code())
        }
    }
}
