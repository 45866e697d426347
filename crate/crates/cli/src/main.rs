//! Command-line frontend: reads one TOML config, runs an analysis,
//! writes CSV/JSON artifacts plus a run manifest into --out.

mod artifacts;
mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "phasegate",
    version,
    about = "Phase-shift sequences that decouple driven qubits from oscillator modes",
    after_help = "Exit codes: 0 success, 2 config error, 3 precondition failure, \
                  4 validation failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the segment phase table and report closure
    Synth(RunArgs),
    /// Write per-mode phase-space trajectories
    Trace(RunArgs),
    /// Sweep noise filter functions over a frequency grid
    Filter(RunArgs),
    /// Predict ensemble purity loss, spectrally and by Monte Carlo
    Purity(RunArgs),
    /// Calibrate the Rabi rate to a target entangling phase
    Calibrate(RunArgs),
    /// Cross-check the analytic pipeline against its oracles
    Validate(RunArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// Config document (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed for anything stochastic
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parallelism degree; falls back to PHASEGATE_THREADS, then all
    /// cores. Never changes results, only wall time.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Failures with their contractual exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unusable input: bad config document, bad paths, bad values. Exit 2.
    Config(String),
    /// Valid input outside an operation's domain (open trajectories,
    /// unresolvable spectra, ...). Exit 3.
    Precondition(String),
    /// An oracle cross-check failed. Exit 4.
    Validation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Validation(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Precondition(m) | CliError::Validation(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Synth(a) => ("synth", a),
        Command::Trace(a) => ("trace", a),
        Command::Filter(a) => ("filter", a),
        Command::Purity(a) => ("purity", a),
        Command::Calibrate(a) => ("calibrate", a),
        Command::Validate(a) => ("validate", a),
    };
    let result = match &cli.command {
        Command::Synth(_) => commands::synth(name, args),
        Command::Trace(_) => commands::trace(name, args),
        Command::Filter(_) => commands::filter(name, args),
        Command::Purity(_) => commands::purity(name, args),
        Command::Calibrate(_) => commands::calibrate(name, args),
        Command::Validate(_) => commands::validate(name, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
