//! `weakval`: γ-sweeps, regime comparisons, optics reports and coupling fits.

mod commands;
mod parse;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use weakval_core::protocols::{FeedForward, Regime};

use crate::parse::GridSpec;
use crate::table::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "weakval",
    version,
    about = "Weak-value estimation by weak interaction, insensitive pointer and quantum erasure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep one regime over γ and fit its effective coupling
    Sweep(SweepArgs),
    /// Sweep all three regimes on a shared grid and compare them
    Compare(CompareArgs),
    /// Report the optical c-phase chain, its component trace and effective gate
    Optics(OpticsArgs),
    /// Fit the effective coupling to a table of (gamma, raw_stat) points
    Fit(FitArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Shots per γ point; 0 selects exact (infinite-statistics) mode
    #[arg(long, default_value_t = 3000)]
    shots: u64,
    /// Master seed for the per-point sampling streams
    #[arg(long, env = "WEAKVAL_SEED", default_value_t = 0)]
    seed: u64,
    /// Erasure feed-forward: true-operator, simulated-projection or off
    #[arg(long, default_value = "true-operator", value_parser = parse_feedforward)]
    feedforward: FeedForward,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// weak, insensitive or erasure
    #[arg(long, value_parser = parse_regime)]
    regime: Regime,
    /// φ for the weak regime, δ otherwise; accepts `0.18pi`. Defaults to 0.18pi, 0.21, 0.08
    #[arg(long, value_parser = parse::angle, allow_hyphen_values = true)]
    coupling: Option<f64>,
    /// γ grid as start:stop:count
    #[arg(long, default_value = "0.05pi:0.6pi:20", value_parser = parse::grid)]
    gamma: GridSpec,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// γ grid as start:stop:count; all regimes share it
    #[arg(long, value_parser = parse::grid, action = clap::ArgAction::Append)]
    gamma: Vec<GridSpec>,
    #[arg(long, value_parser = parse::angle, default_value = "0.18pi")]
    weak_coupling: f64,
    #[arg(long, value_parser = parse::angle, default_value = "0.21")]
    insensitive_coupling: f64,
    #[arg(long, value_parser = parse::angle, default_value = "0.08")]
    erasure_coupling: f64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OpticsFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct OpticsArgs {
    /// Gate phase φ in [0, pi]
    #[arg(long, value_parser = parse::angle)]
    phi: f64,
    /// Leave out the balancing attenuators
    #[arg(long)]
    no_balance: bool,
    #[arg(long, value_enum, default_value_t = OpticsFormat::Text)]
    format: OpticsFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV with gamma and raw_stat columns, or a sweep output file
    #[arg(long)]
    input: PathBuf,
    /// Regime of the data; taken from the file metadata when absent
    #[arg(long, value_parser = parse_regime)]
    regime: Option<Regime>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse()
}

fn parse_feedforward(s: &str) -> Result<FeedForward, String> {
    s.parse()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(a) => commands::sweep(a),
        Command::Compare(a) => commands::compare(a),
        Command::Optics(a) => commands::optics(a),
        Command::Fit(a) => commands::fit(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
