//! `catkick`: figure data for conditional single-photon optomechanics as CSV,
//! plus a closed-form versus oracle validation harness.
//!
//! Exit status: 0 on success, 1 when validation fails, 2 on usage or I/O errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] catkick_core::Error),
    #[error("validation failed")]
    ValidationFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::ValidationFailed => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "catkick", version, about = "Conditional single-photon optomechanics: figure data as CSV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One-photon count rate and its reflected / transmitted / interference parts.
    Rate1,
    /// Conditional mean amplitude and momentum, one series per mechanical frequency.
    Moments,
    /// Interferometer: entropy, mean amplitude, Wigner slice and detuning fidelity.
    Mz,
    /// Second-photon rate over (tau, t_d) in long format.
    Rate2,
    /// Compare closed forms against direct integration and report.
    Validate,
}

/// Flags shared by all subcommands; unset values take the subcommand's defaults.
#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Source decay rate gamma.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Single-photon coupling G0.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub g0: Option<f64>,
    /// Mechanical frequency.
    #[arg(long = "omega-m", global = true, allow_negative_numbers = true)]
    pub omega_m: Option<f64>,
    /// Fock truncation per mechanical mode.
    #[arg(long = "fock-dim", global = true)]
    pub fock_dim: Option<usize>,
    /// End of the time axis.
    #[arg(long = "t-max", global = true, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    /// Points per axis.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// First detection time (rate2).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t1: Option<f64>,
    /// End of the free-evolution axis (rate2).
    #[arg(long = "td-max", global = true, allow_negative_numbers = true)]
    pub td_max: Option<f64>,
    /// End of the second-photon interaction axis (rate2).
    #[arg(long = "tau-max", global = true, allow_negative_numbers = true)]
    pub tau_max: Option<f64>,
    /// Largest fractional detuning (mz).
    #[arg(long = "delta-max", global = true, allow_negative_numbers = true)]
    pub delta_max: Option<f64>,
    /// Points per axis of the Wigner slice (mz).
    #[arg(long = "wigner-points", global = true)]
    pub wigner_points: Option<usize>,
    /// Output path; mz derives one file per panel from it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run the validation harness on the parameters first; abort with status 1 on failure.
    #[arg(long, global = true)]
    pub validate: bool,
    /// Divide the second-photon rate by the first-photon rate at t1.
    #[arg(long = "normalize-r2", global = true)]
    pub normalize_r2: bool,
    /// Perturb the analytic prefactor by 1% (harness self-test).
    #[arg(long = "inject-fault", global = true, hide = true)]
    pub inject_fault: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rate1 => commands::rate1(&cli.opts),
        Command::Moments => commands::moments(&cli.opts),
        Command::Mz => commands::mz(&cli.opts),
        Command::Rate2 => commands::rate2(&cli.opts),
        Command::Validate => commands::validate(&cli.opts),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("catkick: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
