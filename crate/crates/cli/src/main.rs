//! `omitsense`: figure recipes for the OMIT mass-sensing model.

// `!(x > 0)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod output;
mod plot;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "omitsense", version, about = "OMIT optomechanical mass-sensing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    /// Steady states versus pump power (bistability scan).
    Steady,
    /// Stokes and homodyne transmission versus probe detuning.
    Spectrum,
    /// K_st versus frequency shift or mass, one curve per κ.
    Kst,
    /// Slope β over a κ × Gε grid.
    Beta,
    /// Linearity scale r versus κ.
    Linearity,
    /// One time-domain trajectory and its field spectrum.
    Simulate,
    /// Full sensing experiment: simulate, read out K_st, recover masses.
    Sense,
}

#[derive(Subcommand, Debug)]
enum Command {
    #[command(about = "Steady states versus pump power (bistability scan)")]
    Steady(Common),
    #[command(about = "Stokes and homodyne transmission versus probe detuning")]
    Spectrum(Common),
    #[command(about = "K_st versus frequency shift or mass, one curve per kappa")]
    Kst(Common),
    #[command(about = "Slope beta over a kappa x G*eps grid")]
    Beta(Common),
    #[command(about = "Linearity scale r versus kappa")]
    Linearity(Common),
    #[command(about = "One time-domain trajectory and its field spectrum")]
    Simulate(Common),
    #[command(about = "Full sensing experiment: simulate, read out K_st, recover masses")]
    Sense(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Configuration file (device block plus command sections).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also render SVG figures.
    #[arg(long)]
    pub plot: bool,
    /// Hold κ_ex = κ/2 (device and κ sweeps).
    #[arg(long)]
    pub critical_coupling: bool,
    /// Report output-field amplitudes √κ_ex·a instead of intracavity ones.
    #[arg(long)]
    pub output_field: bool,
}

impl Command {
    fn split(self) -> (CommandKind, Common) {
        match self {
            Command::Steady(c) => (CommandKind::Steady, c),
            Command::Spectrum(c) => (CommandKind::Spectrum, c),
            Command::Kst(c) => (CommandKind::Kst, c),
            Command::Beta(c) => (CommandKind::Beta, c),
            Command::Linearity(c) => (CommandKind::Linearity, c),
            Command::Simulate(c) => (CommandKind::Simulate, c),
            Command::Sense(c) => (CommandKind::Sense, c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, common) = cli.command.split();
    match commands::run(kind, &common) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("omitsense: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
