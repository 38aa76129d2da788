//! Command-line front end: configuration loading, command execution and
//! file emission for `sweepwave`.

pub mod config;
pub mod emit;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{CommandKind, Settings};

/// Default output directory when `--out` is absent.
pub const OUT_ENV: &str = "SWEEPWAVE_OUT";

#[derive(Debug, Parser)]
#[command(name = "sweepwave", version, about = "Recurrent selective sweeps: limit paths, simulation and comparison")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct the piecewise-linear limit path.
    Limit(Settings),
    /// Simulate one trajectory of the Moran model.
    Simulate(Settings),
    /// Simulate independent replicates in parallel.
    Ensemble(Settings),
    /// Compare simulations over a μ grid with the limit path.
    Compare(Settings),
    /// Regime thresholds and the regime containing α.
    Regimes(Settings),
    /// Finite-time blow-up certificate.
    Blowup(Settings),
    /// Type distributions of a simulation and of the limit at given times.
    Snapshot(Settings),
}

impl Command {
    pub fn split(self) -> (CommandKind, Settings) {
        match self {
            Self::Limit(s) => (CommandKind::Limit, s),
            Self::Simulate(s) => (CommandKind::Simulate, s),
            Self::Ensemble(s) => (CommandKind::Ensemble, s),
            Self::Compare(s) => (CommandKind::Compare, s),
            Self::Regimes(s) => (CommandKind::Regimes, s),
            Self::Blowup(s) => (CommandKind::Blowup, s),
            Self::Snapshot(s) => (CommandKind::Snapshot, s),
        }
    }
}

/// Parses, configures and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { run::EXIT_USAGE } else { run::EXIT_OK };
        }
    };
    let (kind, flags) = cli.command.split();
    let config = match config::load_config(kind, cli.config.as_deref(), flags, cli.out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return run::EXIT_USAGE;
        }
    };
    match run::execute(&config) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            run::EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
