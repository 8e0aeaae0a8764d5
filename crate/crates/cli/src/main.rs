//! `haarlab`: batch runner for measure diagnostics, Calderón–Zygmund
//! verification, weak-(1,1) batteries and the bundled studies.
//!
//! Exit codes: 0 when every verified inequality holds, 1 when one fails,
//! 2 for usage and configuration errors.

mod config;
mod czd;
mod measure;
mod reproduce;
mod report;
mod weak11;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "haarlab", version, about = "Dyadic harmonic analysis experiments on finite-depth measures")]
struct Cli {
    /// Directory for CSV tables and manifest.json; tables go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the depth of the measure.
    #[arg(long, global = true)]
    depth: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-generation measure constants and mass summary.
    Measure {
        #[arg(long)]
        config: PathBuf,
    },
    /// Decompose and verify every configured (f, λ) pair.
    Czd {
        #[arg(long)]
        config: PathBuf,
    },
    /// Weak-(1,1) ratio series for each configured operator.
    Weak11 {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate one of the bundled study tables.
    Reproduce {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(reproduce::STUDIES))]
        study: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed configuration, invalid parameters.
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn io(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<haarlab::Error> for CliError {
    fn from(e: haarlab::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Overrides shared by every command.
#[derive(Clone, Copy, Debug)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub depth: Option<u32>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("HAARLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::Usage(format!("HAARLAB_THREADS must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(CliError::Usage("HAARLAB_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<report::Bundle, CliError> {
    init_threads()?;
    let ov = Overrides { seed: cli.seed, depth: cli.depth };
    match cli.command {
        Command::Measure { config } => measure::run(&config::load(&config)?, ov),
        Command::Czd { config } => czd::run(&config::load(&config)?, ov),
        Command::Weak11 { config } => weak11::run(&config::load(&config)?, ov),
        Command::Reproduce { study } => reproduce::run(&study, ov),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let result = run(cli).and_then(|bundle| bundle.emit(out.as_deref()).map(|_| bundle.pass));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("haarlab: verification failed; see the pass column of the report");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("haarlab: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("haarlab: i/o error: {msg}");
            ExitCode::from(2)
        }
    }
}
