//! `straingrid`: configure, run and check multi-strain, multi-patch
//! co-colonization models and their replicator reduction.

mod commands;
mod error;
mod output;
mod svg;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Full S/I/D system in fast time t.
    Full,
    /// Replicator system in slow time tau.
    Reduced,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Reduced => "reduced",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "straingrid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a config: positivity, supercriticality, connectivity.
    Validate { config: PathBuf },
    /// Print neutral equilibria, drift matrices and eigenvectors as JSON.
    Equilibria { config: PathBuf },
    /// Print speeds, fitness matrices and the migration matrix as JSON.
    Fitness { config: PathBuf },
    /// Integrate the full or the reduced system and write a trajectory CSV.
    Simulate {
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Output directory [default: $STRAINGRID_OUT or ./straingrid-out]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the full-vs-reduced distance over a list of eps values.
    Compare {
        config: PathBuf,
        /// Comma-separated eps values (at least 3).
        #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
        eps: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation per value of a scalar config field.
    Sweep {
        config: PathBuf,
        /// Dotted path of the swept field, e.g. scale.d or patches.0.beta.
        #[arg(long)]
        axis: String,
        #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = Mode::Reduced)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { config } => commands::validate(&config),
        Command::Equilibria { config } => commands::equilibria(&config),
        Command::Fitness { config } => commands::fitness(&config),
        Command::Simulate { config, mode, out } => {
            commands::simulate(&config, mode, &output::output_root(out.as_deref()))
        }
        Command::Compare { config, eps, out } => {
            commands::compare(&config, &eps, &output::output_root(out.as_deref()))
        }
        Command::Sweep {
            config,
            axis,
            values,
            jobs,
            mode,
            out,
        } => {
            let (raw, _) = commands::load_config(&config)?;
            sweep::sweep(
                &raw,
                &axis,
                &values,
                jobs,
                mode,
                &output::output_root(out.as_deref()),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
