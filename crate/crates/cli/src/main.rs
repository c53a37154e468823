use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod fleet;
mod report;
mod run;
mod svg;

/// Batch front end: run scenarios, size fleets, compare results.
#[derive(Debug, Parser)]
#[command(name = "drsfr", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Simulate a scenario once per seed and summarize.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Number of seeds, counting up from the configured one.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: u64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Worker threads; all cores by default.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Base fleet size for a trip file and time span.
    BaseFleet {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "manhattan")]
        region: String,
        /// `YYYY-MM-DDTHH:MM`
        #[arg(long)]
        from: String,
        /// `YYYY-MM-DDTHH:MM`, exclusive
        #[arg(long)]
        to: String,
    },
    /// Comparison tables and plots for the runs in a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Failure with its exit status: 2 for bad input, 1 otherwise.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<drsfr_core::engine::EngineError> for CliError {
    fn from(e: drsfr_core::engine::EngineError) -> Self {
        use drsfr_core::engine::EngineError as E;
        use drsfr_core::ingest::IngestError as I;
        match e {
            E::Config(_) | E::Model(_) | E::Ingest(I::Workload(_) | I::UnknownRegion(_) | I::Schema(_)) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failed(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run {
            config,
            seeds,
            out,
            jobs,
        } => run::cmd_run(&run::RunManifest {
            config,
            seeds,
            out,
            jobs: jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        }),
        Cmd::BaseFleet { data, region, from, to } => fleet::cmd_base_fleet(&data, &region, &from, &to),
        Cmd::Report { dir } => report::cmd_report(&dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("drsfr: {e}");
            ExitCode::from(e.code())
        }
    }
}
