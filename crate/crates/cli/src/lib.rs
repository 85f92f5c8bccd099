//! Command-line front end: run applications, characterize them and compare
//! platform energy.
//!
//! Every command returns its rendered output as a string so it can be
//! exercised without spawning a process; `main` only prints and maps
//! errors to exit codes.

pub mod assets;
pub mod characterize;
pub mod compare;
pub mod format;
pub mod report;

use std::fmt;
use std::path::PathBuf;

use biobench_core::apps::AppId;
use biobench_core::phasesim::REFERENCE_CLOCK_HZ;
use biobench_core::power::Platform;
use biobench_core::Error;
use clap::{Parser, Subcommand, ValueEnum};

pub use format::OutputFormat;

/// Version tag embedded in every JSON report.
pub const SCHEMA_VERSION: &str = "biobench.report/1";

/// Environment variable naming a data directory with `platform_energy.csv`,
/// `platforms.csv` and `configs/<app>.toml` overrides.
pub const DATA_ENV: &str = "BIOBENCH_DATA";

/// Exit status for usage and configuration problems.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for failures while processing.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Format(_) | Error::Io(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        CliError { code, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "biobench", version, about = "Biomedical TinyML workload suite")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Process one window of an application and report its metrics.
    Run(RunArgs),
    /// Tabulate the five characterization metrics.
    Characterize(CharacterizeArgs),
    /// Rank platforms by measured energy per window.
    Compare(CompareArgs),
    /// Write default configs and synthetic input windows.
    GenFixtures(GenArgs),
    /// Write the seeded synthetic model of each application as JSON.
    ExportModels(GenArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    pub app: AppId,
    /// TOML or JSON configuration; defaults to the built-in one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory with one `<signal>.csv` per input signal.
    #[arg(long, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,
    /// Use a generated input window (the default without --input).
    #[arg(long)]
    pub synthetic: bool,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Core clock for the duty-cycle simulation, Hz.
    #[arg(long, default_value_t = REFERENCE_CLOCK_HZ)]
    pub clock: f64,
    /// Processing cycles per window; defaults to the measured count.
    #[arg(long)]
    pub cycles: Option<u64>,
    /// Include wall-clock time (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct CharacterizeArgs {
    /// Applications to include; all when omitted.
    pub apps: Vec<AppId>,
    #[arg(long, default_value_t = REFERENCE_CLOCK_HZ)]
    pub clock: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    /// Worker threads for independent applications.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    /// Comma-separated applications; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub apps: Option<Vec<AppId>>,
    /// Comma-separated platforms; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub platforms: Option<Vec<String>>,
    /// Energy table CSV; defaults to the bundled one.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    /// Also write a whitespace-separated phase breakdown for plotting.
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct GenArgs {
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parse a platform filter, rejecting empty lists.
pub fn parse_platforms(names: &[String]) -> CliResult<Vec<Platform>> {
    let list: Vec<Platform> = names
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Platform>().map_err(CliError::from))
        .collect::<CliResult<_>>()?;
    if list.is_empty() {
        return Err(CliError::config("platform filter is empty"));
    }
    Ok(list)
}

/// Execute a parsed command, returning what should go to stdout.
pub fn execute(cli: Cli) -> CliResult<String> {
    let (out, path) = match cli.command {
        Command::Run(a) => {
            let out = report::cmd_run(&a)?;
            (out, a.output)
        }
        Command::Characterize(a) => {
            let out = characterize::cmd_characterize(&a)?;
            (out, a.output)
        }
        Command::Compare(a) => {
            let out = compare::cmd_compare(&a)?;
            (out, a.output)
        }
        Command::GenFixtures(a) => (assets::gen_fixtures(&a.out, a.seed)?, None),
        Command::ExportModels(a) => (assets::export_models(&a.out, a.seed)?, None),
    };
    match path {
        Some(p) => {
            std::fs::write(&p, &out).map_err(|e| CliError::from(Error::Io(e)))?;
            Ok(String::new())
        }
        None => Ok(out),
    }
}

/// Parse `args` and execute; clap errors keep clap's own exit status.
pub fn run_args<I, T>(args: I) -> CliResult<String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError { code: e.exit_code(), message: e.to_string() })?;
    execute(cli)
}
