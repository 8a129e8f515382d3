//! Command-line front end: analysis reports, coordinate ranges, sweeps,
//! simulation batches and scenario linting.
//!
//! Exit codes: 0 globally noncontextual (or success), 3 globally
//! contextual, 1 runtime error, 2 bad flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod format;
pub mod report;
pub mod simulate;
pub mod source;
pub mod validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONTEXTUAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] contextual::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_ERROR,
        }
    }
}

/// Text to print on standard output plus the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

#[derive(Debug, Parser)]
#[command(name = "contextual", version, about = "Decide global (non)contextuality of quantum empirical models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build context tables and classify the scenario (exit 0 noncontextual, 3 contextual).
    Analyze(AnalyzeArgs),
    /// Minimum and maximum of one global-table cell over all feasible tables.
    Range(RangeArgs),
    /// Run seeded measurement simulations and report outcome frequencies.
    Simulate(SimulateArgs),
    /// Lint a scenario: parse it, check every observable's spectral decomposition and list contexts.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    Abc,
    Chsh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    Singlet,
    Product00,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario JSON file (alternative to --builtin).
    pub path: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Weight of the a = −1 eigenspace for the abc scenario [default: 1/3].
    #[arg(long)]
    pub p: Option<f64>,
    /// Two-qubit state for the chsh scenario [default: singlet].
    #[arg(long, value_enum)]
    pub state: Option<StateArg>,
    /// Measurement angles of A, A', B, B' in radians for the chsh scenario.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub angles: Option<Vec<f64>>,
    /// Feasibility, compatibility and validation tolerance.
    #[arg(long, default_value = "1e-9")]
    pub tol: f64,
    /// Solve the linear program in exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
    /// Base seed for simulations; run i uses seed ^ i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also report the range of one global cell, e.g. a=1,b=1,c=-1.
    #[arg(long, allow_hyphen_values = true)]
    pub cell: Option<String>,
    /// Sweep the abc parameter, e.g. p=0:1:0.1; emits CSV.
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RangeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Global cell as label=value pairs, e.g. a=1,b=1,c=-1.
    #[arg(long, allow_hyphen_values = true)]
    pub cell: String,
    /// Sweep the abc parameter, e.g. p=0:1:0.1; emits CSV of (p, min, max).
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HandleArg {
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "C", alias = "c")]
    C,
    /// Counterfactual pairs: every seed replayed at both handle settings.
    Pair,
    /// Two particles, one per apparatus.
    TwoApparatus,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "B")]
    pub handle: HandleArg,
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    /// Stream every run record to this file as JSON lines.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Label of the primary observable.
    #[arg(long, default_value = "A")]
    pub primary: String,
    /// Label measured with the handle at B.
    #[arg(long, default_value = "B")]
    pub secondary_b: String,
    /// Label measured with the handle at C.
    #[arg(long, default_value = "C")]
    pub secondary_c: String,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Analyze(a) => report::cmd_analyze(&a),
        Command::Range(a) => report::cmd_range(&a),
        Command::Simulate(a) => simulate::cmd_simulate(&a),
        Command::Validate(a) => validate::cmd_validate(&a),
    }
}

/// Parses arguments and runs, mapping every failure to its exit code.
/// Returns `(stdout, stderr, code)`.
pub fn run_args<I, T>(args: I) -> (String, String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                (String::new(), text, code)
            } else {
                (text, String::new(), code)
            };
        }
    };
    match run(cli) {
        Ok(o) => (o.stdout, String::new(), o.code),
        Err(e) => (String::new(), format!("error: {e}\n"), e.exit_code()),
    }
}
