//! `ccp` command-line front end.
//!
//! Every subcommand produces a [`Table`] of results, wrapped in a
//! [`RunRecord`] for JSON output or written directly as CSV.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ccp_core::Error;

pub use commands::{PrintedValue, PRINTED_BIRTHDAY};
pub use output::{RunRecord, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ccp", version, about = "Coupon collector (double Dixie cup) analysis")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Json, global = true)]
    pub out: OutFormat,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out_file: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact and/or asymptotic moments of T_m(N).
    Moments(MomentsArgs),
    /// Monte Carlo simulation of T_m(N).
    Simulate(SimulateArgs),
    /// Gumbel limit probability P(T_m(N) <= n).
    Limit(LimitArgs),
    /// The 365-day birthday example with Monte Carlo adjudication.
    Birthday(BirthdayArgs),
    /// Laplace expansion of I_k(s) against quadrature over an N grid.
    VerifyLemma(LemmaArgs),
    /// Exact vs asymptotic log-Zipf moments over an N grid.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Equal,
    Zipf,
    LogZipf,
    Explicit,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: FamilyKind,
    /// Exponent for zipf and log-zipf.
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of coupon types.
    #[arg(long = "N")]
    pub n: usize,
    /// Number of complete sets.
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Weights for the explicit family, one per line.
    #[arg(long)]
    pub weights_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct QuadArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub tail_epsilon: f64,
    #[arg(long, default_value_t = 1 << 20)]
    pub max_panels: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; the CCP_WORKERS environment variable takes precedence.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentMethod {
    Exact,
    Asymptotic,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_enum, default_value_t = MomentMethod::Exact)]
    pub method: MomentMethod,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Write the empirical CDF as CSV (threshold, fraction).
    #[arg(long)]
    pub emit_cdf: Option<PathBuf>,
    /// Write raw replication values, one per line.
    #[arg(long)]
    pub dump_samples: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProvenanceArg {
    PaperExample,
    MainResultIv,
    GumbelConsistent,
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Threshold n in P(T <= n).
    #[arg(long = "n")]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = ProvenanceArg::PaperExample)]
    pub provenance: ProvenanceArg,
}

#[derive(Debug, Clone, Args)]
pub struct BirthdayArgs {
    #[arg(long = "N", default_value_t = 365)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct LemmaArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    #[arg(long)]
    pub s: f64,
    #[arg(long = "N-grid", value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000])]
    pub n_grid: Vec<usize>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long = "N-grid", value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000])]
    pub n_grid: Vec<usize>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

/// Failure with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
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
            Error::ConvergenceFailure { .. } | Error::SimulationStall { .. } | Error::Domain(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

/// A finished command: the record plus the table it was built from.
#[derive(Debug, Clone)]
pub struct Report {
    pub record: RunRecord,
    pub table: Table,
}

impl Report {
    pub fn render<W: Write>(&self, format: OutFormat, mut out: W) -> std::io::Result<()> {
        match format {
            OutFormat::Json => {
                serde_json::to_writer_pretty(&mut out, &self.record)?;
                writeln!(out)
            }
            OutFormat::Csv => self.table.write_csv(out).map_err(std::io::Error::other),
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    commands::dispatch(&cli.command)
}

/// Parses `args` and runs the command.
pub fn execute_args<I, T>(args: I) -> Result<Report, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::usage(e.to_string()))?;
    execute(&cli)
}

/// Full program: parse, execute, write output. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code;
        }
    };
    let written = match &cli.out_file {
        Some(path) => std::fs::File::create(path).and_then(|f| report.render(cli.out, std::io::BufWriter::new(f))),
        None => report.render(cli.out, std::io::stdout().lock()),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            EXIT_USAGE
        }
    }
}
