//! Command-line front end for `qed-core`.
//!
//! Every subcommand builds a [`Report`] that is rendered as an aligned table,
//! CSV or JSON. Exit codes: 0 success, 2 usage or configuration error,
//! 3 domain or stability error, 4 numerical non-convergence, 1 I/O failure.

mod commands;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qed_core::QedError;
use thiserror::Error;

pub use report::{Cell, Format, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] QedError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(QedError::Config(_)) => 2,
            CliError::Core(QedError::Domain(_) | QedError::Instability(_)) => 3,
            CliError::Core(QedError::Numerical(_)) => 4,
            CliError::Io(_) => 1,
        }
    }
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Counts may be written in scientific notation, e.g. `2e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63)) {
        return Err(format!("'{s}' is not a non-negative integer"));
    }
    Ok(v as u64)
}

#[derive(Debug, Parser)]
#[command(name = "qed", version, about = "Exact and QED-asymptotic analysis of many-server queues")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Decimal digits for numeric output.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=15))]
    pub precision: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact stationary measures next to their QED approximations.
    Analyze(ModelArgs),
    /// Solve a delay-probability or cost staffing problem.
    Staff(StaffArgs),
    /// Bounds on the Erlang C probability along the β = 1 ladder.
    Table1,
    /// PSA and MOL staffing schedules for a time-varying arrival rate.
    Schedule(ScheduleArgs),
    /// Monte Carlo estimates with confidence intervals.
    Simulate(SimulateArgs),
    /// One simulated sample path.
    Path(PathArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Mms,
    Mmsn,
    Mmsm,
    Bulk,
    Hw,
    Mt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Ed,
    Qed,
    Qd,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Arrival rate.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub servers: Option<u64>,
    /// Service rate.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// System capacity n for mmsn.
    #[arg(long, value_parser = parse_count)]
    pub buffer: Option<u64>,
    /// Abandonment rate (mmsm, hw).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Staffing parameter; sets servers by --rule when --servers is absent.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Buffer parameter; sets n = s + γ√s when --buffer is absent.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum, default_value_t = RuleArg::Qed)]
    pub rule: RuleArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StaffRule {
    Exact,
    Qed,
    Refined,
    All,
}

#[derive(Debug, Clone, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["epsilon", "cost_ratio"])))]
pub struct StaffArgs {
    #[arg(long)]
    pub lambda: f64,
    /// Target delay probability.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Waiting cost per unit of server cost.
    #[arg(long)]
    pub cost_ratio: Option<f64>,
    #[arg(long, value_enum, default_value_t = StaffRule::All)]
    pub rule: StaffRule,
    /// Standard deviation of an uncertain arrival rate (delay target only).
    #[arg(long, requires = "epsilon")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Psa,
    Mol,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// constant:L | sinusoid:A,B,PERIOD[,PHASE] | pwc:t0,l0;t1,l1;... | csv:PATH
    #[arg(long)]
    pub rate: String,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 24.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// End time (periods for bulk).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Arrivals per replication after warm-up (queue models).
    #[arg(long, value_parser = parse_count)]
    pub arrivals: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    pub periods: Option<u64>,
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub reps: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = parse_count)]
    pub seed: u64,
    /// Repeatable; defaults depend on the model.
    #[arg(long = "metric")]
    pub metrics: Vec<String>,
    /// Euler step for the diffusion.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Confidence level of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[command(flatten)]
    pub mt: MtArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MtArgs {
    /// Rate function for the mt model.
    #[arg(long)]
    pub rate: Option<String>,
    #[arg(long, value_enum)]
    pub schedule: Option<MethodArg>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 0.25)]
    pub report_step: f64,
    #[arg(long, default_value_t = 48.0)]
    pub burn_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    Raw,
    Centered,
}

#[derive(Debug, Clone, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 50.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub warmup: f64,
    #[arg(long, default_value_t = 1, value_parser = parse_count)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ScalingArg::Centered)]
    pub scaling: ScalingArg,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[command(flatten)]
    pub mt: MtArgs,
}

/// Run one command and return the report.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Staff(a) => commands::staff(a),
        Command::Table1 => commands::table1(),
        Command::Schedule(a) => commands::schedule(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Path(a) => commands::path(a),
    }
}

/// Parse `args`, run, write the output and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = execute(&cli).and_then(|report| {
        let text = report.render(cli.format, cli.precision as usize);
        match &cli.out {
            Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("--out {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qed: {e}");
            e.exit_code()
        }
    }
}
