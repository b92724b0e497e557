//! `subdiff`: exponents, transforms, path simulation, oracles and
//! diagnostics for Brownian motion time-changed by an inverse subordinator.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::output::CliError;

/// Exit code of a failed test.
pub const EXIT_FAIL: u8 = 1;
/// Exit code of usage and configuration errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code of an inconclusive test.
pub const EXIT_INCONCLUSIVE: u8 = 3;
/// Exit code of numerical and sampling failures.
pub const EXIT_NUMERIC: u8 = 4;

/// Brownian motion time-changed by an inverse subordinator.
#[derive(Debug, Parser)]
#[command(name = "subdiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

/// Flags shared by every subcommand. Precedence: config file, then these
/// flags, then `--set`.
#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// TOML config, or a JSON config or report.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// `stable`, `tempered_stable`, `distributed_order` or `tabulated`.
    #[arg(long, global = true)]
    pub kind: Option<String>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub temper: Option<f64>,
    #[arg(long, global = true)]
    pub n_paths: Option<usize>,
    #[arg(long, global = true)]
    pub dtau: Option<f64>,
    /// Comma-separated time points.
    #[arg(long, global = true, value_delimiter = ',')]
    pub times: Vec<f64>,
    /// Any config key, e.g. `--set test.lags=[1,2,4]`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the Bernstein exponent f(u).
    Exponent {
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
    },
    /// Density s(x,t) of the inverse subordinator.
    Density {
        /// Comma-separated space points (overrides run.x).
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
    /// Memory kernel M(t) and renewal function U(t).
    Kernel,
    /// Sample paths as CSV.
    Simulate {
        #[arg(long, value_enum, default_value_t = Process::X)]
        process: Process,
    },
    /// Semi-analytic values.
    Oracle {
        #[arg(value_enum)]
        mode: OracleMode,
    },
    /// Monte-Carlo Feynman–Kac functional against its quadrature.
    Fk,
    /// Run a diagnostic test and write its JSON report.
    Diagnose {
        #[arg(value_enum)]
        test: DiagnoseTest,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Process {
    /// `X(t) = B(S(t))`.
    X,
    /// The inverse subordinator `S(t)`.
    S,
    /// The subordinator `T(τ)`.
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    Laplace,
    Joint,
    Moments,
    Density,
    Fk,
    Lil,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiagnoseTest {
    Martingale,
    Measure,
    Lln,
    Lil,
    Msd,
    Mixing,
    Stationarity,
}

impl DiagnoseTest {
    pub fn name(self) -> &'static str {
        match self {
            DiagnoseTest::Martingale => "martingale",
            DiagnoseTest::Measure => "measure_change",
            DiagnoseTest::Lln => "lln",
            DiagnoseTest::Lil => "lil",
            DiagnoseTest::Msd => "msd",
            DiagnoseTest::Mixing => "mixing",
            DiagnoseTest::Stationarity => "stationarity",
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let cfg = commands::resolve_config(&cli.common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Exponent { u } => commands::exponent(&cfg, &u),
        Command::Density { x } => commands::density(&cfg, &x),
        Command::Kernel => commands::kernel(&cfg),
        Command::Simulate { process } => commands::simulate(&cfg, process),
        Command::Oracle { mode } => commands::oracle(&cfg, mode),
        Command::Fk => commands::fk(&cfg),
        Command::Diagnose { test } => commands::diagnose(&cfg, test),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
