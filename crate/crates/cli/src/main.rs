//! `fracinv`: simulate fractionally integrated series, run long-memory tests,
//! build quantile tables, and verify the limit theorems by Monte Carlo.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracinv_core::fbm::{Functional, DEFAULT_TABLE_M, DEFAULT_TABLE_REPS, DEFAULT_TABLE_SEED};
use fracinv_core::harness::TABLES_ENV;
use fracinv_core::{ProcessKind, Statistic};

/// Exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_VERDICT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "fracinv", version, about = "Fractionally integrated processes, long-memory tests and Monte Carlo checks")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a series and write it to a file.
    Simulate(SimulateArgs),
    /// Run the R/S or KPSS test on a series.
    Test(TestArgs),
    /// Build a Monte Carlo quantile table.
    Tables(TablesArgs),
    /// Run an experiment config and judge its verdicts.
    Verify(VerifyArgs),
    /// Summarize a report, table or series file.
    Show(ShowArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Type1,
    Type2,
}

impl From<KindArg> for ProcessKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Type1 => ProcessKind::TypeI,
            KindArg::Type2 => ProcessKind::TypeII,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatArg {
    Rs,
    Kpss,
}

impl From<StatArg> for Statistic {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Rs => Statistic::Rs,
            StatArg::Kpss => Statistic::Kpss,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FunctionalArg {
    RangeOfBridge,
    SupOfBridge,
    IntSqBridge,
    TerminalValue,
}

impl From<FunctionalArg> for Functional {
    fn from(f: FunctionalArg) -> Self {
        match f {
            FunctionalArg::RangeOfBridge => Functional::RangeOfBridge,
            FunctionalArg::SupOfBridge => Functional::SupOfBridge,
            FunctionalArg::IntSqBridge => Functional::IntSqBridge,
            FunctionalArg::TerminalValue => Functional::TerminalValue,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Fractional order d, in (-0.5, 0.5).
    #[arg(long, allow_hyphen_values = true)]
    d: f64,

    /// Number of extra cumulative sums (integer part of the order).
    #[arg(long, default_value_t = 0)]
    p: u32,

    /// Process type: type1 (stationary) or type2 (started at time zero).
    #[arg(long, value_enum, default_value = "type2")]
    kind: KindArg,

    /// Innovation model name, e.g. iid-gauss, iid-t, garch, ma, bilinear, tar, const1.
    #[arg(long, value_name = "NAME", conflicts_with = "model_file")]
    model: Option<String>,

    /// Model parameter as key=value (TOML value syntax), repeatable: --param sigma=2 --param b=[1,0.5].
    #[arg(long = "param", value_name = "KEY=VALUE", requires = "model")]
    params: Vec<String>,

    /// TOML file holding the model table (`kind = "garch11"`, ...).
    #[arg(long, value_name = "PATH")]
    model_file: Option<PathBuf>,

    /// Series length.
    #[arg(long)]
    n: usize,

    /// Base random seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Type I: tail tolerance for choosing the pre-sample length.
    #[arg(long, value_name = "EPS", conflicts_with = "burn_in")]
    eps_tail: Option<f64>,

    /// Type I: pre-sample length (default 63 * n).
    #[arg(long, value_name = "M")]
    burn_in: Option<usize>,

    /// Output file; `.bin` or `.f64` writes binary, anything else CSV.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TableOptions {
    /// Directory holding quantile tables.
    #[arg(long, value_name = "DIR", env = TABLES_ENV, default_value = "tables")]
    tables_dir: PathBuf,

    /// Build a missing table instead of failing.
    #[arg(long)]
    build_missing: bool,

    /// Grid size of the tables to use.
    #[arg(long, default_value_t = DEFAULT_TABLE_M)]
    table_m: usize,

    /// Replications of the tables to use.
    #[arg(long, default_value_t = DEFAULT_TABLE_REPS)]
    table_reps: usize,

    /// Seed of the tables to use.
    #[arg(long, default_value_t = DEFAULT_TABLE_SEED)]
    table_seed: u64,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// Input series (CSV with a `value` column, or binary).
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    /// Statistic: rs or kpss.
    #[arg(long, value_enum)]
    stat: StatArg,

    /// Bartlett bandwidth l.
    #[arg(long, conflicts_with = "bandwidth_rate")]
    l: Option<usize>,

    /// Bandwidth l = floor(n^rate), rate in (0, 1); default 1/3.
    #[arg(long, value_name = "RATE")]
    bandwidth_rate: Option<f64>,

    /// Fractional order under the null.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    d_null: f64,

    /// TOML model file; adds the moment-compatibility flag to the report.
    #[arg(long, value_name = "PATH")]
    model_file: Option<PathBuf>,

    #[command(flatten)]
    tables: TableOptions,
}

#[derive(Debug, Args)]
struct TablesArgs {
    /// Path functional.
    #[arg(long, value_enum)]
    functional: FunctionalArg,

    /// Process type.
    #[arg(long, value_enum, default_value = "type1")]
    kind: KindArg,

    /// Fractional order d.
    #[arg(long, allow_hyphen_values = true)]
    d: f64,

    /// Grid size (a power of two for type1).
    #[arg(long, default_value_t = DEFAULT_TABLE_M)]
    m: usize,

    /// Number of simulated paths, at least 1000.
    #[arg(long, default_value_t = DEFAULT_TABLE_REPS)]
    reps: usize,

    /// Base random seed.
    #[arg(long, default_value_t = DEFAULT_TABLE_SEED)]
    seed: u64,

    /// Output directory.
    #[arg(long, value_name = "DIR", env = TABLES_ENV, default_value = "tables")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Experiment config file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory (overrides the config's out_dir; default `out`).
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Tables directory (overrides the config's tables_dir).
    #[arg(long, value_name = "DIR")]
    tables_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ShowArgs {
    /// Report (JSON), quantile table, or series file.
    path: PathBuf,

    /// Write plot-ready CSV here.
    #[arg(long, value_name = "PATH")]
    plot_data: Option<PathBuf>,
}

/// Failure class, mapped onto the exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Verdict(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Verdict(_) => EXIT_VERDICT,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Verdict(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Test(a) => commands::test(a),
        Command::Tables(a) => commands::tables(a),
        Command::Verify(a) => commands::verify(a),
        Command::Show(a) => commands::show(a),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn every_flag_is_documented() {
        let root = Cli::command();
        let mut missing = Vec::new();
        let mut visit = |cmd: &clap::Command, prefix: &str| {
            if cmd.get_about().is_none() && !prefix.is_empty() {
                missing.push(format!("{prefix} (command)"));
            }
            for arg in cmd.get_arguments() {
                let id = arg.get_id().as_str();
                if id == "help" || id == "version" {
                    continue;
                }
                if arg.get_help().is_none() {
                    missing.push(format!("{prefix} --{id}"));
                }
            }
        };
        visit(&root, "");
        for sub in root.get_subcommands() {
            visit(sub, sub.get_name());
        }
        assert!(missing.is_empty(), "undocumented: {missing:?}");
    }
}
