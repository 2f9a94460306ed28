//! The `aqc` command line: configuration, commands, envelope cache and reports.

pub mod cache;
pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{parse_config, ConfigIssue, RunConfig};

/// Exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT_FAIL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Environment variable that overrides `[output] dir`.
pub const OUT_DIR_ENV: &str = "AQC_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration errors:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigIssue>),
    #[error(transparent)]
    Core(#[from] aqc_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use aqc_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) | CliError::Core(E::Io(_)) => EXIT_IO,
            CliError::Core(E::Diverged(_)) => EXIT_DIVERGED,
            CliError::Core(_) => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail(Vec<String>),
}

impl Verdict {
    /// `Pass` when `failures` is empty.
    pub fn from_failures(failures: Vec<String>) -> Self {
        if failures.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail(failures)
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "aqc", version, about = "Envelopes and relaxation checks for first-order linear constraints")]
struct Cli {
    #[command(subcommand)]
    command: CommandArg,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Configuration file (`[section]` / `key = value`).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set solver.ladder=8,16`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (takes precedence over the environment and the file).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CommandArg {
    /// Run the command named in `[run] command`.
    Run(Common),
    /// Certify or refute the constant rank condition.
    CheckRank(Common),
    /// Cell-problem envelope at points or on a slice.
    Envelope(Common),
    /// Envelope integral against recovery-sequence energies.
    Relax(Common),
    /// Empirical constants for the localized projection bounds.
    VerifyProp22(Common),
    /// Truncate-and-project decomposition of a concentrating sequence.
    Decompose(Common),
    /// Compare envelopes with the discrete biconjugate and the upper bounds.
    OracleCompare(Common),
    /// List catalog labels.
    List,
}

/// Loads the configuration for a command, applying overrides and the output-directory precedence.
pub fn load_config(
    command: Option<&str>,
    file: Option<&std::path::Path>,
    overrides: &[String],
    out: Option<PathBuf>,
) -> Result<RunConfig, CliError> {
    let text = match file {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    let mut all: Vec<String> = overrides.to_vec();
    if let Some(c) = command {
        all.push(format!("run.command={c}"));
    }
    let dir = out.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
    if let Some(d) = dir {
        all.push(format!("output.dir={}", d.display()));
    }
    parse_config(&text, &all).map_err(CliError::Config)
}

fn list() -> String {
    let mut out = String::new();
    let mut section = |title: &str, entries: Vec<(&'static str, &'static str)>| {
        out.push_str(title);
        out.push('\n');
        for (n, s) in entries {
            out.push_str(&format!("  {n:<24} {s}\n"));
        }
    };
    section("operators:", aqc_core::symbols::catalog::registry().describe());
    section("densities:", aqc_core::densities::registry().describe());
    section("cutoffs:", aqc_core::pseudodiff::cutoff::registry().describe());
    section("commands:", commands::registry().describe());
    out
}

/// Parses arguments, runs the command, prints a summary and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let (name, common) = match cli.command {
        CommandArg::List => {
            print!("{}", list());
            return EXIT_PASS;
        }
        CommandArg::Run(c) => (None, c),
        CommandArg::CheckRank(c) => (Some("check-rank"), c),
        CommandArg::Envelope(c) => (Some("envelope"), c),
        CommandArg::Relax(c) => (Some("relax"), c),
        CommandArg::VerifyProp22(c) => (Some("verify-prop22"), c),
        CommandArg::Decompose(c) => (Some("decompose"), c),
        CommandArg::OracleCompare(c) => (Some("oracle-compare"), c),
    };
    let result = load_config(name, common.config.as_deref(), &common.overrides, common.out)
        .and_then(|cfg| commands::execute(&cfg));
    match result {
        Ok(Verdict::Pass) => {
            println!("verdict: pass");
            EXIT_PASS
        }
        Ok(Verdict::Fail(reasons)) => {
            println!("verdict: fail");
            for r in reasons {
                println!("  {r}");
            }
            EXIT_VERDICT_FAIL
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
