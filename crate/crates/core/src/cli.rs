//! Command-line interface.
//!
//! Exit codes: 0 success or passed check, 1 failed check, 2 usage or input
//! error, 3 numerical error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::checks::{run_check, Check};
use crate::diagnostics::diagnose;
use crate::error::{Error, Result};
use crate::experiment::{provenance, run_experiment, write_atomic, ExperimentConfig, SCHEMA};
use crate::reference::DEFAULT_ORACLE_SAMPLES;
use crate::sphere::{sample_uniform, Configuration};
use crate::uniformity::{ajne, angles_of, range_test, rayleigh, sobolev, SobolevSpec, DEFAULT_SOBOLEV_ORDER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hyperspherical", version, about = "Hyperspherical uniformity objectives and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the optimizer described by an experiment file.
    Optimize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a uniform random configuration (CSV unless the output ends in .json).
    Sample {
        #[arg(short)]
        n: usize,
        #[arg(short)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Uniformity statistics of a configuration file.
    Test {
        #[arg(long)]
        input: PathBuf,
        /// Truncation order of the Ajne-weight Sobolev statistic.
        #[arg(long, default_value_t = DEFAULT_SOBOLEV_ORDER)]
        order: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a named check; exits 0 iff it passes.
    Oracle {
        #[arg(long, value_parser = clap::value_parser!(Check))]
        check: Check,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Quality measures of a configuration file.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORACLE_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

impl clap::builder::ValueParserFactory for Check {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<Check>())
    }
}

/// Runs the CLI on `argv` (program name first), writing to the given
/// streams, and returns the exit code.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn emit(value: &serde_json::Value, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let bytes = serde_json::to_vec_pretty(value)?;
    match output {
        Some(path) => write_atomic(path, &bytes),
        None => {
            out.write_all(&bytes)?;
            writeln!(out)?;
            Ok(())
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Optimize { config } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = run_experiment(&config)?;
            writeln!(
                out,
                "best objective {} (restart {}); wrote {}",
                outcome.report["best_objective"],
                outcome.runs.best,
                config.outputs.report_json.display()
            )?;
            Ok(EXIT_OK)
        }
        Command::Sample { n, d, seed, output } => {
            let config = sample_uniform(n, d, seed)?;
            match output {
                Some(path) => write_atomic(&path, &config.to_bytes_for(&path)?)?,
                None => config.write_csv(&mut *out)?,
            }
            Ok(EXIT_OK)
        }
        Command::Test { input, order, output } => {
            let config = Configuration::load(&input)?;
            emit(&uniformity_report(&config, order)?, output.as_deref(), out)?;
            Ok(EXIT_OK)
        }
        Command::Oracle { check, seed, output } => {
            let outcome = run_check(check, seed)?;
            let report = json!({
                "schema": SCHEMA,
                "provenance": provenance(json!({ "check": check.name() }), Some(seed)),
                "check": outcome.check,
                "passed": outcome.passed,
                "summary": outcome.summary,
                "reports": outcome.reports,
                "details": outcome.details,
            });
            emit(&report, output.as_deref(), out)?;
            Ok(if outcome.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Diagnose {
            input,
            samples,
            seed,
            output,
        } => {
            let config = Configuration::load(&input)?;
            let report = diagnose(&config, samples, seed)?;
            let mut value = serde_json::to_value(&report)?;
            value["schema"] = json!(SCHEMA);
            emit(&value, output.as_deref(), out)?;
            Ok(EXIT_OK)
        }
    }
}

/// `{"schema", "n", "d", "ajne", "rayleigh", "range", "sobolev": {"K", "value"}}`.
/// `range` is present only on the circle and `sobolev` only for `d > 2`.
pub fn uniformity_report(config: &Configuration, order: usize) -> Result<serde_json::Value> {
    let mut report = json!({
        "schema": SCHEMA,
        "n": config.n(),
        "d": config.d(),
        "ajne": ajne(config),
        "rayleigh": rayleigh(config),
    });
    if config.d() == 2 && config.n() >= 2 {
        report["range"] = json!(range_test(&angles_of(config)?)?);
    }
    if config.d() > 2 {
        let spec = SobolevSpec::ajne(config.d(), order)?;
        report["sobolev"] = json!({ "K": order, "value": sobolev(config, &spec)? });
    }
    if order == 0 {
        return Err(Error::InvalidConfig("order must be >= 1".into()));
    }
    Ok(report)
}
