//! Experiment files: a JSON description of one optimization run, its
//! orchestration over restarts, and atomic persistence of the results.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::diagnostics::{diagnose, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;
use crate::optimizer::{run_restarts, MultiStart, OptimizerConfig};
use crate::reference::{cross_polytope, regular_simplex, DEFAULT_ORACLE_SAMPLES};
use crate::rng::derive_seed;
use crate::sphere::{sample_uniform, Configuration};

/// Version tag of every JSON report.
pub const SCHEMA: &str = "v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    /// Restart `r` starts from `sample_uniform(n, d, derive_seed(seed, r))`.
    Uniform { seed: u64 },
    FromFile { path: PathBuf },
    Simplex,
    CrossPolytope,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub trajectory_csv: PathBuf,
    pub final_json: PathBuf,
    pub report_json: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub n: usize,
    pub d: usize,
    #[serde(default = "one")]
    pub restarts: usize,
    #[serde(default = "default_init")]
    pub init: Init,
    pub outputs: Outputs,
    /// Samples of the covering oracle in the diagnostics.
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
}

fn one() -> usize {
    1
}

fn default_init() -> Init {
    Init::Uniform { seed: 0 }
}

fn default_oracle_samples() -> usize {
    DEFAULT_ORACLE_SAMPLES
}

impl ExperimentConfig {
    /// Reads a config file. Relative paths inside it are resolved against
    /// the directory of the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.outputs.trajectory_csv);
        fix(&mut self.outputs.final_json);
        fix(&mut self.outputs.report_json);
        if let Init::FromFile { path } = &mut self.init {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        self.optimizer.validate()?;
        if self.n < 1 || self.d < 2 {
            return Err(Error::InvalidConfig(format!(
                "need n >= 1 and d >= 2, got n = {}, d = {}",
                self.n, self.d
            )));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidConfig("restarts must be >= 1".into()));
        }
        Ok(())
    }

    /// Starting configurations, one per restart.
    pub fn initial_configurations(&self) -> Result<Vec<Configuration>> {
        let fixed = |c: Configuration| -> Result<Vec<Configuration>> {
            if c.n() != self.n || c.d() != self.d {
                return Err(Error::InvalidConfig(format!(
                    "initial configuration is {} x {}, expected {} x {}",
                    c.n(),
                    c.d(),
                    self.n,
                    self.d
                )));
            }
            Ok(vec![c; self.restarts])
        };
        match &self.init {
            Init::Uniform { seed } => (0..self.restarts)
                .map(|r| sample_uniform(self.n, self.d, derive_seed(*seed, r as u64)))
                .collect(),
            Init::FromFile { path } => fixed(Configuration::load(path)?),
            Init::Simplex => fixed(regular_simplex(self.n, self.d)?),
            Init::CrossPolytope => {
                if self.n != 2 * self.d {
                    return Err(Error::InvalidConfig(format!(
                        "cross-polytope init needs n = 2d, got n = {}, d = {}",
                        self.n, self.d
                    )));
                }
                fixed(cross_polytope(self.d)?)
            }
        }
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Provenance block embedded in every report.
pub fn provenance(config: serde_json::Value, seed: Option<u64>) -> serde_json::Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": config,
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub runs: MultiStart,
    pub diagnostics: Option<DiagnosticsReport>,
    pub report: serde_json::Value,
}

/// Runs every restart, then writes the best trajectory, its final
/// configuration and the report. Nothing is written if a run fails.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let initials = config.initial_configurations()?;
    let runs = run_restarts(&initials, &config.objective, &config.optimizer)?;
    let best = runs.best();
    let final_config = &best.trajectory.final_config;
    let diagnostics = if final_config.n() >= 2 {
        Some(diagnose(final_config, config.oracle_samples, config.optimizer.seed)?)
    } else {
        None
    };
    let restarts: Vec<_> = runs
        .restarts
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "seed": r.seed,
                "final": r.trajectory.last(),
            })
        })
        .collect();
    let report = json!({
        "schema": SCHEMA,
        "provenance": provenance(serde_json::to_value(config)?, Some(config.optimizer.seed)),
        "objective": config.objective.kind.name(),
        "best_restart": runs.best,
        "best_objective": best.trajectory.last().objective,
        "restarts": restarts,
        "diagnostics": diagnostics,
    });

    let mut csv = Vec::new();
    best.trajectory.write_csv(&mut csv)?;
    write_atomic(&config.outputs.trajectory_csv, &csv)?;
    write_atomic(&config.outputs.final_json, &final_config.to_bytes_for(&config.outputs.final_json)?)?;
    write_atomic(&config.outputs.report_json, &serde_json::to_vec_pretty(&report)?)?;
    Ok(ExperimentOutcome {
        runs,
        diagnostics,
        report,
    })
}
