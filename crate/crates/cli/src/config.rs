//! Experiment configuration. A TOML file may name a setup to inherit from
//! and override any field of it.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use warehouse_layout::dsage::SearchConfig;
use warehouse_layout::layout::DistanceMetric;
use warehouse_layout::qd::ArchiveConfig;
use warehouse_layout::setups::{named_setup, ArchiveRows, Setup, SETUP_NAMES};
use warehouse_layout::sim::{Planner, SimConfig};
use warehouse_layout::{Layout, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    MapElites,
    Dsage,
}

/// The file as written: every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub setup: Option<String>,
    pub archive_rows: Option<ArchiveRows>,
    pub scenario: Option<Scenario>,
    pub full: Option<[usize; 2]>,
    pub storage: Option<[usize; 2]>,
    pub n_shelves: Option<usize>,
    pub n_fixed: Option<usize>,
    pub planner: Option<Planner>,
    pub n_agents: Option<usize>,
    pub n_evals: Option<usize>,
    pub horizon: Option<u32>,
    pub eval_horizon: Option<u32>,
    pub eval_runs: Option<usize>,
    pub rhcr_window: Option<u32>,
    pub rhcr_period: Option<u32>,
    pub cluster_len: Option<usize>,
    pub metric: Option<DistanceMetric>,
    pub archive: Option<RawArchive>,
    pub algorithm: Option<Algorithm>,
    pub batch_size: Option<usize>,
    pub eval_budget: Option<usize>,
    pub n_rand: Option<usize>,
    pub inner_iterations: Option<usize>,
    pub seed: Option<u64>,
    pub repair_time_limit: Option<f64>,
    pub solver: Option<String>,
    pub surrogate: Option<Vec<String>>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawArchive {
    pub dims: Option<[usize; 2]>,
    pub component_range: Option<[f64; 2]>,
    pub task_length_range: Option<[f64; 2]>,
    pub downsample_dims: Option<[usize; 2]>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setup: Option<String>,
    pub scenario: Scenario,
    pub full: [usize; 2],
    pub storage: [usize; 2],
    pub n_shelves: usize,
    pub n_fixed: usize,
    pub planner: Planner,
    pub n_agents: usize,
    pub n_evals: usize,
    pub horizon: u32,
    pub eval_horizon: u32,
    pub eval_runs: usize,
    pub rhcr_window: u32,
    pub rhcr_period: u32,
    pub cluster_len: usize,
    pub metric: DistanceMetric,
    pub archive: ArchiveConfig,
    pub algorithm: Algorithm,
    pub batch_size: usize,
    pub eval_budget: usize,
    pub n_rand: usize,
    pub inner_iterations: usize,
    pub seed: u64,
    pub repair_time_limit: f64,
    pub solver: Option<String>,
    pub surrogate: Option<Vec<String>>,
    pub output: PathBuf,
    pub threads: usize,
}

#[derive(Debug, thiserror::Error)]
#[error("{field}: {msg}")]
pub struct ConfigError {
    pub field: String,
    pub msg: String,
}

fn err(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        msg: msg.into(),
    }
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err("<file>", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| text[s].trim().to_string())
                .unwrap_or_default();
            err(
                if field.is_empty() { "<file>" } else { &field },
                e.message().to_string(),
            )
        })
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let base: Option<Setup> = match &self.setup {
            Some(name) => Some(
                named_setup(name, self.archive_rows.unwrap_or_default()).ok_or_else(|| {
                    err(
                        "setup",
                        format!("unknown setup {name:?}, expected one of {SETUP_NAMES:?}"),
                    )
                })?,
            ),
            None => None,
        };
        macro_rules! pick {
            ($f:ident, $from_base:expr) => {
                match (self.$f.clone(), base.as_ref()) {
                    (Some(v), _) => v,
                    (None, Some(b)) => $from_base(b),
                    (None, None) => {
                        return Err(err(stringify!($f), "required when no setup is named"))
                    }
                }
            };
        }
        let scenario = pick!(scenario, |b: &Setup| b.scenario);
        let full = pick!(full, |b: &Setup| b.full);
        let storage = pick!(storage, |b: &Setup| b.storage);
        let n_shelves = pick!(n_shelves, |b: &Setup| b.n_shelves);
        let n_fixed = pick!(n_fixed, |b: &Setup| b.n_fixed);
        let n_agents = pick!(n_agents, |b: &Setup| b.n_agents);
        let sim = SimConfig::default();
        let raw_archive = self.archive.clone().unwrap_or_default();
        let archive = match (&raw_archive, base.as_ref()) {
            (a, Some(b)) => ArchiveConfig {
                dims: a.dims.unwrap_or(b.archive.dims),
                component_range: a.component_range.unwrap_or(b.archive.component_range),
                task_length_range: a.task_length_range.unwrap_or(b.archive.task_length_range),
                downsample_dims: a.downsample_dims.unwrap_or(b.archive.downsample_dims),
            },
            (a, None) => ArchiveConfig {
                dims: a
                    .dims
                    .ok_or_else(|| err("archive.dims", "required when no setup is named"))?,
                component_range: a.component_range.ok_or_else(|| {
                    err("archive.component_range", "required when no setup is named")
                })?,
                task_length_range: a.task_length_range.ok_or_else(|| {
                    err(
                        "archive.task_length_range",
                        "required when no setup is named",
                    )
                })?,
                downsample_dims: a.downsample_dims.or(a.dims).unwrap(),
            },
        };
        let cfg = ExperimentConfig {
            setup: self.setup.clone(),
            scenario,
            full,
            storage,
            n_shelves,
            n_fixed,
            planner: self
                .planner
                .or(base.as_ref().map(|b| b.planner))
                .unwrap_or_default(),
            n_agents,
            n_evals: self.n_evals.unwrap_or(5),
            horizon: self.horizon.unwrap_or(1000),
            eval_horizon: self.eval_horizon.unwrap_or(5000),
            eval_runs: self.eval_runs.unwrap_or(10),
            rhcr_window: self.rhcr_window.unwrap_or(sim.rhcr_window),
            rhcr_period: self.rhcr_period.unwrap_or(sim.rhcr_period),
            cluster_len: self
                .cluster_len
                .or(base.as_ref().map(|b| b.cluster_len))
                .unwrap_or(10),
            metric: self.metric.unwrap_or_default(),
            archive,
            algorithm: self.algorithm.unwrap_or_default(),
            batch_size: self.batch_size.unwrap_or(50),
            eval_budget: self.eval_budget.unwrap_or(10_000),
            n_rand: self.n_rand.unwrap_or(500),
            inner_iterations: self
                .inner_iterations
                .or(base.as_ref().map(|b| b.inner_iterations))
                .unwrap_or(10_000),
            seed: self.seed.unwrap_or(0),
            repair_time_limit: self
                .repair_time_limit
                .unwrap_or(warehouse_layout::repair::DEFAULT_TIME_LIMIT),
            solver: self.solver.clone(),
            surrogate: self.surrogate.clone(),
            output: self
                .output
                .clone()
                .unwrap_or_else(|| PathBuf::from("runs/default")),
            threads: self.threads.unwrap_or(0),
        };
        cfg.check()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    fn check(&self) -> Result<(), ConfigError> {
        if self.storage[0] > self.full[0] || self.storage[1] > self.full[1] {
            return Err(err("storage", "larger than the full grid"));
        }
        if self.storage.contains(&0) {
            return Err(err("storage", "dimensions must be positive"));
        }
        if self.n_shelves > self.storage[0] * self.storage[1] {
            return Err(err("n_shelves", "more shelves than storage tiles"));
        }
        for (name, v) in [
            ("n_agents", self.n_agents),
            ("n_evals", self.n_evals),
            ("eval_runs", self.eval_runs),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(err(name, "must be positive"));
            }
        }
        if self.horizon == 0 {
            return Err(err("horizon", "must be positive"));
        }
        if self.eval_horizon == 0 {
            return Err(err("eval_horizon", "must be positive"));
        }
        if self.rhcr_period == 0 || self.rhcr_period > self.rhcr_window {
            return Err(err("rhcr_period", "must be in 1..=rhcr_window"));
        }
        if !(self.repair_time_limit > 0.0) {
            return Err(err("repair_time_limit", "must be positive"));
        }
        if self.cluster_len == 0 {
            return Err(err("cluster_len", "must be positive"));
        }
        if let Some(s) = &self.surrogate {
            if s.is_empty() {
                return Err(err("surrogate", "command must not be empty"));
            }
        }
        self.archive
            .check()
            .map_err(|e| err("archive", e.to_string()))?;
        self.template()?;
        Ok(())
    }

    pub fn template(&self) -> Result<Layout, ConfigError> {
        warehouse_layout::layout::templates::template(
            self.scenario,
            self.full[0],
            self.full[1],
            self.storage[0],
            self.storage[1],
            self.n_fixed,
        )
        .map_err(|e| err("n_fixed", e.to_string()))
    }

    pub fn human_layout(&self) -> Result<Layout, ConfigError> {
        warehouse_layout::layout::templates::human_style(
            &self.template()?,
            self.n_shelves,
            self.cluster_len,
        )
        .map_err(|e| err("n_shelves", e.to_string()))
    }

    pub fn sim(&self, horizon: u32) -> SimConfig {
        SimConfig {
            scenario: self.scenario,
            n_agents: self.n_agents,
            horizon,
            planner: self.planner,
            rhcr_window: self.rhcr_window,
            rhcr_period: self.rhcr_period,
            seed: self.seed,
            ..SimConfig::default()
        }
    }

    pub fn search(&self) -> Result<SearchConfig, ConfigError> {
        let mut s = SearchConfig::new(
            self.scenario,
            self.template()?,
            self.n_shelves,
            self.sim(self.horizon),
            self.archive.clone(),
        );
        s.n_evals = self.n_evals;
        s.batch_size = self.batch_size;
        s.eval_budget = self.eval_budget;
        s.seed = self.seed;
        s.repair_time_limit = self.repair_time_limit;
        s.metric = self.metric;
        s.n_rand = self.n_rand;
        s.inner_iterations = self.inner_iterations;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
