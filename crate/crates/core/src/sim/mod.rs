//! Lifelong multi-agent path finding simulation.

mod check;
mod dpp;
pub mod grid;
mod reservation;
mod rhcr;
pub mod sipp;
pub mod window;

pub use check::{check_trajectory, TrajectoryError};
pub use grid::Env;
pub use reservation::{ReservationTable, INF};
pub use sipp::{sipp, Plan, SippQuery};
pub use window::{find_conflicts, plan_window, MapfSolver, SolverFailure, WindowAgent};

use crate::layout::{
    measures, validate, DistanceMetric, Layout, MeasureError, MeasureVector, Scenario, TileType,
    ValidationReport,
};
use crate::par;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Planner {
    #[default]
    Rhcr,
    Dpp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub n_agents: usize,
    pub horizon: u32,
    pub planner: Planner,
    pub rhcr_window: u32,
    pub rhcr_period: u32,
    pub mapf_solver: MapfSolver,
    pub seed: u64,
    pub early_stop_on_congestion: bool,
    /// Congested runs score zero instead of their truncated throughput.
    pub zero_on_congestion: bool,
    pub pbs_node_budget: usize,
    pub record_trajectory: bool,
    /// Reject layouts that are not valid (well-formed for home locations).
    /// Turning this off only keeps the reachability requirements.
    pub check_layout: bool,
    /// Fixed start tiles instead of random placement.
    pub start_locations: Option<Vec<usize>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scenario: Scenario::Workstation,
            n_agents: 1,
            horizon: 1000,
            planner: Planner::Rhcr,
            rhcr_window: 10,
            rhcr_period: 5,
            mapf_solver: MapfSolver::Pbs,
            seed: 0,
            early_stop_on_congestion: true,
            zero_on_congestion: false,
            pbs_node_budget: 10_000,
            record_trajectory: false,
            check_layout: true,
            start_locations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub throughput: f64,
    pub finished_per_timestep: Vec<u32>,
    /// Row-major occupancy counts.
    pub tile_usage: Vec<u64>,
    pub congested: bool,
    pub congestion_timestep: Option<u32>,
    pub elapsed_steps: u32,
    pub tasks_finished: Vec<u32>,
    pub solver_failures: u32,
    pub seed: u64,
    /// Agent locations at times 0..=elapsed_steps, if recorded.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trajectory: Option<Vec<Vec<usize>>>,
}

impl SimResult {
    pub fn total_finished(&self) -> u64 {
        self.finished_per_timestep.iter().map(|&x| x as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mean_throughput: f64,
    pub measures: MeasureVector,
    pub tile_usage_normalized: Vec<f64>,
    pub runs: Vec<SimResult>,
}

impl EvalResult {
    pub fn success_rate(&self) -> f64 {
        if self.runs.is_empty() {
            return 0.0;
        }
        self.runs.iter().filter(|r| !r.congested).count() as f64 / self.runs.len() as f64
    }

    pub fn throughput_sd(&self) -> f64 {
        let n = self.runs.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let var = self
            .runs
            .iter()
            .map(|r| (r.throughput - self.mean_throughput).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        var.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("layout does not meet the scenario's requirements: {0:?}")]
    InvalidLayout(Box<ValidationReport>),
    #[error("not enough start locations for {agents} agents ({available} available)")]
    TooManyAgents { agents: usize, available: usize },
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Move,
    Wait,
}

/// True iff strictly more than half of the given actions are waits.
pub fn detect_congestion(actions: &[Action]) -> bool {
    let waits = actions.iter().filter(|&&a| a == Action::Wait).count();
    2 * waits > actions.len()
}

/// Per-run goal assignment.
pub(crate) struct Tasks {
    scenario: Scenario,
    endpoints: Vec<usize>,
    workstations: Vec<usize>,
    homes: Vec<usize>,
}

impl Tasks {
    fn new(layout: &Layout, scenario: Scenario) -> Self {
        Tasks {
            scenario,
            endpoints: layout.indices_of(TileType::Endpoint),
            workstations: layout.indices_of(TileType::Workstation),
            homes: layout.indices_of(TileType::HomeLocation),
        }
    }

    fn has_tasks(&self) -> bool {
        !self.endpoints.is_empty()
    }

    /// Goal following `prev` (the agent's previous goal or its location).
    /// `count` is how many goals the agent has been given so far.
    fn next(&self, prev: usize, count: u64, rng: &mut ChaCha8Rng) -> Option<usize> {
        if self.endpoints.is_empty() {
            return None;
        }
        match self.scenario {
            Scenario::Workstation => {
                let pool = if count % 2 == 1 && !self.workstations.is_empty() {
                    &self.workstations
                } else {
                    &self.endpoints
                };
                pool.choose(rng).copied()
            }
            Scenario::HomeLocation => {
                if self.endpoints.len() == 1 {
                    return Some(self.endpoints[0]);
                }
                loop {
                    let g = *self.endpoints.choose(rng).unwrap();
                    if g != prev {
                        return Some(g);
                    }
                }
            }
        }
    }
}

/// Step bookkeeping shared by both planners.
pub(crate) struct Recorder {
    pub finished_per_timestep: Vec<u32>,
    pub tile_usage: Vec<u64>,
    pub tasks_finished: Vec<u32>,
    pub trajectory: Option<Vec<Vec<usize>>>,
    pub congested_at: Option<u32>,
}

impl Recorder {
    fn new(n_cells: usize, start: &[usize], record: bool) -> Self {
        Recorder {
            finished_per_timestep: Vec::new(),
            tile_usage: vec![0; n_cells],
            tasks_finished: vec![0; start.len()],
            trajectory: record.then(|| vec![start.to_vec()]),
            congested_at: None,
        }
    }

    /// Records the step that moved agents to `locs`.
    fn step(&mut self, locs: &[usize], finished: &[u32], actions: &[Action]) {
        let t = self.finished_per_timestep.len() as u32;
        let mut n = 0;
        for (a, &f) in finished.iter().enumerate() {
            self.tasks_finished[a] += f;
            n += f;
        }
        self.finished_per_timestep.push(n);
        for &c in locs {
            self.tile_usage[c] += 1;
        }
        if let Some(tr) = &mut self.trajectory {
            tr.push(locs.to_vec());
        }
        if self.congested_at.is_none() && detect_congestion(actions) {
            self.congested_at = Some(t);
        }
    }
}

fn check_preconditions(layout: &Layout, config: &SimConfig) -> Result<Vec<usize>, SimError> {
    if config.rhcr_period == 0 || config.rhcr_window < config.rhcr_period {
        return Err(SimError::Config(format!(
            "need w >= h >= 1, got w={} h={}",
            config.rhcr_window, config.rhcr_period
        )));
    }
    if config.planner == Planner::Dpp && config.scenario != Scenario::HomeLocation {
        return Err(SimError::Config(
            "DPP runs only in the home-location scenario".into(),
        ));
    }
    if config.check_layout {
        let report = validate(layout, config.scenario, config.n_agents);
        let ok = match config.scenario {
            Scenario::Workstation => report.is_valid,
            Scenario::HomeLocation => report.is_well_formed,
        };
        if !ok {
            return Err(SimError::InvalidLayout(Box::new(report)));
        }
    }
    if let Some(s) = &config.start_locations {
        let mut seen = std::collections::HashSet::new();
        let ok = s.len() == config.n_agents
            && s.iter()
                .all(|&c| c < layout.len() && layout.tile(c).is_traversable() && seen.insert(c));
        if !ok {
            return Err(SimError::Config(
                "start_locations must be n_agents distinct traversable tiles".into(),
            ));
        }
    }
    let starts = start_pool(layout, config.scenario);
    if config.start_locations.is_none() && starts.len() < config.n_agents {
        return Err(SimError::TooManyAgents {
            agents: config.n_agents,
            available: starts.len(),
        });
    }
    Ok(starts)
}

/// Candidate start tiles: home locations, or non-shelf tiles connected to the
/// task tiles.
fn start_pool(layout: &Layout, scenario: Scenario) -> Vec<usize> {
    match scenario {
        Scenario::HomeLocation => layout.indices_of(TileType::HomeLocation),
        Scenario::Workstation => {
            let anchor = layout
                .indices_of(TileType::Endpoint)
                .into_iter()
                .chain(layout.indices_of(TileType::Workstation))
                .next();
            match anchor {
                Some(a) => {
                    let d = crate::layout::bfs(layout, a);
                    (0..layout.len()).filter(|&i| d[i] != u32::MAX).collect()
                }
                None => (0..layout.len())
                    .filter(|&i| layout.tile(i).is_traversable())
                    .collect(),
            }
        }
    }
}

/// Runs one simulation.
pub fn run_simulation(layout: &Layout, config: &SimConfig) -> Result<SimResult, SimError> {
    let pool = check_preconditions(layout, config)?;
    let mut rng: ChaCha8Rng = rand::SeedableRng::seed_from_u64(config.seed);
    let starts: Vec<usize> = match &config.start_locations {
        Some(s) => s.clone(),
        None => rand::seq::index::sample(&mut rng, pool.len(), config.n_agents)
            .into_iter()
            .map(|i| pool[i])
            .collect(),
    };
    let env = Env::new(layout);
    let tasks = Tasks::new(layout, config.scenario);
    let mut rec = Recorder::new(layout.len(), &starts, config.record_trajectory);
    let failures = match config.planner {
        Planner::Rhcr => rhcr::run(&env, &tasks, config, starts, &mut rng, &mut rec),
        Planner::Dpp => dpp::run(&env, &tasks, config, starts, &mut rng, &mut rec),
    };
    let elapsed = rec.finished_per_timestep.len() as u32;
    let total: u64 = rec.finished_per_timestep.iter().map(|&x| x as u64).sum();
    let congested = rec.congested_at.is_some();
    let throughput = if elapsed == 0 || (congested && config.zero_on_congestion) {
        0.0
    } else {
        total as f64 / elapsed as f64
    };
    Ok(SimResult {
        throughput,
        finished_per_timestep: rec.finished_per_timestep,
        tile_usage: rec.tile_usage,
        congested,
        congestion_timestep: rec.congested_at,
        elapsed_steps: elapsed,
        tasks_finished: rec.tasks_finished,
        solver_failures: failures,
        seed: config.seed,
        trajectory: rec.trajectory,
    })
}

/// Seed of run `k` under master seed `seed`.
pub fn run_seed(seed: u64, k: usize) -> u64 {
    par::derive_seed(seed, &[k as u64])
}

/// Runs `n_runs` simulations with seeds derived from `config.seed`.
pub fn evaluate(
    layout: &Layout,
    config: &SimConfig,
    n_runs: usize,
) -> Result<EvalResult, SimError> {
    let seeds: Vec<u64> = (0..n_runs).map(|k| run_seed(config.seed, k)).collect();
    evaluate_with_seeds(layout, config, &seeds, DistanceMetric::Bfs)
}

pub fn evaluate_with_seeds(
    layout: &Layout,
    config: &SimConfig,
    seeds: &[u64],
    metric: DistanceMetric,
) -> Result<EvalResult, SimError> {
    let m = measures(layout, config.scenario, metric)?;
    let runs = par::map(seeds, |&s| {
        let mut c = config.clone();
        c.seed = s;
        run_simulation(layout, &c)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mean = if runs.is_empty() {
        0.0
    } else {
        runs.iter().map(|r| r.throughput).sum::<f64>() / runs.len() as f64
    };
    Ok(EvalResult {
        mean_throughput: mean,
        measures: m,
        tile_usage_normalized: normalize_usage(layout, &runs),
        runs,
    })
}

fn normalize_usage(layout: &Layout, runs: &[SimResult]) -> Vec<f64> {
    let mut sum = vec![0f64; layout.len()];
    for r in runs {
        for (s, &u) in sum.iter_mut().zip(&r.tile_usage) {
            *s += u as f64;
        }
    }
    let total: f64 = sum.iter().sum();
    if total > 0.0 {
        sum.iter_mut().for_each(|s| *s /= total);
        return sum;
    }
    // No occupancy recorded: spread uniformly over traversable tiles.
    let n = layout
        .tiles()
        .iter()
        .filter(|t| t.is_traversable())
        .count()
        .max(1);
    (0..layout.len())
        .map(|i| {
            if layout.tile(i).is_traversable() {
                1.0 / n as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// Tile usage as CSV rows matching the grid.
pub fn usage_csv<T: std::fmt::Display>(width: usize, usage: &[T]) -> String {
    let mut out = String::new();
    for row in usage.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub(crate) fn shuffled(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}

#[cfg(test)]
mod tests;
