//! Search drivers: plain MAP-Elites, a random-search baseline and the
//! surrogate-assisted loop (exploitation on a surrogate archive, simulation
//! of downsampled elites, retraining).
//!
//! Every random choice is seeded from the master seed and the position in
//! the run (iteration, retry round, candidate index), so a run resumed from
//! a [`SearchState`] replays the uninterrupted run exactly.

mod surrogate;

pub use surrogate::{
    decode_layout, decode_predictions, encode_grid, encode_layout, predict_request, shape_of,
    train_request, CommandSurrogate, Grid, OracleSurrogate, PredictResponse, Prediction, Request,
    Surrogate, SurrogateError, Tensor3, TrainResponse, WirePrediction, WireRecord,
    PROTOCOL_VERSION,
};

use crate::layout::{DistanceMetric, Layout, MeasureVector, Scenario};
use crate::par::{self, derive_seed};
use crate::qd::{mutate, random_genome, Archive, ArchiveConfig, ArchiveKind, Elite, EvalMeta};
use crate::repair::{repair, RepairError, SolverAdapter, DEFAULT_TIME_LIMIT};
use crate::sim::{evaluate_with_seeds, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::ControlFlow;

/// Retry rounds in a row that may come back without a single usable
/// evaluation before the run gives up.
pub const MAX_STALE_ROUNDS: usize = 20;

const STREAM_MAPELITES: u64 = 1;
const STREAM_RANDOM: u64 = 2;
const STREAM_SEED_PHASE: u64 = 3;
const STREAM_EXPLOIT: u64 = 4;
const STREAM_DOWNSAMPLE: u64 = 5;
const STREAM_ORACLE: u64 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub scenario: Scenario,
    /// Non-storage area plus storage bounds; storage contents are ignored.
    pub template: Layout,
    pub n_shelves: usize,
    /// Simulator settings; `seed` is replaced per run.
    pub sim: SimConfig,
    /// Simulations per layout (N_e).
    pub n_evals: usize,
    pub batch_size: usize,
    /// Total layouts evaluated in the simulator (N_eval).
    pub eval_budget: usize,
    pub archive: ArchiveConfig,
    pub seed: u64,
    pub repair_time_limit: f64,
    pub metric: DistanceMetric,
    /// Random layouts evaluated before the first exploitation phase.
    pub n_rand: usize,
    /// MAP-Elites iterations per exploitation phase.
    pub inner_iterations: usize,
}

impl SearchConfig {
    pub fn new(
        scenario: Scenario,
        template: Layout,
        n_shelves: usize,
        sim: SimConfig,
        archive: ArchiveConfig,
    ) -> Self {
        SearchConfig {
            scenario,
            template,
            n_shelves,
            sim,
            n_evals: 5,
            batch_size: 50,
            eval_budget: 10_000,
            archive,
            seed: 0,
            repair_time_limit: DEFAULT_TIME_LIMIT,
            metric: DistanceMetric::Bfs,
            n_rand: 500,
            inner_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub unrepaired: Layout,
    pub repaired: Layout,
    pub tile_usage_normalized: Vec<f64>,
    pub objective: f64,
    pub measures: MeasureVector,
}

/// One genome repaired and simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub elite: Elite,
    pub record: DatasetRecord,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Repair(RepairError),
    #[error("{0} retry rounds in a row produced no evaluable layout")]
    NoProgress(usize),
    #[error("invalid archive configuration: {0}")]
    Archive(#[from] crate::qd::ArchiveConfigError),
    #[error("batch size must be positive")]
    ZeroBatch,
}

/// Repairs and simulates one genome. `Ok(None)` means the genome was
/// skipped: the repair found no solution, or its result could not be
/// simulated.
pub fn evaluate_genome(
    cfg: &SearchConfig,
    solver: &dyn SolverAdapter,
    genome: &Layout,
    seed: u64,
) -> Result<Option<Evaluation>, SearchError> {
    let outcome = match repair(
        genome,
        cfg.scenario,
        cfg.n_shelves,
        solver,
        cfg.repair_time_limit,
    ) {
        Ok(o) => o,
        Err(RepairError::Decode(msg)) => {
            log::warn!("repair result rejected: {msg}");
            return Ok(None);
        }
        Err(e) => return Err(SearchError::Repair(e)),
    };
    let Some(repaired) = outcome.repaired else {
        log::debug!("repair gave no layout: {:?}", outcome.status);
        return Ok(None);
    };
    let seeds: Vec<u64> = (0..cfg.n_evals as u64)
        .map(|k| derive_seed(seed, &[k]))
        .collect();
    let mut sim = cfg.sim.clone();
    sim.scenario = cfg.scenario;
    let res = match evaluate_with_seeds(&repaired, &sim, &seeds, cfg.metric) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("repaired layout could not be simulated: {e}");
            return Ok(None);
        }
    };
    let eval = EvalMeta {
        n_runs: res.runs.len(),
        throughput_sd: res.throughput_sd(),
        success_rate: res.success_rate(),
        seeds,
    };
    Ok(Some(Evaluation {
        elite: Elite {
            genome: genome.clone(),
            repaired: repaired.clone(),
            objective: res.mean_throughput,
            measures: res.measures,
            eval: Some(eval),
        },
        record: DatasetRecord {
            unrepaired: genome.clone(),
            repaired,
            tile_usage_normalized: res.tile_usage_normalized,
            objective: res.mean_throughput,
            measures: res.measures,
        },
    }))
}

fn rng_for(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

/// Evaluates candidates from `make` until `want` succeed. Each round asks
/// for the shortfall; results are kept in candidate order. Returns the
/// evaluations and the number of skipped candidates.
fn evaluate_until(
    cfg: &SearchConfig,
    solver: &dyn SolverAdapter,
    want: usize,
    stream: &[u64],
    mut make: impl FnMut(usize, &mut ChaCha8Rng) -> Vec<Layout>,
) -> Result<(Vec<Evaluation>, usize), SearchError> {
    let mut got = Vec::with_capacity(want);
    let mut failed = 0;
    let mut stale = 0;
    let mut round = 0u64;
    while got.len() < want {
        let mut parts = stream.to_vec();
        parts.push(round);
        let mut rng = rng_for(cfg.seed, &parts);
        let cands: Vec<(u64, Layout)> = make(want - got.len(), &mut rng)
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                let mut p = parts.clone();
                p.push(i as u64);
                (derive_seed(cfg.seed, &p), g)
            })
            .collect();
        let results = par::map(&cands, |(s, g)| evaluate_genome(cfg, solver, g, *s));
        let before = got.len();
        for r in results {
            match r? {
                Some(e) if got.len() < want => got.push(e),
                Some(_) => {}
                None => failed += 1,
            }
        }
        if got.len() == before {
            stale += 1;
            if stale >= MAX_STALE_ROUNDS {
                return Err(SearchError::NoProgress(stale));
            }
        } else {
            stale = 0;
        }
        round += 1;
    }
    Ok((got, failed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterStats {
    pub iteration: usize,
    /// Cumulative simulator evaluations.
    pub evaluations: usize,
    /// Cumulative skipped candidates.
    pub failed_repairs: usize,
    pub qd_score: f64,
    pub coverage: f64,
    pub num_elites: usize,
    pub best_objective: Option<f64>,
}

/// Everything needed to continue a run. Saved after every iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchState {
    /// Completed iterations (exploitation phases for the surrogate loop,
    /// counting the seeding phase as the first).
    pub iteration: usize,
    pub evaluations: usize,
    pub failed_repairs: usize,
    pub archive: Archive,
    pub log: Vec<IterStats>,
    pub dataset: Vec<DatasetRecord>,
    /// Per-phase training losses, keyed by sub-network.
    pub losses: Vec<BTreeMap<String, Vec<f64>>>,
}

impl SearchState {
    pub fn new(cfg: &SearchConfig) -> Self {
        SearchState {
            iteration: 0,
            evaluations: 0,
            failed_repairs: 0,
            archive: Archive::new(cfg.archive.clone(), ArchiveKind::GroundTruth),
            log: Vec::new(),
            dataset: Vec::new(),
            losses: Vec::new(),
        }
    }

    pub fn is_done(&self, cfg: &SearchConfig) -> bool {
        self.evaluations >= cfg.eval_budget
    }

    fn absorb(&mut self, evals: Vec<Evaluation>, failed: usize) {
        self.evaluations += evals.len();
        self.failed_repairs += failed;
        for e in evals {
            self.dataset.push(e.record);
            self.archive.add(e.elite);
        }
        self.iteration += 1;
        let s = self.archive.stats();
        self.log.push(IterStats {
            iteration: self.iteration,
            evaluations: self.evaluations,
            failed_repairs: self.failed_repairs,
            qd_score: s.qd_score,
            coverage: s.coverage,
            num_elites: s.num_elites,
            best_objective: s.best_objective,
        });
    }
}

fn check(cfg: &SearchConfig) -> Result<(), SearchError> {
    cfg.archive.check()?;
    if cfg.batch_size == 0 {
        return Err(SearchError::ZeroBatch);
    }
    Ok(())
}

/// Plain MAP-Elites until the evaluation budget is spent.
pub fn run_mapelites(
    cfg: &SearchConfig,
    solver: &dyn SolverAdapter,
) -> Result<SearchState, SearchError> {
    resume_mapelites(cfg, solver, SearchState::new(cfg), |_| {
        ControlFlow::Continue(())
    })
}

/// Continues a MAP-Elites run from `state`. `on_iteration` sees the state
/// after every iteration and may stop the run early.
pub fn resume_mapelites(
    cfg: &SearchConfig,
    solver: &dyn SolverAdapter,
    mut state: SearchState,
    mut on_iteration: impl FnMut(&SearchState) -> ControlFlow<()>,
) -> Result<SearchState, SearchError> {
    check(cfg)?;
    while !state.is_done(cfg) {
        let want = cfg.batch_size.min(cfg.eval_budget - state.evaluations);
        let archive = &state.archive;
        let (evals, failed) = evaluate_until(
            cfg,
            solver,
            want,
            &[STREAM_MAPELITES, state.iteration as u64],
            |n, rng| parents_or_random(archive, &cfg.template, n, rng),
        )?;
        state.absorb(evals, failed);
        let s = state.log.last().unwrap();
        log::info!(
            "iteration {}: evals {} qd {:.4} coverage {:.4} best {:?}",
            s.iteration,
            s.evaluations,
            s.qd_score,
            s.coverage,
            s.best_objective
        );
        if on_iteration(&state).is_break() {
            break;
        }
    }
    Ok(state)
}

/// Mutated uniform draws from the archive, or random genomes while it is
/// empty.
fn parents_or_random(
    archive: &Archive,
    template: &Layout,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Layout> {
    if archive.is_empty() {
        (0..n).map(|_| random_genome(template, rng)).collect()
    } else {
        archive
            .sample(n, rng)
            .into_iter()
            .map(|e| mutate(&e.genome, rng))
            .collect()
    }
}

/// Random-search baseline: `n` random genomes, repaired and simulated.
/// Skipped genomes are replaced, so exactly `n` evaluations come back.
pub fn random_search(
    cfg: &SearchConfig,
    solver: &dyn SolverAdapter,
    n: usize,
) -> Result<Vec<Evaluation>, SearchError> {
    let mut out = Vec::with_capacity(n);
    let mut chunk = 0u64;
    while out.len() < n {
        let want = cfg.batch_size.max(1).min(n - out.len());
        let (evals, _) = evaluate_until(cfg, solver, want, &[STREAM_RANDOM, chunk], |k, rng| {
            (0..k).map(|_| random_genome(&cfg.template, rng)).collect()
        })?;
        out.extend(evals);
        chunk += 1;
    }
    Ok(out)
}

pub fn best_of(evals: &[Evaluation]) -> Option<&Evaluation> {
    evals
        .iter()
        .max_by(|a, b| a.elite.objective.total_cmp(&b.elite.objective))
}

/// Surrogate-assisted search. Without a surrogate, or once the surrogate
/// fails to answer, the remaining budget is spent on plain MAP-Elites.
pub fn run_dsage(
    cfg: &SearchConfig,
    solver: &dyn SolverAdapter,
    surrogate: Option<&mut dyn Surrogate>,
) -> Result<SearchState, SearchError> {
    resume_dsage(cfg, solver, surrogate, SearchState::new(cfg), |_| {
        ControlFlow::Continue(())
    })
}

pub fn resume_dsage(
    cfg: &SearchConfig,
    solver: &dyn SolverAdapter,
    surrogate: Option<&mut dyn Surrogate>,
    mut state: SearchState,
    mut on_iteration: impl FnMut(&SearchState) -> ControlFlow<()>,
) -> Result<SearchState, SearchError> {
    check(cfg)?;
    let Some(model) = surrogate else {
        log::warn!("no surrogate available, running plain MAP-Elites");
        return resume_mapelites(cfg, solver, state, on_iteration);
    };

    if state.iteration == 0 {
        let want = cfg.n_rand.min(cfg.eval_budget);
        let (evals, failed) = evaluate_until(cfg, solver, want, &[STREAM_SEED_PHASE], |k, rng| {
            (0..k).map(|_| random_genome(&cfg.template, rng)).collect()
        })?;
        state.absorb(evals, failed);
        log::info!("seeded with {} random layouts", state.evaluations);
        if on_iteration(&state).is_break() {
            return Ok(state);
        }
    }
    if state.is_done(cfg) {
        return Ok(state);
    }
    // Training happens after every phase, including on resume, so the
    // model always reflects the whole dataset before exploitation.
    match model.train(&state.dataset) {
        Ok(l) => state.losses.push(l),
        Err(e) => return degrade(cfg, solver, state, on_iteration, e),
    }

    let mut stale = 0;
    while !state.is_done(cfg) {
        let phase = state.iteration as u64;
        let surrogate_archive = match exploit(cfg, model, &state.archive, phase) {
            Ok(a) => a,
            Err(e) => return degrade(cfg, solver, state, on_iteration, e),
        };
        let mut rng = rng_for(cfg.seed, &[STREAM_DOWNSAMPLE, phase]);
        let mut picks = surrogate_archive.downsample(&mut rng);
        picks.truncate(cfg.eval_budget - state.evaluations);
        let cands: Vec<(u64, Layout)> = picks
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                (
                    derive_seed(cfg.seed, &[STREAM_DOWNSAMPLE, phase, i as u64]),
                    e.genome,
                )
            })
            .collect();
        let mut evals = Vec::new();
        let mut failed = 0;
        for r in par::map(&cands, |(s, g)| evaluate_genome(cfg, solver, g, *s)) {
            match r? {
                Some(e) => evals.push(e),
                None => failed += 1,
            }
        }
        if evals.is_empty() {
            stale += 1;
            if stale >= MAX_STALE_ROUNDS {
                return Err(SearchError::NoProgress(stale));
            }
        } else {
            stale = 0;
        }
        state.absorb(evals, failed);
        let s = state.log.last().unwrap();
        log::info!(
            "phase {}: evals {} qd {:.4} coverage {:.4} best {:?}",
            s.iteration,
            s.evaluations,
            s.qd_score,
            s.coverage,
            s.best_objective
        );
        if !state.is_done(cfg) {
            match model.train(&state.dataset) {
                Ok(l) => state.losses.push(l),
                Err(e) => return degrade(cfg, solver, state, on_iteration, e),
            }
        }
        if on_iteration(&state).is_break() {
            break;
        }
    }
    Ok(state)
}

fn degrade(
    cfg: &SearchConfig,
    solver: &dyn SolverAdapter,
    state: SearchState,
    on_iteration: impl FnMut(&SearchState) -> ControlFlow<()>,
    err: SurrogateError,
) -> Result<SearchState, SearchError> {
    log::warn!("{err}; spending the remaining budget on plain MAP-Elites");
    resume_mapelites(cfg, solver, state, on_iteration)
}

/// One exploitation phase: a fresh surrogate archive, seeded with the
/// ground-truth elites' genomes, then `inner_iterations` batches of mutants
/// scored by the surrogate.
fn exploit(
    cfg: &SearchConfig,
    model: &mut dyn Surrogate,
    ground_truth: &Archive,
    phase: u64,
) -> Result<Archive, SurrogateError> {
    let mut archive = Archive::new(cfg.archive.clone(), ArchiveKind::Surrogate);
    let seeds: Vec<Layout> = ground_truth.iter().map(|(_, e)| e.genome.clone()).collect();
    if !seeds.is_empty() {
        add_predicted(&mut archive, model, seeds)?;
    }
    for it in 0..cfg.inner_iterations {
        let mut rng = rng_for(cfg.seed, &[STREAM_EXPLOIT, phase, it as u64]);
        let batch = parents_or_random(&archive, &cfg.template, cfg.batch_size, &mut rng);
        add_predicted(&mut archive, model, batch)?;
    }
    Ok(archive)
}

fn add_predicted(
    archive: &mut Archive,
    model: &mut dyn Surrogate,
    genomes: Vec<Layout>,
) -> Result<(), SurrogateError> {
    let preds = model.predict(&genomes)?;
    for (g, p) in genomes.into_iter().zip(preds) {
        if !p.objective.is_finite() {
            continue;
        }
        archive.add(Elite {
            repaired: p.repaired.unwrap_or_else(|| g.clone()),
            genome: g,
            objective: p.objective,
            measures: p.measures,
            eval: None,
        });
    }
    Ok(())
}

/// Seed stream for [`OracleSurrogate`] simulations, kept apart from the
/// streams used for ground-truth evaluation.
pub fn oracle_seed(master: u64) -> u64 {
    derive_seed(master, &[STREAM_ORACLE])
}
