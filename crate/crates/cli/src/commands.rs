use crate::config::{Algorithm, ConfigError, ExperimentConfig, RawConfig};
use crate::ConfigArgs;
use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use warehouse_layout::dsage::{
    resume_dsage, resume_mapelites, CommandSurrogate, SearchError, SearchState, Surrogate,
};
use warehouse_layout::layout::{validate, MeasureVector};
use warehouse_layout::qd::{
    grid_svg, heatmap_csv, heatmap_svg, load_archive, save_archive, Archive, ArchiveStats,
};
use warehouse_layout::repair::{
    self, format_assignment, solve_lp_file, CommandSolver, HighsSolver, RepairOutcome,
    SolverAdapter, SOLVER_ENV,
};
use warehouse_layout::sim::{evaluate as simulate, usage_csv, EvalResult};
use warehouse_layout::{Layout, Scenario, TileType};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("simulation error: {0}")]
    Simulation(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Simulation(_) => 4,
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Repair(e) => CliError::Solver(e.to_string()),
            SearchError::NoProgress(_) => CliError::Simulation(e.to_string()),
            SearchError::Archive(_) | SearchError::ZeroBatch => CliError::Config(ConfigError {
                field: "archive".into(),
                msg: e.to_string(),
            }),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn load(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut raw = match &args.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    if args.setup.is_some() {
        raw.setup = args.setup.clone();
    }
    if raw.setup.is_none() && args.config.is_none() {
        return Err(ConfigError {
            field: "setup".into(),
            msg: "pass --config or --setup".into(),
        }
        .into());
    }
    if args.seed.is_some() {
        raw.seed = args.seed;
    }
    Ok(raw.resolve()?)
}

/// Flag, then environment, then config file, then built-in HiGHS.
fn solver(args: &ConfigArgs, cfg: Option<&ExperimentConfig>) -> Result<Box<dyn SolverAdapter>> {
    let cmd = args
        .solver
        .clone()
        .or_else(|| {
            std::env::var(SOLVER_ENV)
                .ok()
                .filter(|s| !s.trim().is_empty())
        })
        .or_else(|| cfg.and_then(|c| c.solver.clone()));
    match cmd {
        Some(c) => CommandSolver::parse(&c)
            .map(|s| Box::new(s) as Box<dyn SolverAdapter>)
            .ok_or_else(|| {
                CliError::Config(ConfigError {
                    field: "solver".into(),
                    msg: "empty command".into(),
                })
            }),
        None => Ok(Box::new(HighsSolver::default())),
    }
}

fn init_pool(threads: usize) {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::warn!("worker pool already set up: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

fn read_layout(path: &Path) -> Result<Layout> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Layout::parse_any(&text).map_err(|e| {
        CliError::Config(ConfigError {
            field: path.display().to_string(),
            msg: e.to_string(),
        })
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Write-then-rename so an interrupted run never leaves a torn checkpoint.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    write(&tmp, contents)?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    algorithm: Algorithm,
    seed: u64,
    config_sha256: String,
    evaluations: usize,
    iterations: usize,
    artifacts: BTreeMap<String, String>,
}

fn stats_csv(state: &SearchState) -> String {
    let mut out = String::from(
        "iteration,evaluations,failed_repairs,qd_score,coverage,num_elites,best_objective\n",
    );
    for s in &state.log {
        let best = s.best_objective.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.iteration,
            s.evaluations,
            s.failed_repairs,
            s.qd_score,
            s.coverage,
            s.num_elites,
            best
        );
    }
    out
}

pub fn optimize(
    args: &ConfigArgs,
    output: Option<PathBuf>,
    budget: Option<usize>,
    resume: bool,
    stop_after: Option<usize>,
) -> Result<()> {
    let mut cfg = load(args)?;
    if let Some(o) = output {
        cfg.output = o;
    }
    if let Some(b) = budget {
        cfg.eval_budget = b;
    }
    init_pool(cfg.threads);
    let out = cfg.output.clone();
    let config_text = cfg.to_toml();
    let checkpoint = out.join("checkpoint.json");
    let state = if resume {
        let saved = std::fs::read_to_string(out.join("config.toml"))
            .with_context(|| format!("no run to resume in {}", out.display()))?;
        if saved != config_text {
            return Err(ConfigError {
                field: "<config>".into(),
                msg: "differs from the checkpointed run".into(),
            }
            .into());
        }
        let text = std::fs::read_to_string(&checkpoint)
            .with_context(|| format!("reading {}", checkpoint.display()))?;
        serde_json::from_str(&text).context("parsing checkpoint")?
    } else {
        write(&out.join("config.toml"), &config_text)?;
        SearchState::new(&cfg.search()?)
    };
    let search = cfg.search()?;
    let solver = solver(args, Some(&cfg))?;

    let mut io_error = None;
    let on_iteration = |s: &SearchState| {
        let saved = serde_json::to_vec(s)
            .map_err(anyhow::Error::from)
            .map_err(CliError::from)
            .and_then(|bytes| write_atomic(&checkpoint, &bytes))
            .and_then(|()| write(&out.join("stats.csv"), stats_csv(s)));
        if let Err(e) = saved {
            io_error = Some(e);
            return ControlFlow::Break(());
        }
        match stop_after {
            Some(n) if s.iteration >= n => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    };
    let state = match cfg.algorithm {
        Algorithm::MapElites => resume_mapelites(&search, solver.as_ref(), state, on_iteration)?,
        Algorithm::Dsage => {
            let mut model = cfg.surrogate.as_ref().map(|c| CommandSurrogate {
                program: PathBuf::from(&c[0]),
                args: c[1..].to_vec(),
            });
            resume_dsage(
                &search,
                solver.as_ref(),
                model.as_mut().map(|m| m as &mut dyn Surrogate),
                state,
                on_iteration,
            )?
        }
    };
    if let Some(e) = io_error {
        return Err(e);
    }
    if !state.is_done(&search) {
        eprintln!(
            "stopped after iteration {} ({} of {} evaluations); rerun with --resume to continue",
            state.iteration, state.evaluations, search.eval_budget
        );
        return Ok(());
    }

    let archive_dir = out.join("archive");
    if archive_dir.exists() {
        std::fs::remove_dir_all(&archive_dir).context("clearing old archive")?;
    }
    save_archive(&state.archive, &archive_dir).context("writing archive")?;
    let mut dataset = String::new();
    for r in &state.dataset {
        dataset.push_str(&serde_json::to_string(r).context("serializing dataset")?);
        dataset.push('\n');
    }
    write(&out.join("dataset.jsonl"), dataset)?;
    if !state.losses.is_empty() {
        write(
            &out.join("losses.json"),
            serde_json::to_vec_pretty(&state.losses).context("losses")?,
        )?;
    }

    let mut artifacts = BTreeMap::new();
    for name in [
        "config.toml",
        "stats.csv",
        "dataset.jsonl",
        "archive/archive.json",
        "archive/archive.csv",
    ] {
        let bytes = std::fs::read(out.join(name)).with_context(|| format!("hashing {name}"))?;
        artifacts.insert(name.to_string(), sha256_hex(&bytes));
    }
    let manifest = Manifest {
        tool: "whlayout",
        version: env!("CARGO_PKG_VERSION"),
        algorithm: cfg.algorithm,
        seed: cfg.seed,
        config_sha256: sha256_hex(config_text.as_bytes()),
        evaluations: state.evaluations,
        iterations: state.iteration,
        artifacts,
    };
    write(
        &out.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest).context("manifest")?,
    )?;
    let s = state.archive.stats();
    println!(
        "evaluations {} elites {} qd_score {:.4} coverage {:.4} best {}",
        state.evaluations,
        s.num_elites,
        s.qd_score,
        s.coverage,
        s.best_objective
            .map(|b| format!("{b:.4}"))
            .unwrap_or_else(|| "-".into())
    );
    Ok(())
}

#[derive(Serialize)]
struct RunReport {
    seed: u64,
    throughput: f64,
    congested: bool,
    congestion_timestep: Option<u32>,
    tasks_finished: u64,
    solver_failures: u32,
}

#[derive(Serialize)]
struct EvalReport {
    layout: String,
    scenario: Scenario,
    n_agents: usize,
    horizon: u32,
    mean_throughput: f64,
    throughput_sd: f64,
    success_rate: f64,
    measures: MeasureVector,
    runs: Vec<RunReport>,
}

fn check_layout(layout: &Layout, cfg: &ExperimentConfig, n_agents: usize) -> Result<()> {
    let report = validate(layout, cfg.scenario, n_agents);
    if !report.meets(cfg.scenario) {
        return Err(CliError::Simulation(format!(
            "layout does not meet the {:?} requirements: {}",
            cfg.scenario,
            serde_json::to_string(&report).context("report")?
        )));
    }
    Ok(())
}

fn run_eval(
    layout: &Layout,
    cfg: &ExperimentConfig,
    n_agents: usize,
    horizon: u32,
    runs: usize,
) -> Result<EvalResult> {
    let mut sim = cfg.sim(horizon);
    sim.n_agents = n_agents;
    simulate(layout, &sim, runs).map_err(|e| CliError::Simulation(e.to_string()))
}

pub fn evaluate(
    path: &Path,
    args: &ConfigArgs,
    runs: Option<usize>,
    horizon: Option<u32>,
    agents: Option<usize>,
    sweep: &[usize],
    output: Option<PathBuf>,
) -> Result<()> {
    let cfg = load(args)?;
    init_pool(cfg.threads);
    let layout = read_layout(path)?;
    let n_agents = agents.unwrap_or(cfg.n_agents);
    let horizon = horizon.unwrap_or(cfg.eval_horizon);
    let runs = runs.unwrap_or(cfg.eval_runs);
    check_layout(&layout, &cfg, n_agents)?;
    let res = run_eval(&layout, &cfg, n_agents, horizon, runs)?;
    let report = EvalReport {
        layout: path.display().to_string(),
        scenario: cfg.scenario,
        n_agents,
        horizon,
        mean_throughput: res.mean_throughput,
        throughput_sd: res.throughput_sd(),
        success_rate: res.success_rate(),
        measures: res.measures,
        runs: res
            .runs
            .iter()
            .map(|r| RunReport {
                seed: r.seed,
                throughput: r.throughput,
                congested: r.congested,
                congestion_timestep: r.congestion_timestep,
                tasks_finished: r.total_finished(),
                solver_failures: r.solver_failures,
            })
            .collect(),
    };
    println!(
        "throughput {:.4} ± {:.4}, success rate {:.0}%",
        report.mean_throughput,
        report.throughput_sd,
        report.success_rate * 100.0
    );
    let Some(out) = output else {
        return Ok(());
    };
    write(
        &out.join("report.json"),
        serde_json::to_vec_pretty(&report).context("report")?,
    )?;

    let longest = res
        .runs
        .iter()
        .map(|r| r.finished_per_timestep.len())
        .max()
        .unwrap_or(0);
    let mut curves = String::from("timestep");
    for k in 0..res.runs.len() {
        let _ = write!(curves, ",run_{k}");
    }
    curves.push('\n');
    for t in 0..longest {
        let _ = write!(curves, "{}", t + 1);
        for r in &res.runs {
            match r.finished_per_timestep.get(t) {
                Some(v) => {
                    let _ = write!(curves, ",{v}");
                }
                None => curves.push(','),
            }
        }
        curves.push('\n');
    }
    write(&out.join("finished_per_timestep.csv"), curves)?;
    write(
        &out.join("tile_usage.csv"),
        usage_csv(layout.width(), &res.tile_usage_normalized),
    )?;
    let cells: Vec<Option<f64>> = (0..layout.len())
        .map(|v| {
            layout
                .tile(v)
                .is_traversable()
                .then(|| res.tile_usage_normalized[v])
        })
        .collect();
    write(
        &out.join("tile_usage.svg"),
        grid_svg(&cells, layout.width(), 20),
    )?;

    if !sweep.is_empty() {
        let mut csv = String::from("n_agents,mean_throughput,throughput_sd,success_rate\n");
        for &a in sweep {
            check_layout(&layout, &cfg, a)?;
            let r = run_eval(&layout, &cfg, a, horizon, runs)?;
            let _ = writeln!(
                csv,
                "{a},{},{},{}",
                r.mean_throughput,
                r.throughput_sd(),
                r.success_rate()
            );
        }
        write(&out.join("sweep.csv"), csv)?;
    }
    Ok(())
}

pub fn repair(
    path: &Path,
    args: &ConfigArgs,
    scenario: Option<Scenario>,
    shelves: Option<usize>,
    time_limit: Option<f64>,
    output: Option<PathBuf>,
    report: Option<PathBuf>,
) -> Result<()> {
    let cfg = if args.config.is_some() || args.setup.is_some() {
        Some(load(args)?)
    } else {
        None
    };
    let layout = read_layout(path)?;
    let scenario = scenario
        .or(cfg.as_ref().map(|c| c.scenario))
        .ok_or_else(|| ConfigError {
            field: "scenario".into(),
            msg: "pass --scenario or a config".into(),
        })?;
    let n_shelves = shelves
        .or(cfg.as_ref().map(|c| c.n_shelves))
        .unwrap_or_else(|| layout.count(TileType::Shelf));
    let limit = time_limit
        .or(cfg.as_ref().map(|c| c.repair_time_limit))
        .unwrap_or(repair::DEFAULT_TIME_LIMIT);
    let solver = solver(args, cfg.as_ref())?;
    let outcome: RepairOutcome =
        repair::repair(&layout, scenario, n_shelves, solver.as_ref(), limit).map_err(
            |e| match e {
                repair::RepairError::Model(m) => CliError::Config(ConfigError {
                    field: "layout".into(),
                    msg: m.to_string(),
                }),
                e => CliError::Solver(e.to_string()),
            },
        )?;
    if let Some(p) = report {
        write(&p, serde_json::to_vec_pretty(&outcome).context("outcome")?)?;
    }
    eprintln!(
        "status {:?}, hamming distance {}, {:.2}s",
        outcome.status, outcome.hamming_distance, outcome.solve_time
    );
    let Some(repaired) = outcome.repaired else {
        return Err(CliError::Solver(format!(
            "no repaired layout ({:?})",
            outcome.status
        )));
    };
    match output {
        Some(p) => write(&p, repaired.to_text())?,
        None => print!("{}", repaired.to_text()),
    }
    Ok(())
}

pub fn gen_human_layout(args: &ConfigArgs, output: Option<PathBuf>, json: bool) -> Result<()> {
    let cfg = load(args)?;
    let layout = cfg.human_layout()?;
    let text = if json {
        layout.to_json()
    } else {
        layout.to_text()
    };
    match output {
        Some(p) => write(&p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn find_archive(path: &Path) -> Result<Archive> {
    let file = if path.is_dir() {
        let direct = path.join("archive.json");
        if direct.exists() {
            direct
        } else {
            path.join("archive").join("archive.json")
        }
    } else {
        path.to_path_buf()
    };
    Ok(load_archive(&file).with_context(|| format!("loading {}", file.display()))?)
}

#[derive(Serialize)]
struct StatsReport {
    #[serde(flatten)]
    stats: ArchiveStats,
    dims: [usize; 2],
    num_cells: usize,
}

pub fn stats(path: &Path) -> Result<()> {
    let archive = find_archive(path)?;
    let report = StatsReport {
        stats: archive.stats(),
        dims: archive.config.dims,
        num_cells: archive.config.num_cells(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).context("stats")?
    );
    Ok(())
}

pub fn export_heatmap(path: &Path, output: Option<PathBuf>) -> Result<()> {
    let archive = find_archive(path)?;
    let out = output.unwrap_or_else(|| {
        if path.is_dir() {
            path.to_path_buf()
        } else {
            path.parent().map(Path::to_path_buf).unwrap_or_default()
        }
    });
    write(&out.join("heatmap.csv"), heatmap_csv(&archive))?;
    write(&out.join("heatmap.svg"), heatmap_svg(&archive))?;
    Ok(())
}

/// Exit code for adapter failures, outside the four status codes.
const SOLVE_LP_ERROR: u8 = 5;

pub fn solve_lp(path: &Path, time_limit: f64) -> ExitCode {
    match solve_lp_file(path, time_limit) {
        Ok((status, values)) => {
            print!("{}", format_assignment(&values));
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(SOLVE_LP_ERROR)
        }
    }
}
