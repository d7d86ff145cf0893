//! MILP layout repair: the smallest Hamming-distance edit of a layout that
//! makes it valid (workstation scenario) or well-formed (home locations),
//! with a fixed shelf count.

#[cfg(feature = "highs")]
mod highs;
mod lp;
mod model;
mod solver;

#[cfg(feature = "highs")]
pub use highs::{solve_lp_file, HighsSolver};
pub use lp::export_lp;
pub use model::{build_model, LinearModel, ModelError, RepairModel, Row, Sense, Sym, VarKind};
pub use solver::{
    assignment_to_values, format_assignment, parse_assignment, CommandSolver, RepairStatus,
    Solution, SolverAdapter, SolverError, SOLVER_ENV,
};

use crate::layout::{validate, Layout, Scenario, TileType};
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub const DEFAULT_TIME_LIMIT: f64 = 120.0;
const INT_TOL: f64 = 1e-6;
const FLOW_TOL: f64 = 1e-6;
/// Held back from the solver's limit so its overshoot and decoding still
/// fit in the caller's budget.
const LIMIT_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub status: RepairStatus,
    pub repaired: Option<Layout>,
    pub hamming_distance: usize,
    pub solve_time: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RepairError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solver returned an unusable assignment: {0}")]
    Decode(String),
}

/// The external command from the environment if set, otherwise HiGHS.
pub fn default_solver() -> Result<Box<dyn SolverAdapter>, SolverError> {
    if let Some(c) = CommandSolver::from_env() {
        return Ok(Box::new(c));
    }
    #[cfg(feature = "highs")]
    {
        Ok(Box::new(HighsSolver::default()))
    }
    #[cfg(not(feature = "highs"))]
    {
        Err(SolverError::Unavailable(format!(
            "built without HiGHS and {SOLVER_ENV} is unset"
        )))
    }
}

/// Reads the tile assignment out of a solution.
pub fn decode(model: &RepairModel, values: &[f64]) -> Result<Layout, RepairError> {
    let layout = &model.unrepaired;
    if values.len() != model.lp.num_vars() {
        return Err(RepairError::Decode(format!(
            "{} values for {} variables",
            values.len(),
            model.lp.num_vars()
        )));
    }
    let mut tiles = Vec::with_capacity(layout.len());
    for v in 0..layout.len() {
        let mut chosen = None;
        for s in Sym::used(model.scenario) {
            let x = values[model.x(v, s).unwrap()];
            if (x - x.round()).abs() > INT_TOL {
                return Err(RepairError::Decode(format!(
                    "fractional value {x} at {}",
                    layout.pos(v)
                )));
            }
            if x.round() == 1.0 {
                if chosen.is_some() {
                    return Err(RepairError::Decode(format!(
                        "two types at {}",
                        layout.pos(v)
                    )));
                }
                chosen = Some(s);
            }
        }
        let tile = match chosen {
            Some(Sym::H) => TileType::HomeLocation,
            Some(Sym::W) => TileType::Workstation,
            Some(Sym::E) => TileType::Endpoint,
            Some(Sym::S) => TileType::Shelf,
            Some(Sym::P) => TileType::Empty,
            Some(Sym::D) => layout.tile(model.source),
            None => return Err(RepairError::Decode(format!("no type at {}", layout.pos(v)))),
        };
        tiles.push(tile);
    }
    Layout::new(layout.width(), layout.height(), tiles, layout.storage())
        .map_err(|e| RepairError::Decode(e.to_string()))
}

/// Checks that each sink-type vertex absorbs one unit of flow, no flow
/// leaves a blocking vertex, and flow is conserved.
pub fn check_flow(model: &RepairModel, values: &[f64]) -> Result<(), String> {
    let layout = &model.unrepaired;
    let n = layout.len();
    let mut net = vec![0.0; n];
    for (e, &(a, b)) in model.edges.iter().enumerate() {
        let f = values[model.flow(e)];
        if f < -FLOW_TOL {
            return Err(format!("negative flow on edge {e}"));
        }
        net[a] -= f;
        net[b] += f;
        let blocked: f64 = Sym::blocking(model.scenario)
            .iter()
            .map(|&s| values[model.x(a, s).unwrap()])
            .sum();
        if blocked > 0.5 && f > FLOW_TOL {
            return Err(format!("flow {f} leaves blocked vertex {}", layout.pos(a)));
        }
    }
    for v in 0..n {
        let sink: f64 = Sym::used(model.scenario)
            .iter()
            .filter(|s| s.is_sink())
            .map(|&s| values[model.x(v, s).unwrap()])
            .sum();
        let demand = values[model.demand(v)];
        if (demand - sink).abs() > FLOW_TOL {
            return Err(format!(
                "demand {demand} at {} but sink indicator {sink}",
                layout.pos(v)
            ));
        }
        let supply = values[model.supply(v)];
        if v != model.source && supply > FLOW_TOL {
            return Err(format!("supply at non-source {}", layout.pos(v)));
        }
        if (supply + net[v] - demand).abs() > FLOW_TOL * n as f64 {
            return Err(format!("flow not conserved at {}", layout.pos(v)));
        }
    }
    Ok(())
}

/// Checks the outcome invariant: scenario validity, counts, and an
/// untouched non-storage area.
pub fn check_repaired(model: &RepairModel, repaired: &Layout) -> Result<(), String> {
    let input = &model.unrepaired;
    let report = validate(repaired, model.scenario, 0);
    if !report.meets(model.scenario) || !report.is_reachable {
        return Err(format!(
            "repaired layout fails validation: {:?}",
            report.violations
        ));
    }
    if repaired.count(TileType::Shelf) != model.n_shelves {
        return Err(format!(
            "{} shelves, expected {}",
            repaired.count(TileType::Shelf),
            model.n_shelves
        ));
    }
    let (tile, want) = match model.scenario {
        Scenario::Workstation => (TileType::Workstation, model.n_workstations),
        Scenario::HomeLocation => (TileType::HomeLocation, model.n_homes),
    };
    if repaired.count(tile) != want {
        return Err(format!(
            "{} {tile:?} tiles, expected {want}",
            repaired.count(tile)
        ));
    }
    if let Some(v) =
        (0..input.len()).find(|&v| !input.in_storage(v) && input.tile(v) != repaired.tile(v))
    {
        return Err(format!("non-storage tile changed at {}", input.pos(v)));
    }
    Ok(())
}

/// Solves a built model and decodes and checks the result.
pub fn solve_model(
    model: &RepairModel,
    solver: &dyn SolverAdapter,
    time_limit: f64,
) -> Result<RepairOutcome, RepairError> {
    let start = Instant::now();
    let budget = (time_limit - LIMIT_MARGIN.min(0.05 * time_limit)).max(0.0);
    let sol = solver.solve(&model.lp, budget)?;
    let solve_time = start.elapsed().as_secs_f64();
    if !sol.status.has_solution() {
        return Ok(RepairOutcome {
            status: sol.status,
            repaired: None,
            hamming_distance: 0,
            solve_time,
        });
    }
    let repaired = decode(model, &sol.values)?;
    check_flow(model, &sol.values).map_err(RepairError::Decode)?;
    check_repaired(model, &repaired).map_err(RepairError::Decode)?;
    Ok(RepairOutcome {
        status: sol.status,
        hamming_distance: repaired.hamming(&model.unrepaired),
        repaired: Some(repaired),
        solve_time,
    })
}

/// Repairs `unrepaired` to hold exactly `n_shelves` shelves. Workstation and
/// home-location counts are taken from the fixed non-storage area.
/// `time_limit` covers the whole call and `solve_time` reports its wall time.
pub fn repair(
    unrepaired: &Layout,
    scenario: Scenario,
    n_shelves: usize,
    solver: &dyn SolverAdapter,
    time_limit: f64,
) -> Result<RepairOutcome, RepairError> {
    let n_w = unrepaired.count(TileType::Workstation);
    let n_h = unrepaired.count(TileType::HomeLocation);
    let start = Instant::now();
    let model = build_model(unrepaired, scenario, n_shelves, n_w, n_h)?;
    let built = start.elapsed().as_secs_f64();
    let mut out = solve_model(&model, solver, time_limit - built)?;
    out.solve_time = start.elapsed().as_secs_f64();
    Ok(out)
}
