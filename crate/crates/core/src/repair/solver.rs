use super::lp::export_lp;
use super::model::LinearModel;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

/// Environment variable naming an external solver command.
pub const SOLVER_ENV: &str = "WAREHOUSE_SOLVER";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairStatus {
    Optimal,
    Feasible,
    Infeasible,
    Timeout,
}

impl RepairStatus {
    /// Exit code of the external solver contract.
    pub fn exit_code(self) -> i32 {
        match self {
            RepairStatus::Optimal => 0,
            RepairStatus::Feasible => 1,
            RepairStatus::Infeasible => 2,
            RepairStatus::Timeout => 3,
        }
    }

    pub fn from_exit_code(code: i32) -> Option<Self> {
        Some(match code {
            0 => RepairStatus::Optimal,
            1 => RepairStatus::Feasible,
            2 => RepairStatus::Infeasible,
            3 => RepairStatus::Timeout,
            _ => return None,
        })
    }

    pub fn has_solution(self) -> bool {
        matches!(self, RepairStatus::Optimal | RepairStatus::Feasible)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: RepairStatus,
    /// One value per model variable; empty without a solution.
    pub values: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver protocol: {0}")]
    Protocol(String),
    #[error("solver backend: {0}")]
    Backend(String),
    #[error("no solver available: {0}")]
    Unavailable(String),
}

/// A MILP backend. Implementations must be usable from several threads at
/// once, each call owning its own solver instance.
pub trait SolverAdapter: Send + Sync {
    fn solve(&self, model: &LinearModel, time_limit: f64) -> Result<Solution, SolverError>;
}

/// Runs an external program as `<program> <args..> <lp-file> <time-limit>`.
///
/// The program prints one `name value` line per variable (missing
/// variables read as 0) and reports the status through its exit code:
/// 0 optimal, 1 feasible, 2 infeasible, 3 time limit without a solution.
#[derive(Debug, Clone)]
pub struct CommandSolver {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl CommandSolver {
    /// Splits a command line on whitespace.
    pub fn parse(cmd: &str) -> Option<Self> {
        let mut parts = cmd.split_whitespace();
        let program = PathBuf::from(parts.next()?);
        Some(Self {
            program,
            args: parts.map(String::from).collect(),
        })
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(SOLVER_ENV).ok().and_then(|c| Self::parse(&c))
    }
}

/// Parses `name value` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_assignment(text: &str) -> Result<Vec<(String, f64)>, SolverError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(val), None) = (it.next(), it.next(), it.next()) else {
            return Err(SolverError::Protocol(format!(
                "bad assignment line {line:?}"
            )));
        };
        let v: f64 = val
            .parse()
            .map_err(|_| SolverError::Protocol(format!("bad value in {line:?}")))?;
        out.push((name.to_string(), v));
    }
    Ok(out)
}

pub fn format_assignment(pairs: &[(String, f64)]) -> String {
    let mut s = String::new();
    for (n, v) in pairs {
        s.push_str(&format!("{n} {v}\n"));
    }
    s
}

/// Maps named values onto the model's variable order.
pub fn assignment_to_values(
    model: &LinearModel,
    pairs: &[(String, f64)],
) -> Result<Vec<f64>, SolverError> {
    let index = model.name_index();
    let mut values = vec![0.0; model.num_vars()];
    for (n, v) in pairs {
        let &i = index
            .get(n.as_str())
            .ok_or_else(|| SolverError::Protocol(format!("unknown variable {n}")))?;
        values[i] = *v;
    }
    Ok(values)
}

impl SolverAdapter for CommandSolver {
    fn solve(&self, model: &LinearModel, time_limit: f64) -> Result<Solution, SolverError> {
        let mut file = tempfile::Builder::new().suffix(".lp").tempfile()?;
        file.write_all(export_lp(model).as_bytes())?;
        file.flush()?;
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(file.path())
            .arg(time_limit.to_string())
            .output()?;
        let code = out
            .status
            .code()
            .ok_or_else(|| SolverError::Backend("solver killed by signal".into()))?;
        let status = RepairStatus::from_exit_code(code).ok_or_else(|| {
            SolverError::Backend(format!(
                "exit code {code}: {}",
                String::from_utf8_lossy(&out.stderr).trim()
            ))
        })?;
        let values = if status.has_solution() {
            let text =
                String::from_utf8(out.stdout).map_err(|e| SolverError::Protocol(e.to_string()))?;
            assignment_to_values(model, &parse_assignment(&text)?)?
        } else {
            Vec::new()
        };
        Ok(Solution { status, values })
    }
}
