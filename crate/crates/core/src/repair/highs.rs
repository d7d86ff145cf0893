use super::model::{LinearModel, Sense, VarKind};
use super::solver::{RepairStatus, Solution, SolverAdapter, SolverError};
use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem};
use std::ffi::{c_void, CStr, CString};
use std::num::NonZeroU32;
use std::path::Path;

/// In-process HiGHS backend, single-threaded per instance.
#[derive(Debug, Clone)]
pub struct HighsSolver {
    pub threads: u32,
}

impl Default for HighsSolver {
    fn default() -> Self {
        Self { threads: 1 }
    }
}

fn map_status(status: HighsModelStatus, has_primal: bool) -> Result<RepairStatus, SolverError> {
    use HighsModelStatus as M;
    Ok(match status {
        M::Optimal => RepairStatus::Optimal,
        M::Infeasible | M::UnboundedOrInfeasible => RepairStatus::Infeasible,
        M::ReachedTimeLimit
        | M::ReachedIterationLimit
        | M::ReachedSolutionLimit
        | M::ReachedInterrupt
        | M::ReachedMemoryLimit
        | M::Unknown => {
            if has_primal {
                RepairStatus::Feasible
            } else {
                RepairStatus::Timeout
            }
        }
        other => return Err(SolverError::Backend(format!("HiGHS status {other:?}"))),
    })
}

impl SolverAdapter for HighsSolver {
    fn solve(&self, model: &LinearModel, time_limit: f64) -> Result<Solution, SolverError> {
        let mut cost = vec![0.0; model.num_vars()];
        for &(i, c) in &model.objective {
            cost[i] += c;
        }
        let mut pb = RowProblem::default();
        let cols: Vec<_> = (0..model.num_vars())
            .map(|i| match model.kinds[i] {
                VarKind::Binary => pb.add_integer_column(cost[i], 0.0..=1.0),
                VarKind::Continuous => pb.add_column(cost[i], 0.0..),
            })
            .collect();
        for r in &model.rows {
            let terms: Vec<_> = r.terms.iter().map(|&(i, c)| (cols[i], c)).collect();
            match r.sense {
                Sense::Le => pb.add_row(..=r.rhs, &terms),
                Sense::Ge => pb.add_row(r.rhs.., &terms),
                Sense::Eq => pb.add_row(r.rhs..=r.rhs, &terms),
            }
        }
        let mut m = pb.optimise(highs::Sense::Minimise);
        m.make_quiet();
        m.set_threads(NonZeroU32::new(self.threads.max(1)).unwrap());
        m.set_option("time_limit", time_limit);
        m.set_option("mip_rel_gap", 0.0);
        let solved = m
            .try_solve()
            .map_err(|e| SolverError::Backend(format!("HiGHS run failed: {e:?}")))?;
        let has_primal = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let status = map_status(solved.status(), has_primal)?;
        let values = if status.has_solution() {
            solved.get_solution().columns().to_vec()
        } else {
            Vec::new()
        };
        Ok(Solution { status, values })
    }
}

struct Handle(*mut c_void);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { highs_sys::Highs_destroy(self.0) }
    }
}

/// Solves a model file with HiGHS, returning the status and named column
/// values (empty without a solution).
pub fn solve_lp_file(
    path: &Path,
    time_limit: f64,
) -> Result<(RepairStatus, Vec<(String, f64)>), SolverError> {
    use highs_sys::*;
    let cpath = CString::new(path.to_string_lossy().as_bytes())
        .map_err(|_| SolverError::Protocol("path contains NUL".into()))?;
    unsafe {
        let h = Handle(Highs_create());
        Highs_setBoolOptionValue(h.0, c"output_flag".as_ptr(), 0);
        Highs_setIntOptionValue(h.0, c"threads".as_ptr(), 1);
        Highs_setDoubleOptionValue(h.0, c"time_limit".as_ptr(), time_limit);
        Highs_setDoubleOptionValue(h.0, c"mip_rel_gap".as_ptr(), 0.0);
        if Highs_readModel(h.0, cpath.as_ptr()) == STATUS_ERROR {
            return Err(SolverError::Protocol(format!(
                "HiGHS could not read {}",
                path.display()
            )));
        }
        if Highs_run(h.0) == STATUS_ERROR {
            return Err(SolverError::Backend("HiGHS run failed".into()));
        }
        let raw = Highs_getModelStatus(h.0);
        let status = HighsModelStatus::try_from(raw)
            .map_err(|_| SolverError::Backend(format!("unknown HiGHS status {raw}")))?;
        let mut sol_status = 0;
        Highs_getIntInfoValue(h.0, c"primal_solution_status".as_ptr(), &mut sol_status);
        let status = map_status(status, sol_status == SOLUTION_STATUS_FEASIBLE)?;
        if !status.has_solution() {
            return Ok((status, Vec::new()));
        }
        let n = Highs_getNumCol(h.0) as usize;
        let m = Highs_getNumRow(h.0) as usize;
        let mut col = vec![0.0; n];
        let mut col_dual = vec![0.0; n];
        let mut row = vec![0.0; m];
        let mut row_dual = vec![0.0; m];
        Highs_getSolution(
            h.0,
            col.as_mut_ptr(),
            col_dual.as_mut_ptr(),
            row.as_mut_ptr(),
            row_dual.as_mut_ptr(),
        );
        let mut buf = vec![0 as std::ffi::c_char; kHighsMaximumStringLength as usize + 1];
        let mut out = Vec::with_capacity(n);
        for (i, &v) in col.iter().enumerate() {
            Highs_getColName(h.0, i as HighsInt, buf.as_mut_ptr());
            let name = CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned();
            out.push((name, v));
        }
        Ok((status, out))
    }
}
