use crate::layout::Layout;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("agents {a} and {b} both at cell {cell} at time {t}")]
    Vertex {
        t: usize,
        a: usize,
        b: usize,
        cell: usize,
    },
    #[error("agents {a} and {b} swap cells between times {} and {t}", t - 1)]
    Swap { t: usize, a: usize, b: usize },
    #[error("agent {agent} jumps from {from} to {to} at time {t}")]
    IllegalMove {
        t: usize,
        agent: usize,
        from: usize,
        to: usize,
    },
    #[error("agent {agent} on non-traversable cell {cell} at time {t}")]
    Blocked { t: usize, agent: usize, cell: usize },
    #[error("time {t} has {got} agents, expected {expected}")]
    AgentCount {
        t: usize,
        got: usize,
        expected: usize,
    },
}

/// Checks a joint trajectory (agent cells per time step) for vertex and
/// swap conflicts and for illegal moves.
pub fn check_trajectory(layout: &Layout, traj: &[Vec<usize>]) -> Result<(), TrajectoryError> {
    let Some(first) = traj.first() else {
        return Ok(());
    };
    let n = first.len();
    let mut owner = vec![usize::MAX; layout.len()];
    for (t, locs) in traj.iter().enumerate() {
        if locs.len() != n {
            return Err(TrajectoryError::AgentCount {
                t,
                got: locs.len(),
                expected: n,
            });
        }
        for (a, &c) in locs.iter().enumerate() {
            if !layout.tile(c).is_traversable() {
                return Err(TrajectoryError::Blocked {
                    t,
                    agent: a,
                    cell: c,
                });
            }
            if owner[c] != usize::MAX {
                return Err(TrajectoryError::Vertex {
                    t,
                    a: owner[c],
                    b: a,
                    cell: c,
                });
            }
            owner[c] = a;
        }
        if t > 0 {
            let prev = &traj[t - 1];
            for a in 0..n {
                let (from, to) = (prev[a], locs[a]);
                if from != to && !layout.neighbors(from).any(|u| u == to) {
                    return Err(TrajectoryError::IllegalMove {
                        t,
                        agent: a,
                        from,
                        to,
                    });
                }
                // Whoever is now at `from` must not have come from `to`.
                let b = owner[from];
                if from != to && b != usize::MAX && prev[b] == to {
                    return Err(TrajectoryError::Swap {
                        t,
                        a: a.min(b),
                        b: a.max(b),
                    });
                }
            }
        }
        for &c in locs {
            owner[c] = usize::MAX;
        }
    }
    Ok(())
}
