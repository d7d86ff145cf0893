//! Windowed multi-agent planning: priority-based search and prioritized
//! planning over [`sipp`], conflict-free for the first `w` steps.

use super::grid::Env;
use super::reservation::{ReservationTable, INF};
use super::sipp::{sipp, SippQuery};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapfSolver {
    #[default]
    Pbs,
    PrioritizedPlanning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowAgent {
    pub start: usize,
    pub goals: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no conflict-free window plan found")]
pub struct SolverFailure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conflict {
    Vertex { a: usize, b: usize, t: u32 },
    Swap { a: usize, b: usize, t: u32 },
}

impl Conflict {
    fn agents(self) -> (usize, usize) {
        match self {
            Conflict::Vertex { a, b, .. } | Conflict::Swap { a, b, .. } => (a, b),
        }
    }
}

/// Paths of `w + 1` cells each (times 0..=w); a path that finished early
/// holds its last cell.
pub type WindowPaths = Vec<Vec<usize>>;

fn pad(mut path: Vec<usize>, w: u32) -> Vec<usize> {
    path.truncate(w as usize + 1);
    let last = *path.last().expect("non-empty path");
    path.resize(w as usize + 1, last);
    path
}

fn pair_conflict(pa: &[usize], pb: &[usize], a: usize, b: usize) -> Option<Conflict> {
    for t in 1..pa.len() {
        if pa[t] == pb[t] {
            return Some(Conflict::Vertex { a, b, t: t as u32 });
        }
        if pa[t] == pb[t - 1] && pa[t - 1] == pb[t] {
            return Some(Conflict::Swap { a, b, t: t as u32 });
        }
    }
    None
}

/// Earliest conflict (lowest time, then lowest agent pair) and the number of
/// conflicting agent pairs.
pub fn find_conflicts(paths: &[Vec<usize>]) -> (Option<Conflict>, usize) {
    let mut first: Option<(u32, Conflict)> = None;
    let mut count = 0;
    for a in 0..paths.len() {
        for b in a + 1..paths.len() {
            if let Some(c) = pair_conflict(&paths[a], &paths[b], a, b) {
                count += 1;
                let t = match c {
                    Conflict::Vertex { t, .. } | Conflict::Swap { t, .. } => t,
                };
                if first.map_or(true, |(ft, _)| t < ft) {
                    first = Some((t, c));
                }
            }
        }
    }
    (first.map(|(_, c)| c), count)
}

fn plan_one(
    env: &Env,
    rt: &mut ReservationTable,
    agent: &WindowAgent,
    others: impl Iterator<Item = usize>,
    paths: &[Vec<usize>],
    w: u32,
) -> Option<(Vec<usize>, u32)> {
    rt.clear();
    for o in others {
        rt.add_path(&paths[o], 0, INF);
    }
    let q = SippQuery {
        start: agent.start,
        depart: 0,
        goals: &agent.goals,
        horizon: Some(w),
        max_time: w + env.len() as u32 * 4 + 16,
    };
    let plan = sipp(env, rt, &q)?;
    Some((pad(plan.path, w), plan.cost))
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn union(&mut self, o: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a |= b;
        }
    }
    fn count(&self) -> u32 {
        self.0.iter().map(|x| x.count_ones()).sum()
    }
    fn iter(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..n).filter(move |&i| self.get(i))
    }
}

#[derive(Clone)]
struct PbsNode {
    /// higher[k]: agents with priority over k (transitively closed).
    higher: Vec<Bits>,
    paths: WindowPaths,
    costs: Vec<u32>,
    conflicts: usize,
    total: u64,
}

/// Plans all agents for a window of `w` steps.
pub fn plan_window<R: Rng>(
    env: &Env,
    agents: &[WindowAgent],
    solver: MapfSolver,
    w: u32,
    node_budget: usize,
    rng: &mut R,
) -> Result<WindowPaths, SolverFailure> {
    match solver {
        MapfSolver::PrioritizedPlanning => prioritized(env, agents, w, rng),
        MapfSolver::Pbs => pbs(env, agents, w, node_budget),
    }
}

fn prioritized<R: Rng>(
    env: &Env,
    agents: &[WindowAgent],
    w: u32,
    rng: &mut R,
) -> Result<WindowPaths, SolverFailure> {
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.shuffle(rng);
    let mut rt = ReservationTable::new(env.len());
    let mut paths: WindowPaths = vec![Vec::new(); agents.len()];
    for (k, &a) in order.iter().enumerate() {
        let (p, _) = plan_one(
            env,
            &mut rt,
            &agents[a],
            order[..k].iter().copied(),
            &paths,
            w,
        )
        .ok_or(SolverFailure)?;
        paths[a] = p;
    }
    Ok(paths)
}

fn pbs(
    env: &Env,
    agents: &[WindowAgent],
    w: u32,
    node_budget: usize,
) -> Result<WindowPaths, SolverFailure> {
    let n = agents.len();
    let mut rt = ReservationTable::new(env.len());
    let mut root = PbsNode {
        higher: vec![Bits::new(n); n],
        paths: vec![Vec::new(); n],
        costs: vec![0; n],
        conflicts: 0,
        total: 0,
    };
    for a in 0..n {
        let (p, c) = plan_one(env, &mut rt, &agents[a], std::iter::empty(), &root.paths, w)
            .ok_or(SolverFailure)?;
        root.paths[a] = p;
        root.costs[a] = c;
    }
    root.total = root.costs.iter().map(|&c| c as u64).sum();
    root.conflicts = find_conflicts(&root.paths).1;

    let mut stack = vec![root];
    let mut generated = 1usize;
    while let Some(node) = stack.pop() {
        let (conflict, _) = find_conflicts(&node.paths);
        let Some(conflict) = conflict else {
            return Ok(node.paths);
        };
        let (a, b) = conflict.agents();
        let mut children = Vec::with_capacity(2);
        for (hi, lo) in [(a, b), (b, a)] {
            if generated >= node_budget {
                return Err(SolverFailure);
            }
            generated += 1;
            if let Some(child) = branch(env, agents, &node, hi, lo, w, &mut rt) {
                children.push(child);
            }
        }
        // Worse child first so the better one is expanded next.
        children.sort_by_key(|c| std::cmp::Reverse((c.conflicts, c.total)));
        stack.extend(children);
    }
    Err(SolverFailure)
}

fn branch(
    env: &Env,
    agents: &[WindowAgent],
    parent: &PbsNode,
    hi: usize,
    lo: usize,
    w: u32,
    rt: &mut ReservationTable,
) -> Option<PbsNode> {
    let n = agents.len();
    if parent.higher[hi].get(lo) {
        return None;
    }
    let mut node = parent.clone();
    let mut add = node.higher[hi].clone();
    add.set(hi);
    let mut affected: Vec<usize> = (0..n)
        .filter(|&k| k == lo || node.higher[k].get(lo))
        .collect();
    for &k in &affected {
        node.higher[k].union(&add);
    }
    affected.sort_by_key(|&k| (node.higher[k].count(), k));
    for &k in &affected {
        let needs = k == lo
            || node.higher[k]
                .iter(n)
                .any(|o| pair_conflict(&node.paths[k], &node.paths[o], k, o).is_some());
        if !needs {
            continue;
        }
        let others: Vec<usize> = node.higher[k].iter(n).collect();
        let (p, c) = plan_one(env, rt, &agents[k], others.into_iter(), &node.paths, w)?;
        node.paths[k] = p;
        node.costs[k] = c;
    }
    node.total = node.costs.iter().map(|&c| c as u64).sum();
    node.conflicts = find_conflicts(&node.paths).1;
    Some(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{Layout, Pos, StorageArea, TileType};
    use rand::SeedableRng;
    use std::collections::{HashSet, VecDeque};

    fn open_grid(w: usize, h: usize) -> Layout {
        Layout::filled(w, h, StorageArea::default(), TileType::Empty).unwrap()
    }

    fn assert_conflict_free(paths: &[Vec<usize>]) {
        assert_eq!(find_conflicts(paths).1, 0);
    }

    /// Breadth-first search over joint states of two agents; returns the
    /// minimum makespan at which both sit on their goals, if any.
    fn joint_search(env: &Env, s: (usize, usize), g: (usize, usize), limit: u32) -> Option<u32> {
        let mut seen = HashSet::from([s]);
        let mut q = VecDeque::from([(s, 0u32)]);
        while let Some(((a, b), t)) = q.pop_front() {
            if (a, b) == g {
                return Some(t);
            }
            if t == limit {
                continue;
            }
            let moves = |v: usize| {
                let mut m = vec![v];
                m.extend(env.neighbors(v).iter().map(|&u| u as usize));
                m
            };
            for na in moves(a) {
                for nb in moves(b) {
                    if na == nb || (na == b && nb == a) {
                        continue;
                    }
                    if seen.insert((na, nb)) {
                        q.push_back(((na, nb), t + 1));
                    }
                }
            }
        }
        None
    }

    #[test]
    fn crossing_agents_on_open_grid() {
        let l = open_grid(4, 4);
        let env = Env::new(&l);
        let (a0, a1) = (l.index(Pos::new(0, 1)), l.index(Pos::new(3, 1)));
        let (b0, b1) = (l.index(Pos::new(1, 0)), l.index(Pos::new(1, 3)));
        assert!(joint_search(&env, (a0, b0), (a1, b1), 12).is_some());
        let agents = vec![
            WindowAgent {
                start: a0,
                goals: vec![a1],
            },
            WindowAgent {
                start: b0,
                goals: vec![b1],
            },
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for solver in [MapfSolver::Pbs, MapfSolver::PrioritizedPlanning] {
            let paths = plan_window(&env, &agents, solver, 10, 10_000, &mut rng).unwrap();
            assert_conflict_free(&paths);
            assert_eq!(paths[0][10], a1);
            assert_eq!(paths[1][10], b1);
        }
    }

    #[test]
    fn single_agent_matches_sipp() {
        let l = open_grid(6, 3);
        let env = Env::new(&l);
        let agents = vec![WindowAgent {
            start: 0,
            goals: vec![17],
        }];
        let rt = ReservationTable::new(l.len());
        let plan = sipp(
            &env,
            &rt,
            &SippQuery {
                start: 0,
                depart: 0,
                goals: &[17],
                horizon: Some(10),
                max_time: 100,
            },
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let paths = plan_window(&env, &agents, MapfSolver::Pbs, 10, 100, &mut rng).unwrap();
        assert_eq!(paths[0], pad(plan.path, 10));
    }

    #[test]
    fn head_on_in_dead_end_never_swaps() {
        // Corridor 0..4 closed at both ends; agents must exchange ends.
        let l = open_grid(5, 1);
        let env = Env::new(&l);
        assert_eq!(joint_search(&env, (0, 4), (4, 0), 40), None);
        let agents = vec![
            WindowAgent {
                start: 0,
                goals: vec![4],
            },
            WindowAgent {
                start: 4,
                goals: vec![0],
            },
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for solver in [MapfSolver::Pbs, MapfSolver::PrioritizedPlanning] {
            match plan_window(&env, &agents, solver, 10, 1000, &mut rng) {
                Err(SolverFailure) => {}
                Ok(paths) => {
                    assert_conflict_free(&paths);
                    assert!(paths[0][10] != 4 || paths[1][10] != 0);
                }
            }
        }
    }

    #[test]
    fn many_agents_random_open_grid_conflict_free() {
        let l = open_grid(8, 8);
        let env = Env::new(&l);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let cells = rand::seq::index::sample(&mut rng, 64, 24).into_vec();
            let agents: Vec<WindowAgent> = (0..12)
                .map(|k| WindowAgent {
                    start: cells[k],
                    goals: vec![cells[12 + k]],
                })
                .collect();
            for solver in [MapfSolver::Pbs, MapfSolver::PrioritizedPlanning] {
                if let Ok(paths) = plan_window(&env, &agents, solver, 10, 10_000, &mut rng) {
                    assert_conflict_free(&paths);
                    for (p, a) in paths.iter().zip(&agents) {
                        assert_eq!(p[0], a.start);
                        for t in 1..p.len() {
                            assert!(p[t] == p[t - 1] || env.adjacent(p[t], p[t - 1]));
                        }
                    }
                }
            }
        }
    }
}
