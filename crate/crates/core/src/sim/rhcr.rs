use super::grid::{Env, UNREACHABLE};
use super::window::{plan_window, WindowAgent};
use super::{Action, Recorder, SimConfig, Tasks};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Extends the goal queue until the heuristic length of the whole sequence
/// covers the planning window.
fn extend(
    env: &Env,
    tasks: &Tasks,
    queue: &mut VecDeque<usize>,
    loc: usize,
    given: &mut u64,
    w: u32,
    rng: &mut ChaCha8Rng,
) {
    let mut len = 0u32;
    let mut prev = loc;
    for &g in queue.iter() {
        let d = env.dist(g)[prev];
        len = if d == UNREACHABLE {
            UNREACHABLE
        } else {
            len.saturating_add(d)
        };
        prev = g;
    }
    while queue.is_empty() || len < w {
        let Some(g) = tasks.next(prev, *given, rng) else {
            return;
        };
        *given += 1;
        let d = env.dist(g)[prev];
        len = if d == UNREACHABLE {
            UNREACHABLE
        } else {
            len.saturating_add(d)
        };
        queue.push_back(g);
        prev = g;
    }
}

/// Windowed replanning loop. Returns the number of failed replans.
pub(super) fn run(
    env: &Env,
    tasks: &Tasks,
    config: &SimConfig,
    starts: Vec<usize>,
    rng: &mut ChaCha8Rng,
    rec: &mut Recorder,
) -> u32 {
    let n = starts.len();
    let (w, h) = (config.rhcr_window, config.rhcr_period);
    let mut locs = starts;
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); n];
    let mut given = vec![0u64; n];
    let mut pending = vec![0u32; n];
    let mut paths: Vec<Vec<usize>> = locs.iter().map(|&l| vec![l]).collect();
    let mut plan_t = 0u32;
    let mut failures = 0;
    let active = tasks.has_tasks();

    for t in 0..config.horizon {
        if t % h == 0 {
            for a in 0..n {
                extend(env, tasks, &mut queues[a], locs[a], &mut given[a], w, rng);
                // A goal on the current tile finishes with the next step.
                if queues[a].front() == Some(&locs[a]) {
                    queues[a].pop_front();
                    pending[a] += 1;
                    extend(env, tasks, &mut queues[a], locs[a], &mut given[a], w, rng);
                }
            }
            let agents: Vec<WindowAgent> = (0..n)
                .map(|a| WindowAgent {
                    start: locs[a],
                    goals: queues[a].iter().copied().collect(),
                })
                .collect();
            paths = match plan_window(
                env,
                &agents,
                config.mapf_solver,
                w,
                config.pbs_node_budget,
                rng,
            ) {
                Ok(p) => p,
                Err(_) => {
                    failures += 1;
                    locs.iter().map(|&l| vec![l]).collect()
                }
            };
            plan_t = t;
        }

        let k = (t + 1 - plan_t) as usize;
        let mut finished = std::mem::take(&mut pending);
        pending = vec![0; n];
        let mut actions = Vec::with_capacity(n);
        for a in 0..n {
            let p = &paths[a];
            let next = p[k.min(p.len() - 1)];
            if active {
                actions.push(if next == locs[a] {
                    Action::Wait
                } else {
                    Action::Move
                });
            }
            locs[a] = next;
            if queues[a].front() == Some(&next) {
                queues[a].pop_front();
                finished[a] += 1;
            }
        }
        rec.step(&locs, &finished, &actions);
        if config.early_stop_on_congestion && rec.congested_at.is_some() {
            break;
        }
    }
    failures
}
