use super::grid::{Env, UNREACHABLE};
use super::reservation::{ReservationTable, INF};
use super::sipp::{sipp, SippQuery};
use super::{shuffled, Action, Recorder, SimConfig, Tasks};
use rand_chacha::ChaCha8Rng;

struct Committed {
    start: u32,
    path: Vec<usize>,
}

impl Committed {
    fn at(&self, t: u32) -> usize {
        let k = t.saturating_sub(self.start) as usize;
        self.path[k.min(self.path.len() - 1)]
    }

    fn end(&self) -> usize {
        *self.path.last().unwrap()
    }
}

/// Idle-agent planning loop: every idle agent gets a new goal and a path
/// through it to a free home location, avoiding all committed paths.
/// Returns the number of planning failures.
pub(super) fn run(
    env: &Env,
    tasks: &Tasks,
    config: &SimConfig,
    starts: Vec<usize>,
    rng: &mut ChaCha8Rng,
    rec: &mut Recorder,
) -> u32 {
    let n = starts.len();
    let mut locs = starts;
    let mut committed: Vec<Committed> = locs
        .iter()
        .map(|&l| Committed {
            start: 0,
            path: vec![l],
        })
        .collect();
    // Current goal and the time it is reached, for agents with a task.
    let mut goal: Vec<Option<(usize, u32)>> = vec![None; n];
    let mut given = vec![0u64; n];
    let mut failures = 0;
    let mut rt = ReservationTable::new(env.len());
    let active = tasks.has_tasks();

    for t in 0..config.horizon {
        if active {
            for a in shuffled(n, rng) {
                if goal[a].is_some() {
                    continue;
                }
                let Some(g) = tasks.next(locs[a], given[a], rng) else {
                    continue;
                };
                rt.clear();
                for (o, c) in committed.iter().enumerate() {
                    if o != a {
                        rt.add_path(
                            &c.path[(t.saturating_sub(c.start) as usize).min(c.path.len() - 1)..],
                            t.max(c.start),
                            INF,
                        );
                    }
                }
                let dg = env.dist(g);
                let home = tasks
                    .homes
                    .iter()
                    .copied()
                    .filter(|&hm| {
                        committed
                            .iter()
                            .enumerate()
                            .all(|(o, c)| o == a || c.end() != hm)
                    })
                    .filter(|&hm| dg[hm] != UNREACHABLE)
                    .min_by_key(|&hm| (dg[hm], hm));
                let Some(home) = home else {
                    failures += 1;
                    continue;
                };
                let goals = [g, home];
                let q = SippQuery {
                    start: locs[a],
                    depart: t,
                    goals: &goals,
                    horizon: None,
                    max_time: rt.latest_reserved().max(t) + 2 * env.len() as u32 + 16,
                };
                match sipp(env, &rt, &q) {
                    Some(plan) => {
                        given[a] += 1;
                        goal[a] = Some((g, plan.goal_times[0]));
                        committed[a] = Committed {
                            start: t,
                            path: plan.path,
                        };
                    }
                    None => failures += 1,
                }
            }
        }

        let mut finished = vec![0u32; n];
        let mut actions = Vec::with_capacity(n);
        for a in 0..n {
            let next = committed[a].at(t + 1);
            if active {
                actions.push(if next == locs[a] {
                    Action::Wait
                } else {
                    Action::Move
                });
            }
            locs[a] = next;
            if let Some((_, arrive)) = goal[a] {
                if arrive <= t + 1 {
                    finished[a] += 1;
                    goal[a] = None;
                }
            }
        }
        rec.step(&locs, &finished, &actions);
        if config.early_stop_on_congestion && rec.congested_at.is_some() {
            break;
        }
    }
    failures
}
