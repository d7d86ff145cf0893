//! Safe-interval path planning with an ordered goal sequence.

use super::grid::{Env, UNREACHABLE};
use super::reservation::{ReservationTable, INF};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

#[derive(Debug, Clone)]
pub struct SippQuery<'a> {
    pub start: usize,
    pub depart: u32,
    /// Visited in order. The agent must be able to stay at the last one
    /// forever, unless the horizon is reached first.
    pub goals: &'a [usize],
    /// Absolute time at which search stops; any state at or past it ends the
    /// path, scored by its remaining heuristic.
    pub horizon: Option<u32>,
    /// No state later than this is generated.
    pub max_time: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    /// Cell at each time step from `depart` on.
    pub path: Vec<usize>,
    /// Arrival time at each goal reached.
    pub goal_times: Vec<u32>,
    /// Arrival time plus remaining heuristic at the terminal state.
    pub cost: u32,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    cell: u32,
    t: u32,
    label: u32,
    waits: u32,
    parent: u32,
    terminal: bool,
}

const NONE: u32 = u32::MAX;

pub fn sipp(env: &Env, rt: &ReservationTable, q: &SippQuery) -> Option<Plan> {
    let goals = q.goals;
    if !env.passable(q.start) || goals.iter().any(|&g| !env.passable(g)) {
        return None;
    }
    // tail[k]: distance from goals[k] through the rest of the sequence.
    let mut tail = vec![0u32; goals.len() + 1];
    for k in (0..goals.len().saturating_sub(1)).rev() {
        let d = env.dist(goals[k + 1])[goals[k]];
        if d == UNREACHABLE {
            return None;
        }
        tail[k] = tail[k + 1] + d;
    }
    let h = |cell: usize, label: usize| -> u32 {
        if label >= goals.len() {
            0
        } else {
            let d = env.dist(goals[label])[cell];
            if d == UNREACHABLE {
                UNREACHABLE
            } else {
                d + tail[label]
            }
        }
    };

    let mut intervals = Vec::new();
    let mut buf = Vec::new();
    let mut interval_cache: HashMap<u32, Vec<(u32, u32)>> = HashMap::new();
    let mut get_intervals = |cell: usize, out: &mut Vec<(u32, u32)>| {
        let iv = interval_cache.entry(cell as u32).or_insert_with(|| {
            let mut v = Vec::new();
            rt.safe_intervals(cell, &mut v);
            v
        });
        out.clear();
        out.extend_from_slice(iv);
    };

    get_intervals(q.start, &mut intervals);
    let Some(start_iv) = intervals
        .iter()
        .position(|&(a, b)| a <= q.depart && q.depart <= b)
    else {
        return None;
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut best: HashMap<(u32, u32, u32), u32> = HashMap::new();
    let mut open: BinaryHeap<Reverse<(u32, u32, u32, u32)>> = BinaryHeap::new();

    // Advances the goal label on arrival and decides whether the state ends
    // the search.
    let settle = |cell: usize, t: u32, mut label: usize, iv_end: u32| -> (usize, bool) {
        while label < goals.len() && goals[label] == cell {
            if label + 1 == goals.len() && iv_end != INF {
                break;
            }
            label += 1;
        }
        let done = label == goals.len() && iv_end == INF;
        let past = q.horizon.is_some_and(|hz| t >= hz);
        (label, done || past)
    };

    let push = |nodes: &mut Vec<Node>,
                open: &mut BinaryHeap<Reverse<(u32, u32, u32, u32)>>,
                best: &mut HashMap<(u32, u32, u32), u32>,
                node: Node,
                iv: usize| {
        let hv = h(node.cell as usize, node.label as usize);
        if hv == UNREACHABLE {
            return;
        }
        let key = (node.cell, iv as u32, node.label);
        if let Some(&g) = best.get(&key) {
            if g <= node.t {
                return;
            }
        }
        best.insert(key, node.t);
        let f = node.t.saturating_add(hv);
        let id = nodes.len() as u32;
        nodes.push(node);
        open.push(Reverse((f, node.waits, node.cell, id)));
    };

    let (label0, term0) = settle(q.start, q.depart, 0, intervals[start_iv].1);
    push(
        &mut nodes,
        &mut open,
        &mut best,
        Node {
            cell: q.start as u32,
            t: q.depart,
            label: label0 as u32,
            waits: 0,
            parent: NONE,
            terminal: term0,
        },
        start_iv,
    );

    while let Some(Reverse((f, _, _, id))) = open.pop() {
        let node = nodes[id as usize];
        if node.terminal {
            return Some(reconstruct(&nodes, id, q, f));
        }
        let v = node.cell as usize;
        get_intervals(v, &mut intervals);
        let Some(&(_, end_i)) = intervals.iter().find(|&&(a, b)| a <= node.t && node.t <= b) else {
            continue;
        };
        let iv_here = intervals
            .iter()
            .position(|&(a, b)| a <= node.t && node.t <= b)
            .unwrap();
        if best.get(&(node.cell, iv_here as u32, node.label)) != Some(&node.t) {
            continue;
        }
        for &u in env.neighbors(v) {
            let u = u as usize;
            get_intervals(u, &mut buf);
            for (j, &(s, e)) in buf.iter().enumerate() {
                if end_i != INF && s > end_i + 1 {
                    break;
                }
                if e != INF && e < node.t + 1 {
                    continue;
                }
                let mut arr = s.max(node.t + 1);
                while arr <= e
                    && (end_i == INF || arr - 1 <= end_i)
                    && rt.edge_reserved(u, v, arr - 1)
                {
                    arr += 1;
                }
                if arr > e || (end_i != INF && arr - 1 > end_i) || arr > q.max_time {
                    continue;
                }
                let (label, terminal) = settle(u, arr, node.label as usize, e);
                push(
                    &mut nodes,
                    &mut open,
                    &mut best,
                    Node {
                        cell: u as u32,
                        t: arr,
                        label: label as u32,
                        waits: node.waits + (arr - node.t - 1),
                        parent: id,
                        terminal,
                    },
                    j,
                );
            }
        }
    }
    None
}

fn reconstruct(nodes: &[Node], id: u32, q: &SippQuery, cost: u32) -> Plan {
    let mut chain = Vec::new();
    let mut cur = id;
    while cur != NONE {
        chain.push(nodes[cur as usize]);
        cur = nodes[cur as usize].parent;
    }
    chain.reverse();
    let mut path = vec![chain[0].cell as usize];
    let mut goal_times = vec![q.depart; chain[0].label as usize];
    for pair in chain.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for _ in a.t + 1..b.t {
            path.push(a.cell as usize);
        }
        path.push(b.cell as usize);
        for _ in a.label..b.label {
            goal_times.push(b.t);
        }
    }
    Plan {
        path,
        goal_times,
        cost,
    }
}
