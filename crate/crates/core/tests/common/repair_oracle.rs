//! Brute-force reference for the repair MILP on tiny grids.

use std::collections::VecDeque;
use warehouse_layout::{Layout, Scenario, TileType};

/// Whether `l` is a feasible point of the repair model: shelf count,
/// shelf/endpoint adjacency, and every non-shelf demand tile reachable from
/// `source` through tiles that pass flow on.
pub fn feasible(l: &Layout, scenario: Scenario, n_shelves: usize, source: usize) -> bool {
    if l.count(TileType::Shelf) != n_shelves {
        return false;
    }
    for v in 0..l.len() {
        match l.tile(v) {
            TileType::Endpoint => {
                if !l.neighbors(v).any(|u| l.tile(u) == TileType::Shelf) {
                    return false;
                }
            }
            TileType::Shelf => {
                if l.neighbors(v)
                    .filter(|&u| l.tile(u) == TileType::Endpoint)
                    .count()
                    < 2
                {
                    return false;
                }
            }
            _ => {}
        }
    }
    let passes = |t: TileType| match scenario {
        Scenario::Workstation => t != TileType::Shelf,
        Scenario::HomeLocation => matches!(t, TileType::Empty | TileType::Workstation),
    };
    let mut seen = vec![false; l.len()];
    seen[source] = true;
    let mut q = VecDeque::from([source]);
    while let Some(v) = q.pop_front() {
        if v != source && !passes(l.tile(v)) {
            continue;
        }
        for u in l.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                q.push_back(u);
            }
        }
    }
    (0..l.len()).all(|v| l.tile(v) == TileType::Shelf || seen[v])
}

/// Smallest number of storage tiles to retype so `input` becomes feasible,
/// searching up to `max_edits`.
pub fn min_edits(
    input: &Layout,
    scenario: Scenario,
    n_shelves: usize,
    source: usize,
    max_edits: usize,
) -> Option<usize> {
    let cells = input.storage_indices();
    let mut work = input.clone();
    (0..=max_edits).find(|&k| search(&mut work, &cells, 0, k, scenario, n_shelves, source))
}

fn search(
    l: &mut Layout,
    cells: &[usize],
    from: usize,
    left: usize,
    scenario: Scenario,
    n_shelves: usize,
    source: usize,
) -> bool {
    if left == 0 {
        return feasible(l, scenario, n_shelves, source);
    }
    for i in from..cells.len() {
        if cells.len() - i < left {
            break;
        }
        let v = cells[i];
        let orig = l.tile(v);
        for t in TileType::STORAGE {
            if t == orig {
                continue;
            }
            l.set_storage_tile(v, t);
            let hit = search(l, cells, i + 1, left - 1, scenario, n_shelves, source);
            l.set_storage_tile(v, orig);
            if hit {
                return true;
            }
        }
    }
    false
}
