use super::validate::components;
use super::{Layout, Pos, Scenario, TileType};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// The two diversity measures of a layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureVector {
    pub n_shelf_components: f64,
    pub mean_task_length: f64,
}

impl MeasureVector {
    pub fn as_array(&self) -> [f64; 2] {
        [self.n_shelf_components, self.mean_task_length]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    /// Shortest path over non-shelf tiles.
    #[default]
    Bfs,
    /// Grid L1 distance, ignoring shelves. Ablation only.
    Manhattan,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    #[error("no traversable path between {0} and {1}; repair the layout first")]
    Unreachable(Pos, Pos),
}

/// Number of 4-connected components of shelf tiles.
pub fn connected_shelf_components(layout: &Layout) -> usize {
    components(layout, |t| t == TileType::Shelf).1
}

/// BFS distances from `src` over traversable tiles; `u32::MAX` if unreachable.
pub(crate) fn bfs(layout: &Layout, src: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; layout.len()];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(v) = queue.pop_front() {
        let d = dist[v] + 1;
        for u in layout.neighbors(v) {
            if dist[u] == u32::MAX && layout.tile(u).is_traversable() {
                dist[u] = d;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Average distance of the scenario's task pairs: endpoint-workstation pairs
/// for the workstation scenario, unordered pairs of distinct endpoints for
/// the home-location scenario. A layout with no pairs yields 0.
pub fn mean_task_length(
    layout: &Layout,
    scenario: Scenario,
    metric: DistanceMetric,
) -> Result<f64, MeasureError> {
    let endpoints = layout.indices_of(TileType::Endpoint);
    let sources = match scenario {
        Scenario::Workstation => layout.indices_of(TileType::Workstation),
        Scenario::HomeLocation => endpoints.clone(),
    };

    let mut total = 0f64;
    let mut pairs = 0usize;
    for (k, &s) in sources.iter().enumerate() {
        let targets: &[usize] = match scenario {
            Scenario::Workstation => &endpoints,
            Scenario::HomeLocation => &endpoints[k + 1..],
        };
        if targets.is_empty() {
            continue;
        }
        match metric {
            DistanceMetric::Bfs => {
                let dist = bfs(layout, s);
                for &t in targets {
                    if dist[t] == u32::MAX {
                        return Err(MeasureError::Unreachable(layout.pos(s), layout.pos(t)));
                    }
                    total += dist[t] as f64;
                }
            }
            DistanceMetric::Manhattan => {
                let a = layout.pos(s);
                for &t in targets {
                    let b = layout.pos(t);
                    total += (a.row.abs_diff(b.row) + a.col.abs_diff(b.col)) as f64;
                }
            }
        }
        pairs += targets.len();
    }
    Ok(if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    })
}

/// Both measures of a (repaired) layout.
pub fn measures(
    layout: &Layout,
    scenario: Scenario,
    metric: DistanceMetric,
) -> Result<MeasureVector, MeasureError> {
    Ok(MeasureVector {
        n_shelf_components: connected_shelf_components(layout) as f64,
        mean_task_length: mean_task_length(layout, scenario, metric)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::StorageArea;
    use rand::{Rng, SeedableRng};

    fn parse(rows: &[&str]) -> Layout {
        let h = rows.len();
        let w = rows[0].len();
        let mut text = format!("type warehouse\nheight {h}\nwidth {w}\nstorage 0 0 0 0\n");
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        Layout::parse(&text).unwrap()
    }

    #[test]
    fn zero_shelves() {
        assert_eq!(connected_shelf_components(&parse(&["...", "..."])), 0);
    }

    #[test]
    fn diagonal_shelves_are_separate() {
        assert_eq!(connected_shelf_components(&parse(&["@.", ".@"])), 2);
        assert_eq!(connected_shelf_components(&parse(&["@@", ".@"])), 1);
    }

    /// Oracle: repeatedly pick an unvisited shelf and flood-fill it with an
    /// explicit queue, counting fills.
    fn flood_fill_count(l: &Layout) -> usize {
        let mut seen = vec![false; l.len()];
        let mut count = 0;
        for r in 0..l.height() {
            for c in 0..l.width() {
                let i = r * l.width() + c;
                if seen[i] || l.tile(i) != TileType::Shelf {
                    continue;
                }
                count += 1;
                let mut q = VecDeque::from([(r as i64, c as i64)]);
                seen[i] = true;
                while let Some((r, c)) = q.pop_front() {
                    for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                        let (nr, nc) = (r + dr, c + dc);
                        if nr < 0 || nc < 0 || nr >= l.height() as i64 || nc >= l.width() as i64 {
                            continue;
                        }
                        let j = nr as usize * l.width() + nc as usize;
                        if !seen[j] && l.tile(j) == TileType::Shelf {
                            seen[j] = true;
                            q.push_back((nr, nc));
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn components_match_flood_fill_on_random_storage() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let storage = StorageArea {
            row: 0,
            col: 0,
            height: 9,
            width: 12,
        };
        for _ in 0..200 {
            let mut l = Layout::filled(12, 9, storage, TileType::Empty).unwrap();
            let picks = rand::seq::index::sample(&mut rng, 108, 20);
            for i in picks.iter() {
                l.set_storage_tile(i, TileType::Shelf);
            }
            assert_eq!(connected_shelf_components(&l), flood_fill_count(&l));
        }
    }

    #[test]
    fn removing_a_shelf_changes_count_by_at_most_three() {
        // Exhaustive over all 3x3 and 2x4 shelf patterns.
        for (w, h) in [(3usize, 3usize), (4, 2)] {
            let n = w * h;
            let storage = StorageArea {
                row: 0,
                col: 0,
                height: h,
                width: w,
            };
            for mask in 0u32..(1 << n) {
                let mut l = Layout::filled(w, h, storage, TileType::Empty).unwrap();
                for i in 0..n {
                    if mask & (1 << i) != 0 {
                        l.set_storage_tile(i, TileType::Shelf);
                    }
                }
                let before = connected_shelf_components(&l) as i64;
                assert!(before as usize <= l.count(TileType::Shelf));
                for i in 0..n {
                    if mask & (1 << i) == 0 {
                        continue;
                    }
                    let mut m = l.clone();
                    m.set_storage_tile(i, TileType::Empty);
                    let delta = connected_shelf_components(&m) as i64 - before;
                    assert!((-1..=3).contains(&delta), "mask {mask:b} tile {i}: {delta}");
                }
            }
        }
    }

    #[test]
    fn two_endpoints_three_apart() {
        let l = parse(&["e..e"]);
        let v = mean_task_length(&l, Scenario::HomeLocation, DistanceMetric::Bfs).unwrap();
        assert_eq!(v, 3.0);
    }

    #[test]
    fn workstation_mean_of_two_and_four() {
        let l = parse(&["..e.w...e"]);
        let v = mean_task_length(&l, Scenario::Workstation, DistanceMetric::Bfs).unwrap();
        assert_eq!(v, 3.0);
    }

    #[test]
    fn shelves_block_distance_unless_manhattan() {
        let l = parse(&["e@e", "..."]);
        let bfs_len = mean_task_length(&l, Scenario::HomeLocation, DistanceMetric::Bfs).unwrap();
        let l1 = mean_task_length(&l, Scenario::HomeLocation, DistanceMetric::Manhattan).unwrap();
        assert_eq!(bfs_len, 4.0);
        assert_eq!(l1, 2.0);
    }

    #[test]
    fn unreachable_pair_is_an_error() {
        let l = parse(&["e@e"]);
        assert!(matches!(
            mean_task_length(&l, Scenario::HomeLocation, DistanceMetric::Bfs),
            Err(MeasureError::Unreachable(..))
        ));
    }

    /// Floyd-Warshall over the traversable grid as an all-pairs oracle.
    fn all_pairs(l: &Layout) -> Vec<Vec<u64>> {
        let n = l.len();
        let inf = u64::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for v in 0..n {
            if !l.tile(v).is_traversable() {
                continue;
            }
            d[v][v] = 0;
            for u in l.neighbors(v) {
                if l.tile(u).is_traversable() {
                    d[v][u] = 1;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn random_layouts_match_all_pairs_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let storage = StorageArea {
            row: 0,
            col: 2,
            height: 9,
            width: 12,
        };
        let mut checked = 0;
        while checked < 20 {
            let mut l = Layout::filled(16, 9, storage, TileType::Empty).unwrap();
            for r in [1, 4, 7] {
                l.set(Pos::new(r, 0), TileType::Workstation);
                l.set(Pos::new(r, 15), TileType::Workstation);
            }
            for i in l.storage_indices() {
                let t = [
                    TileType::Shelf,
                    TileType::Endpoint,
                    TileType::Empty,
                    TileType::Empty,
                ][rng.gen_range(0..4)];
                l.set_storage_tile(i, t);
            }
            let oracle = all_pairs(&l);
            let ws = l.indices_of(TileType::Workstation);
            let es = l.indices_of(TileType::Endpoint);
            let mut sum = 0u64;
            let mut ok = true;
            for &w in &ws {
                for &e in &es {
                    ok &= oracle[w][e] < u64::MAX / 4;
                    sum = sum.saturating_add(oracle[w][e]);
                }
            }
            if !ok {
                continue;
            }
            let expected = sum as f64 / (ws.len() * es.len()) as f64;
            let got = mean_task_length(&l, Scenario::Workstation, DistanceMetric::Bfs).unwrap();
            assert!((got - expected).abs() < 1e-9);

            let home_expected = {
                let (mut s, mut n) = (0u64, 0u64);
                for (k, &a) in es.iter().enumerate() {
                    for &b in &es[k + 1..] {
                        s += oracle[a][b];
                        n += 1;
                    }
                }
                s as f64 / n as f64
            };
            let got = mean_task_length(&l, Scenario::HomeLocation, DistanceMetric::Bfs).unwrap();
            assert!((got - home_expected).abs() < 1e-9);
            checked += 1;
        }
    }

    #[test]
    fn task_length_invariant_under_transpose_and_mirror() {
        let l = parse(&["w..e@e.", ".......", "e@e...w"]);
        let base = mean_task_length(&l, Scenario::Workstation, DistanceMetric::Bfs).unwrap();
        for t in [l.transposed(), l.mirrored(), l.transposed().mirrored()] {
            let v = mean_task_length(&t, Scenario::Workstation, DistanceMetric::Bfs).unwrap();
            assert!((v - base).abs() < 1e-12);
        }
    }
}
