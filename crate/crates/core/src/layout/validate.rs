use super::{Layout, Pos, Scenario, TileType};
use serde::{Deserialize, Serialize};

/// Which clause of the validity / well-formedness definitions failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    /// Endpoint, workstation or home tile not connected to the others
    /// through non-shelf tiles (validity clause 1).
    Disconnected,
    /// Endpoint without an adjacent shelf (validity clause 2).
    EndpointWithoutShelf,
    /// Shelf with fewer than two adjacent endpoints (validity clause 3).
    ShelfWithoutEndpoints,
    /// Traversable tile not reachable from the other traversable tiles.
    Unreachable,
    /// Endpoint or home tile pair not joined by an all-empty path.
    NotWhiteConnected,
    /// Fewer home locations than agents.
    TooFewHomeLocations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: RuleId,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub is_valid: bool,
    pub is_well_formed: bool,
    pub is_reachable: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// Whether the layout satisfies what `scenario` requires: well-formed for
    /// home locations, valid for workstations.
    pub fn meets(&self, scenario: Scenario) -> bool {
        match scenario {
            Scenario::HomeLocation => self.is_well_formed,
            Scenario::Workstation => self.is_valid,
        }
    }
}

/// Connected-component labels over tiles selected by `keep`; unselected
/// tiles get `usize::MAX`.
pub(crate) fn components(layout: &Layout, keep: impl Fn(TileType) -> bool) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; layout.len()];
    let mut n = 0;
    let mut stack = Vec::new();
    for start in 0..layout.len() {
        if label[start] != usize::MAX || !keep(layout.tile(start)) {
            continue;
        }
        label[start] = n;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for u in layout.neighbors(v) {
                if label[u] == usize::MAX && keep(layout.tile(u)) {
                    label[u] = n;
                    stack.push(u);
                }
            }
        }
        n += 1;
    }
    (label, n)
}

fn is_task_tile(t: TileType) -> bool {
    matches!(
        t,
        TileType::Endpoint | TileType::Workstation | TileType::HomeLocation
    )
}

/// Checks a layout against the validity and well-formedness definitions.
///
/// `scenario` does not change the flags; it is used only to order the
/// violation list so the clauses the scenario requires come first. Two
/// endpoint/home tiles that are directly adjacent count as white-connected
/// (the connecting path has no interior tiles).
pub fn validate(layout: &Layout, scenario: Scenario, n_agents: usize) -> ValidationReport {
    let mut violations = Vec::new();

    let (trav, n_trav) = components(layout, TileType::is_traversable);
    let task_tiles: Vec<usize> = (0..layout.len())
        .filter(|&i| is_task_tile(layout.tile(i)))
        .collect();
    let mut connected = true;
    if let Some(&first) = task_tiles.first() {
        let comp = trav[first];
        for &i in &task_tiles {
            if trav[i] != comp {
                connected = false;
                violations.push(Violation {
                    rule: RuleId::Disconnected,
                    pos: layout.pos(i),
                });
            }
        }
    }

    let mut adjacency_ok = true;
    for i in 0..layout.len() {
        match layout.tile(i) {
            TileType::Endpoint => {
                if !layout
                    .neighbors(i)
                    .any(|u| layout.tile(u) == TileType::Shelf)
                {
                    adjacency_ok = false;
                    violations.push(Violation {
                        rule: RuleId::EndpointWithoutShelf,
                        pos: layout.pos(i),
                    });
                }
            }
            TileType::Shelf => {
                let n = layout
                    .neighbors(i)
                    .filter(|&u| layout.tile(u) == TileType::Endpoint)
                    .count();
                if n < 2 {
                    adjacency_ok = false;
                    violations.push(Violation {
                        rule: RuleId::ShelfWithoutEndpoints,
                        pos: layout.pos(i),
                    });
                }
            }
            _ => {}
        }
    }
    let is_valid = connected && adjacency_ok;

    let is_reachable = n_trav <= 1;
    if !is_reachable {
        // Report every traversable tile outside the largest component.
        let mut sizes = vec![0usize; n_trav];
        for &l in &trav {
            if l != usize::MAX {
                sizes[l] += 1;
            }
        }
        let main = (0..n_trav)
            .max_by_key(|&c| (sizes[c], usize::MAX - c))
            .unwrap_or(0);
        for (i, &l) in trav.iter().enumerate() {
            if l != usize::MAX && l != main {
                violations.push(Violation {
                    rule: RuleId::Unreachable,
                    pos: layout.pos(i),
                });
            }
        }
    }

    // Well-formedness: every pair of endpoint/home tiles must be adjacent or
    // share an adjacent all-empty component.
    let (white, _) = components(layout, |t| t == TileType::Empty);
    let parking: Vec<usize> = (0..layout.len())
        .filter(|&i| matches!(layout.tile(i), TileType::Endpoint | TileType::HomeLocation))
        .collect();
    let touching: Vec<Vec<usize>> = parking
        .iter()
        .map(|&i| {
            let mut v: Vec<usize> = layout
                .neighbors(i)
                .filter_map(|u| (white[u] != usize::MAX).then_some(white[u]))
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut bad = vec![false; parking.len()];
    for a in 0..parking.len() {
        for b in a + 1..parking.len() {
            let adjacent = layout.neighbors(parking[a]).any(|u| u == parking[b]);
            let shared = touching[a]
                .iter()
                .any(|c| touching[b].binary_search(c).is_ok());
            if !adjacent && !shared {
                bad[a] = true;
                bad[b] = true;
            }
        }
    }
    let white_connected = !bad.iter().any(|&b| b);
    for (k, &b) in bad.iter().enumerate() {
        if b {
            violations.push(Violation {
                rule: RuleId::NotWhiteConnected,
                pos: layout.pos(parking[k]),
            });
        }
    }
    let homes = layout.count(TileType::HomeLocation);
    if homes < n_agents {
        violations.push(Violation {
            rule: RuleId::TooFewHomeLocations,
            pos: Pos::new(0, 0),
        });
    }
    let is_well_formed = is_valid && white_connected && homes >= n_agents;

    let primary = |r: RuleId| match scenario {
        Scenario::Workstation => {
            !matches!(r, RuleId::NotWhiteConnected | RuleId::TooFewHomeLocations)
        }
        Scenario::HomeLocation => true,
    };
    violations.sort_by_key(|v| !primary(v.rule));

    ValidationReport {
        is_valid,
        is_well_formed,
        is_reachable,
        violations,
    }
}
