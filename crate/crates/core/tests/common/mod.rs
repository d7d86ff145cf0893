#![allow(dead_code)]

pub mod repair_oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warehouse_layout::layout::templates::workstation_template;
use warehouse_layout::repair::{repair, HighsSolver, RepairStatus};
use warehouse_layout::{Layout, Pos, Scenario, StorageArea, TileType};

pub fn random_fill(template: &Layout, rng: &mut impl Rng) -> Layout {
    let mut l = template.clone();
    for v in l.storage_indices() {
        l.set_storage_tile(v, TileType::STORAGE[rng.gen_range(0..3)]);
    }
    l
}

/// 6x5 grid, 4x5 storage, one workstation on each side.
pub fn tiny_workstation() -> Layout {
    workstation_template(6, 5, 4, 5, 2).unwrap()
}

/// 6x6 grid, 4x4 storage, two home locations in the top-left corner.
pub fn tiny_home() -> Layout {
    let mut l = Layout::filled(
        6,
        6,
        StorageArea {
            row: 1,
            col: 1,
            height: 4,
            width: 4,
        },
        TileType::Empty,
    )
    .unwrap();
    l.set(Pos::new(0, 0), TileType::HomeLocation);
    l.set(Pos::new(0, 1), TileType::HomeLocation);
    l
}

pub struct MinimalityCase {
    pub scenario: Scenario,
    pub input: Layout,
    pub n_shelves: usize,
    pub source: usize,
    pub edits: usize,
}

/// A repaired layout with up to three storage tiles retyped at random, so
/// the true minimum is at most the number of retyped tiles.
pub fn minimality_case(scenario: Scenario, seed: u64) -> MinimalityCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = match scenario {
        Scenario::Workstation => tiny_workstation(),
        Scenario::HomeLocation => tiny_home(),
    };
    let n_shelves = 2;
    let base = loop {
        let out = repair(
            &random_fill(&template, &mut rng),
            scenario,
            n_shelves,
            &HighsSolver::default(),
            60.0,
        )
        .unwrap();
        if out.status == RepairStatus::Optimal {
            break out.repaired.unwrap();
        }
    };
    let source = (0..template.len())
        .find(|&v| {
            matches!(
                template.tile(v),
                TileType::Workstation | TileType::HomeLocation
            )
        })
        .unwrap();
    assert!(repair_oracle::feasible(&base, scenario, n_shelves, source));
    let edits = rng.gen_range(1..=3);
    let mut input = base.clone();
    let cells = input.storage_indices();
    for _ in 0..edits {
        let v = cells[rng.gen_range(0..cells.len())];
        let t = TileType::STORAGE[rng.gen_range(0..3)];
        input.set_storage_tile(v, t);
    }
    let edits = input.hamming(&base);
    MinimalityCase {
        scenario,
        input,
        n_shelves,
        source,
        edits,
    }
}
