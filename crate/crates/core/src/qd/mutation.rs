use crate::layout::{Layout, TileType};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Geometric};

pub const MUTATION_P: f64 = 0.5;

/// Number of tiles to mutate: k >= 1 with P(k) = (1-p)^(k-1) p.
pub fn mutation_count(rng: &mut impl Rng) -> usize {
    // rand_distr counts failures before the first success.
    Geometric::new(MUTATION_P).unwrap().sample(rng) as usize + 1
}

/// A layout with every storage tile drawn uniformly from the storage types.
pub fn random_genome(template: &Layout, rng: &mut impl Rng) -> Layout {
    let mut l = template.clone();
    for v in l.storage_indices() {
        l.set_storage_tile(
            v,
            TileType::STORAGE[rng.gen_range(0..TileType::STORAGE.len())],
        );
    }
    l
}

/// Retypes `k` distinct storage tiles (k clamped to the storage size), each
/// to a uniformly drawn storage type. Returns the child and k.
pub fn mutate_k(genome: &Layout, k: usize, rng: &mut impl Rng) -> Layout {
    let cells = genome.storage_indices();
    let k = k.min(cells.len());
    let mut child = genome.clone();
    for i in sample(rng, cells.len(), k) {
        child.set_storage_tile(
            cells[i],
            TileType::STORAGE[rng.gen_range(0..TileType::STORAGE.len())],
        );
    }
    child
}

pub fn mutate(genome: &Layout, rng: &mut impl Rng) -> Layout {
    let k = mutation_count(rng);
    mutate_k(genome, k, rng)
}
