//! MAP-Elites building blocks: the measure archive, uniform selection, the
//! geometric tile mutation, downsampling and archive export.

mod archive;
mod export;
mod mutation;

pub use archive::{
    cell_index, AddOutcome, Archive, ArchiveConfig, ArchiveConfigError, ArchiveKind, ArchiveStats,
    Elite, EvalMeta,
};
pub use export::{archive_csv, grid_svg, heatmap_csv, heatmap_svg, load_archive, save_archive};
pub use mutation::{mutate, mutate_k, mutation_count, random_genome, MUTATION_P};

use crate::layout::Layout;
use rand::Rng;

/// Parents for one batch: uniform draws from the archive, or fresh random
/// genomes over `template` while it is empty.
pub fn select_batch(
    archive: &Archive,
    b: usize,
    template: &Layout,
    rng: &mut impl Rng,
) -> Vec<Layout> {
    if archive.is_empty() {
        (0..b).map(|_| random_genome(template, rng)).collect()
    } else {
        archive
            .sample(b, rng)
            .into_iter()
            .map(|e| e.genome.clone())
            .collect()
    }
}
