use crate::layout::{Layout, MeasureVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveConfig {
    /// Cells along the (components, task length) axes.
    pub dims: [usize; 2],
    pub component_range: [f64; 2],
    pub task_length_range: [f64; 2],
    pub downsample_dims: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArchiveConfigError {
    #[error("archive dims must be positive, got {0:?}")]
    ZeroDim([usize; 2]),
    #[error("downsample dims {0:?} must be positive and at most {1:?}")]
    Downsample([usize; 2], [usize; 2]),
    #[error("measure range {0:?} is empty")]
    Range([f64; 2]),
}

impl ArchiveConfig {
    pub fn check(&self) -> Result<(), ArchiveConfigError> {
        if self.dims.contains(&0) {
            return Err(ArchiveConfigError::ZeroDim(self.dims));
        }
        if self.downsample_dims.contains(&0)
            || self.downsample_dims[0] > self.dims[0]
            || self.downsample_dims[1] > self.dims[1]
        {
            return Err(ArchiveConfigError::Downsample(
                self.downsample_dims,
                self.dims,
            ));
        }
        for r in [self.component_range, self.task_length_range] {
            if !(r[0] < r[1]) {
                return Err(ArchiveConfigError::Range(r));
            }
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn flat(&self, cell: [usize; 2]) -> usize {
        cell[0] * self.dims[1] + cell[1]
    }

    pub fn unflat(&self, idx: usize) -> [usize; 2] {
        [idx / self.dims[1], idx % self.dims[1]]
    }
}

fn bin(v: f64, [lo, hi]: [f64; 2], dim: usize) -> Option<usize> {
    if !(lo..=hi).contains(&v) {
        return None;
    }
    let i = ((v - lo) / (hi - lo) * dim as f64).floor() as usize;
    Some(i.min(dim - 1))
}

/// Uniform binning of both measures; `None` when either is out of range.
pub fn cell_index(m: &MeasureVector, config: &ArchiveConfig) -> Option<[usize; 2]> {
    Some([
        bin(m.n_shelf_components, config.component_range, config.dims[0])?,
        bin(m.mean_task_length, config.task_length_range, config.dims[1])?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMeta {
    pub n_runs: usize,
    pub throughput_sd: f64,
    pub success_rate: f64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elite {
    pub genome: Layout,
    pub repaired: Layout,
    pub objective: f64,
    pub measures: MeasureVector,
    /// Simulation summary; absent for surrogate predictions.
    pub eval: Option<EvalMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchiveKind {
    GroundTruth,
    Surrogate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    Inserted,
    Replaced,
    Rejected,
    OutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchiveStats {
    pub qd_score: f64,
    pub coverage: f64,
    pub num_elites: usize,
    pub best_objective: Option<f64>,
    pub out_of_range: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    pub config: ArchiveConfig,
    pub kind: ArchiveKind,
    cells: BTreeMap<usize, Elite>,
    out_of_range: usize,
}

impl Archive {
    pub fn new(config: ArchiveConfig, kind: ArchiveKind) -> Self {
        Self {
            config,
            kind,
            cells: BTreeMap::new(),
            out_of_range: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, cell: [usize; 2]) -> Option<&Elite> {
        self.cells.get(&self.config.flat(cell))
    }

    /// Occupied cells in flat-index order.
    pub fn iter(&self) -> impl Iterator<Item = ([usize; 2], &Elite)> {
        self.cells.iter().map(|(&i, e)| (self.config.unflat(i), e))
    }

    pub fn clear(&mut self) {
        self.cells.clear();
        self.out_of_range = 0;
    }

    /// Keeps the candidate iff its cell is empty or it strictly beats the
    /// incumbent.
    pub fn add(&mut self, candidate: Elite) -> AddOutcome {
        let Some(cell) = cell_index(&candidate.measures, &self.config) else {
            self.out_of_range += 1;
            return AddOutcome::OutOfRange;
        };
        let idx = self.config.flat(cell);
        match self.cells.get(&idx) {
            None => {
                self.cells.insert(idx, candidate);
                AddOutcome::Inserted
            }
            Some(e) if candidate.objective > e.objective => {
                self.cells.insert(idx, candidate);
                AddOutcome::Replaced
            }
            Some(_) => AddOutcome::Rejected,
        }
    }

    pub fn stats(&self) -> ArchiveStats {
        ArchiveStats {
            qd_score: self.cells.values().map(|e| e.objective).sum(),
            coverage: self.cells.len() as f64 / self.config.num_cells() as f64,
            num_elites: self.cells.len(),
            best_objective: self.cells.values().map(|e| e.objective).reduce(f64::max),
            out_of_range: self.out_of_range,
        }
    }

    pub fn best(&self) -> Option<&Elite> {
        self.cells
            .values()
            .reduce(|a, b| if b.objective > a.objective { b } else { a })
    }

    /// `b` elites drawn uniformly with replacement. Empty archives give an
    /// empty list.
    pub fn sample(&self, b: usize, rng: &mut impl Rng) -> Vec<&Elite> {
        let elites: Vec<&Elite> = self.cells.values().collect();
        if elites.is_empty() {
            return Vec::new();
        }
        (0..b)
            .map(|_| elites[rng.gen_range(0..elites.len())])
            .collect()
    }

    /// One uniformly chosen elite per non-empty block of a
    /// `downsample_dims` partition of the cell grid, in block order.
    pub fn downsample(&self, rng: &mut impl Rng) -> Vec<Elite> {
        let [d0, d1] = self.config.dims;
        let [s0, s1] = self.config.downsample_dims;
        let mut blocks: BTreeMap<(usize, usize), Vec<&Elite>> = BTreeMap::new();
        for ([i, j], e) in self.iter() {
            blocks
                .entry((i * s0 / d0, j * s1 / d1))
                .or_default()
                .push(e);
        }
        blocks
            .into_values()
            .map(|v| v[rng.gen_range(0..v.len())].clone())
            .collect()
    }
}
