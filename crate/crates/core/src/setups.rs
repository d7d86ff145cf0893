//! Named experiment setups: map sizes, shelf and agent counts, non-storage
//! templates and archive shapes.

use crate::layout::templates::{human_style, template, TemplateError};
use crate::layout::{Layout, Scenario};
use crate::qd::ArchiveConfig;
use crate::sim::Planner;
use serde::{Deserialize, Serialize};

/// How the archive hyperparameter rows are matched to setups 2 to 4.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchiveRows {
    /// Row k belongs to setup k.
    #[default]
    AsPrinted,
    /// Rows 2, 3, 4 belong to setups 3, 4, 2, which matches each row's
    /// component range to its shelf count and map size.
    Realigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub name: String,
    pub scenario: Scenario,
    /// (width, height) of the whole grid.
    pub full: [usize; 2],
    /// (width, height) of the storage area.
    pub storage: [usize; 2],
    pub n_shelves: usize,
    /// Workstations or home locations in the template.
    pub n_fixed: usize,
    pub n_agents: usize,
    pub planner: Planner,
    pub archive: ArchiveConfig,
    /// Surrogate-phase MAP-Elites iterations.
    pub inner_iterations: usize,
    /// Shelf run length of the human-style layout.
    pub cluster_len: usize,
}

fn archive(dims: [usize; 2], down: [usize; 2], comp: [f64; 2], task: [f64; 2]) -> ArchiveConfig {
    ArchiveConfig {
        dims,
        component_range: comp,
        task_length_range: task,
        downsample_dims: down,
    }
}

fn archive_row(row: usize) -> ArchiveConfig {
    match row {
        1 => archive([15, 100], [15, 25], [5.0, 20.0], [9.0, 14.0]),
        2 => archive([30, 100], [15, 25], [10.0, 40.0], [12.0, 18.0]),
        3 => archive([100, 100], [20, 20], [140.0, 240.0], [27.0, 33.0]),
        _ => archive([15, 100], [15, 25], [5.0, 20.0], [6.0, 12.0]),
    }
}

pub const SETUP_NAMES: [&str; 5] = ["1", "2", "3", "4", "desk"];

/// Looks up a named setup: "1".."4" or "desk".
pub fn named_setup(name: &str, rows: ArchiveRows) -> Option<Setup> {
    let row = |k: usize| match rows {
        ArchiveRows::AsPrinted => archive_row(k),
        ArchiveRows::Realigned => archive_row(match k {
            2 => 4,
            3 => 2,
            4 => 3,
            k => k,
        }),
    };
    let ws =
        |name: &str, full: [usize; 2], storage: [usize; 2], n_s, n_w, n_a, arch, inner| Setup {
            name: name.into(),
            scenario: Scenario::Workstation,
            full,
            storage,
            n_shelves: n_s,
            n_fixed: n_w,
            n_agents: n_a,
            planner: Planner::Rhcr,
            archive: arch,
            inner_iterations: inner,
            cluster_len: 10,
        };
    Some(match name {
        "1" => Setup {
            name: "1".into(),
            scenario: Scenario::HomeLocation,
            full: [20, 17],
            storage: [12, 9],
            n_shelves: 20,
            n_fixed: 88,
            n_agents: 88,
            planner: Planner::Rhcr,
            archive: row(1),
            inner_iterations: 10_000,
            cluster_len: 10,
        },
        "2" => ws("2", [16, 9], [12, 9], 20, 6, 60, row(2), 10_000),
        "3" => ws("3", [16, 17], [12, 17], 40, 10, 90, row(3), 50_000),
        "4" => ws("4", [36, 33], [32, 33], 240, 22, 200, row(4), 50_000),
        "desk" => ws(
            "desk",
            [13, 7],
            [9, 7],
            12,
            4,
            20,
            archive([12, 16], [6, 8], [0.0, 12.0], [4.0, 12.0]),
            2_000,
        ),
        _ => return None,
    })
}

impl Setup {
    pub fn template(&self) -> Result<Layout, TemplateError> {
        template(
            self.scenario,
            self.full[0],
            self.full[1],
            self.storage[0],
            self.storage[1],
            self.n_fixed,
        )
    }

    pub fn human_layout(&self) -> Result<Layout, TemplateError> {
        human_style(&self.template()?, self.n_shelves, self.cluster_len)
    }
}
