//! Fixed non-storage templates and the regular human-style layout pattern.
//!
//! Workstation templates put the workstations on the outermost left and
//! right columns, spread evenly over the rows. Home-location templates fill
//! alternating border rings with home locations, leaving the middle of each
//! ring side empty so the empty rings stay connected.

use super::{Layout, Pos, Scenario, StorageArea, TileType};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("storage {sw}x{sh} does not fit in a {w}x{h} grid")]
    StorageTooLarge {
        sw: usize,
        sh: usize,
        w: usize,
        h: usize,
    },
    #[error("workstation template needs at least one column on each side of the storage area")]
    NoSideColumns,
    #[error("only {available} home-location slots available, {requested} requested")]
    TooManyHomes { available: usize, requested: usize },
    #[error("{n_shelves} shelves do not fit a {sw}x{sh} storage area in rows of {cluster}")]
    ShelvesDoNotFit {
        n_shelves: usize,
        sw: usize,
        sh: usize,
        cluster: usize,
    },
}

/// Centered storage rectangle of the given size.
pub fn centered_storage(
    width: usize,
    height: usize,
    storage_width: usize,
    storage_height: usize,
) -> Result<StorageArea, TemplateError> {
    if storage_width > width || storage_height > height {
        return Err(TemplateError::StorageTooLarge {
            sw: storage_width,
            sh: storage_height,
            w: width,
            h: height,
        });
    }
    Ok(StorageArea {
        row: (height - storage_height) / 2,
        col: (width - storage_width) / 2,
        height: storage_height,
        width: storage_width,
    })
}

/// `n` row indices spread evenly over `0..len` (segment midpoints).
fn spread(n: usize, len: usize) -> Vec<usize> {
    (0..n).map(|k| ((2 * k + 1) * len) / (2 * n)).collect()
}

/// Empty grid with `n_workstations` on the left and right border columns.
pub fn workstation_template(
    width: usize,
    height: usize,
    storage_width: usize,
    storage_height: usize,
    n_workstations: usize,
) -> Result<Layout, TemplateError> {
    let storage = centered_storage(width, height, storage_width, storage_height)?;
    if storage.col == 0 || storage.col + storage.width == width {
        return Err(TemplateError::NoSideColumns);
    }
    let mut layout =
        Layout::filled(width, height, storage, TileType::Empty).expect("centered storage fits");
    let left = n_workstations.div_ceil(2);
    let right = n_workstations / 2;
    for r in spread(left, height) {
        layout.set(Pos::new(r, 0), TileType::Workstation);
    }
    for r in spread(right, height) {
        layout.set(Pos::new(r, width - 1), TileType::Workstation);
    }
    Ok(layout)
}

/// Positions of the rectangular ring `layer` tiles in from the border,
/// clockwise from the top-left corner.
fn ring(width: usize, height: usize, layer: usize) -> Vec<Pos> {
    let (top, left) = (layer, layer);
    let (bottom, right) = (height - 1 - layer, width - 1 - layer);
    let mut out = Vec::new();
    for c in left..=right {
        out.push(Pos::new(top, c));
    }
    for r in top + 1..=bottom {
        out.push(Pos::new(r, right));
    }
    if bottom > top {
        for c in (left..right).rev() {
            out.push(Pos::new(bottom, c));
        }
    }
    if right > left {
        for r in (top + 1..bottom).rev() {
            out.push(Pos::new(r, left));
        }
    }
    out
}

/// Empty grid whose border holds `n_homes` home locations.
pub fn home_template(
    width: usize,
    height: usize,
    storage_width: usize,
    storage_height: usize,
    n_homes: usize,
) -> Result<Layout, TemplateError> {
    let storage = centered_storage(width, height, storage_width, storage_height)?;
    let thickness = storage
        .row
        .min(storage.col)
        .min(height - storage.row - storage.height)
        .min(width - storage.col - storage.width);
    let mut candidates = Vec::new();
    for layer in (1..thickness).step_by(2) {
        let (top, bottom) = (layer, height - 1 - layer);
        let (left, right) = (layer, width - 1 - layer);
        let gaps = [
            Pos::new(top, width / 2),
            Pos::new(bottom, width / 2),
            Pos::new(height / 2, left),
            Pos::new(height / 2, right),
        ];
        candidates.extend(ring(width, height, layer).into_iter().filter(|p| {
            !gaps.contains(p) && p.row >= top && p.row <= bottom && p.col >= left && p.col <= right
        }));
    }
    if candidates.len() < n_homes {
        return Err(TemplateError::TooManyHomes {
            available: candidates.len(),
            requested: n_homes,
        });
    }
    let mut layout =
        Layout::filled(width, height, storage, TileType::Empty).expect("centered storage fits");
    for k in 0..n_homes {
        let p = candidates[k * candidates.len() / n_homes];
        layout.set(p, TileType::HomeLocation);
    }
    Ok(layout)
}

/// Template for a scenario: workstations for [`Scenario::Workstation`],
/// home locations for [`Scenario::HomeLocation`].
pub fn template(
    scenario: Scenario,
    width: usize,
    height: usize,
    storage_width: usize,
    storage_height: usize,
    n_fixed: usize,
) -> Result<Layout, TemplateError> {
    match scenario {
        Scenario::Workstation => {
            workstation_template(width, height, storage_width, storage_height, n_fixed)
        }
        Scenario::HomeLocation => {
            home_template(width, height, storage_width, storage_height, n_fixed)
        }
    }
}

/// Regular layout in the style of common human designs: shelves clustered in
/// horizontal runs of up to `cluster_len` with an endpoint directly above and
/// below every shelf, the band pattern (endpoints, shelves, endpoints, aisle)
/// repeated down the storage area.
pub fn human_style(
    template: &Layout,
    n_shelves: usize,
    cluster_len: usize,
) -> Result<Layout, TemplateError> {
    let s = template.storage();
    let (sw, sh) = (s.width, s.height);
    let fail = || TemplateError::ShelvesDoNotFit {
        n_shelves,
        sw,
        sh,
        cluster: cluster_len,
    };
    let mut layout = template.clone();
    for i in layout.storage_indices() {
        layout.set_storage_tile(i, TileType::Empty);
    }
    if n_shelves == 0 {
        return Ok(layout);
    }
    if sw == 0 || sh < 3 || cluster_len == 0 {
        return Err(fail());
    }
    let run = cluster_len.min(sw);
    let per_row_clusters = (sw + 1) / (run + 1);
    let per_row_clusters = per_row_clusters.max(1);
    let row_capacity = per_row_clusters * run;
    let max_bands = (sh + 1) / 4;
    let max_bands = if max_bands == 0 && sh >= 3 {
        1
    } else {
        max_bands
    };
    let bands = n_shelves.div_ceil(row_capacity);
    if bands > max_bands {
        return Err(fail());
    }
    let used_rows = 4 * bands - 1;
    let top = s.row + (sh - used_rows) / 2;
    for band in 0..bands {
        let count = n_shelves / bands + usize::from(band < n_shelves % bands);
        let clusters = count.div_ceil(run);
        let span = count + clusters - 1;
        let mut col = s.col + (sw - span) / 2;
        let shelf_row = top + 4 * band + 1;
        for c in 0..clusters {
            let len = count / clusters + usize::from(c < count % clusters);
            for _ in 0..len {
                layout.set(Pos::new(shelf_row - 1, col), TileType::Endpoint);
                layout.set(Pos::new(shelf_row, col), TileType::Shelf);
                layout.set(Pos::new(shelf_row + 1, col), TileType::Endpoint);
                col += 1;
            }
            col += 1;
        }
    }
    Ok(layout)
}
