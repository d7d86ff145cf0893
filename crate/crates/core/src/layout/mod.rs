//! Warehouse layouts: typed tile grids with a designated storage area.
//!
//! A [`Layout`] is the genome of the search. Only tiles inside the storage
//! rectangle are ever changed by the optimizer; the rest of the grid (the
//! non-storage template holding workstations or home locations) is fixed.

mod io;
mod measures;
pub mod templates;
mod validate;

pub use io::{LayoutFile, ParseError};
pub(crate) use measures::bfs;
pub use measures::{
    connected_shelf_components, mean_task_length, measures, DistanceMetric, MeasureError,
    MeasureVector,
};
pub use validate::{validate, RuleId, ValidationReport, Violation};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Tile types of a warehouse grid.
///
/// `DummySource` only exists inside the repair model and is rejected by the
/// parser and the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TileType {
    Empty,
    Shelf,
    Endpoint,
    Workstation,
    HomeLocation,
    DummySource,
}

impl TileType {
    /// The five tile types that can appear in a persisted layout, in one-hot
    /// channel order.
    pub const PERSISTED: [TileType; 5] = [
        TileType::Empty,
        TileType::Shelf,
        TileType::Endpoint,
        TileType::Workstation,
        TileType::HomeLocation,
    ];

    /// Tile types the optimizer may place inside the storage area.
    pub const STORAGE: [TileType; 3] = [TileType::Shelf, TileType::Endpoint, TileType::Empty];

    pub fn to_char(self) -> char {
        match self {
            TileType::Empty => '.',
            TileType::Shelf => '@',
            TileType::Endpoint => 'e',
            TileType::Workstation => 'w',
            TileType::HomeLocation => 'r',
            TileType::DummySource => 'd',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '.' => TileType::Empty,
            '@' => TileType::Shelf,
            'e' => TileType::Endpoint,
            'w' => TileType::Workstation,
            'r' => TileType::HomeLocation,
            _ => return None,
        })
    }

    pub fn is_traversable(self) -> bool {
        self != TileType::Shelf
    }

    /// Index in [`TileType::PERSISTED`], i.e. the one-hot channel.
    pub fn channel(self) -> Option<usize> {
        TileType::PERSISTED.iter().position(|&t| t == self)
    }
}

/// Scenario a layout is optimized for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Agents shuttle between endpoints; layouts must be well-formed.
    HomeLocation,
    /// Agents alternate between workstations and endpoints; layouts must be valid.
    Workstation,
}

/// Grid coordinate (row, column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Axis-aligned rectangle of the grid that the optimizer is allowed to edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StorageArea {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl StorageArea {
    pub fn contains(&self, pos: Pos) -> bool {
        pos.row >= self.row
            && pos.row < self.row + self.height
            && pos.col >= self.col
            && pos.col < self.col + self.width
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("storage area {0:?} does not fit inside a {1}x{2} grid")]
    StorageOutOfBounds(StorageArea, usize, usize),
    #[error("expected {expected} tiles for a {width}x{height} grid, got {got}")]
    TileCount {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },
    #[error("{tile:?} tile at {pos} is not allowed inside the storage area")]
    MisplacedTile { tile: TileType, pos: Pos },
    #[error("dummy source tile at {0} cannot appear in a layout")]
    DummySource(Pos),
}

/// Row-major grid of tiles with a storage rectangle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "LayoutFile", try_from = "LayoutFile")]
pub struct Layout {
    width: usize,
    height: usize,
    tiles: Vec<TileType>,
    storage: StorageArea,
}

impl Layout {
    pub fn new(
        width: usize,
        height: usize,
        tiles: Vec<TileType>,
        storage: StorageArea,
    ) -> Result<Self, LayoutError> {
        if tiles.len() != width * height {
            return Err(LayoutError::TileCount {
                width,
                height,
                expected: width * height,
                got: tiles.len(),
            });
        }
        if storage.row + storage.height > height || storage.col + storage.width > width {
            return Err(LayoutError::StorageOutOfBounds(storage, width, height));
        }
        let layout = Self {
            width,
            height,
            tiles,
            storage,
        };
        for (idx, &tile) in layout.tiles.iter().enumerate() {
            let pos = layout.pos(idx);
            match tile {
                TileType::DummySource => return Err(LayoutError::DummySource(pos)),
                TileType::Workstation | TileType::HomeLocation if storage.contains(pos) => {
                    return Err(LayoutError::MisplacedTile { tile, pos })
                }
                _ => {}
            }
        }
        Ok(layout)
    }

    /// A grid filled with `fill` whose storage area covers `storage`.
    pub fn filled(
        width: usize,
        height: usize,
        storage: StorageArea,
        fill: TileType,
    ) -> Result<Self, LayoutError> {
        Self::new(width, height, vec![fill; width * height], storage)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn storage(&self) -> StorageArea {
        self.storage
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn tiles(&self) -> &[TileType] {
        &self.tiles
    }

    #[inline]
    pub fn index(&self, pos: Pos) -> usize {
        pos.row * self.width + pos.col
    }

    #[inline]
    pub fn pos(&self, idx: usize) -> Pos {
        Pos::new(idx / self.width, idx % self.width)
    }

    #[inline]
    pub fn get(&self, pos: Pos) -> TileType {
        self.tiles[self.index(pos)]
    }

    #[inline]
    pub fn tile(&self, idx: usize) -> TileType {
        self.tiles[idx]
    }

    /// Overwrites one tile. Storage-area placement rules are the caller's
    /// responsibility; use [`Layout::set_storage_tile`] from search code.
    pub fn set(&mut self, pos: Pos, tile: TileType) {
        let idx = self.index(pos);
        self.tiles[idx] = tile;
    }

    /// Sets a storage-area tile to one of shelf, endpoint or empty.
    pub fn set_storage_tile(&mut self, idx: usize, tile: TileType) {
        debug_assert!(self.storage.contains(self.pos(idx)));
        debug_assert!(TileType::STORAGE.contains(&tile));
        self.tiles[idx] = tile;
    }

    pub fn in_storage(&self, idx: usize) -> bool {
        self.storage.contains(self.pos(idx))
    }

    /// Indices of storage-area tiles in row-major order.
    pub fn storage_indices(&self) -> Vec<usize> {
        let s = self.storage;
        (s.row..s.row + s.height)
            .flat_map(|r| (s.col..s.col + s.width).map(move |c| r * self.width + c))
            .collect()
    }

    /// 4-neighbors of a tile index, in up/left/right/down order.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = (idx / self.width, idx % self.width);
        let up = (r > 0).then(|| idx - self.width);
        let left = (c > 0).then(|| idx - 1);
        let right = (c + 1 < self.width).then(|| idx + 1);
        let down = (r + 1 < self.height).then(|| idx + self.width);
        [up, left, right, down].into_iter().flatten()
    }

    pub fn count(&self, tile: TileType) -> usize {
        self.tiles.iter().filter(|&&t| t == tile).count()
    }

    pub fn indices_of(&self, tile: TileType) -> Vec<usize> {
        self.tiles
            .iter()
            .enumerate()
            .filter_map(|(i, &t)| (t == tile).then_some(i))
            .collect()
    }

    /// Number of tiles where `self` and `other` differ. Both layouts must
    /// have the same dimensions.
    pub fn hamming(&self, other: &Layout) -> usize {
        assert_eq!(self.tiles.len(), other.tiles.len());
        self.tiles
            .iter()
            .zip(&other.tiles)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Whole-layout transpose, used for symmetry checks of the measures.
    pub fn transposed(&self) -> Layout {
        let mut tiles = Vec::with_capacity(self.tiles.len());
        for c in 0..self.width {
            for r in 0..self.height {
                tiles.push(self.get(Pos::new(r, c)));
            }
        }
        let s = self.storage;
        Layout {
            width: self.height,
            height: self.width,
            tiles,
            storage: StorageArea {
                row: s.col,
                col: s.row,
                height: s.width,
                width: s.height,
            },
        }
    }

    /// Mirror left-to-right.
    pub fn mirrored(&self) -> Layout {
        let mut out = self.clone();
        for r in 0..self.height {
            for c in 0..self.width {
                out.set(Pos::new(r, self.width - 1 - c), self.get(Pos::new(r, c)));
            }
        }
        out.storage.col = self.width - self.storage.col - self.storage.width;
        out
    }

    /// One-hot encoding `[row][col][channel]` over [`TileType::PERSISTED`].
    pub fn one_hot(&self) -> Vec<Vec<Vec<u8>>> {
        (0..self.height)
            .map(|r| {
                (0..self.width)
                    .map(|c| {
                        let ch = self.get(Pos::new(r, c)).channel().unwrap_or(0);
                        let mut v = vec![0u8; TileType::PERSISTED.len()];
                        v[ch] = 1;
                        v
                    })
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
