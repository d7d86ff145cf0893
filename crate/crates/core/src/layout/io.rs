use super::{Layout, LayoutError, Pos, StorageArea, TileType};
use serde::{Deserialize, Serialize};

/// Error raised while reading a layout file. Line and column are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: malformed header, expected `{expected}`")]
    Header { line: usize, expected: &'static str },
    #[error("line {line}, column {column}: unknown tile character {ch:?}")]
    UnknownTile {
        line: usize,
        column: usize,
        ch: char,
    },
    #[error("line {line}: row has {got} tiles, expected {expected}")]
    RaggedRow {
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("line {line}: expected {expected} grid rows, found {got}")]
    RowCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line 4: storage rectangle {0:?} lies outside the grid")]
    StorageOutOfBounds(StorageArea),
    #[error("line {line}, column {column}: {source}")]
    Invalid {
        line: usize,
        column: usize,
        source: LayoutError,
    },
    #[error("invalid layout json: {0}")]
    Json(String),
}

/// JSON mirror of the text format, field for field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutFile {
    #[serde(rename = "type")]
    pub kind: String,
    pub height: usize,
    pub width: usize,
    pub storage: StorageArea,
    pub rows: Vec<String>,
}

fn header_value<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
    expected: &'static str,
    arity: usize,
) -> Result<Vec<usize>, ParseError> {
    let (no, line) = lines
        .next()
        .ok_or(ParseError::Header { line: 0, expected })?;
    let err = || ParseError::Header { line: no, expected };
    let mut parts = line.split(' ');
    if parts.next() != Some(key) {
        return Err(err());
    }
    let values = parts
        .map(|p| p.parse::<usize>().map_err(|_| err()))
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != arity {
        return Err(err());
    }
    Ok(values)
}

impl Layout {
    /// Parses the text layout format:
    ///
    /// ```text
    /// type warehouse
    /// height H
    /// width W
    /// storage r0 c0 h w
    /// <H rows of W characters from @ e w r .>
    /// ```
    pub fn parse(text: &str) -> Result<Layout, ParseError> {
        let text = text.strip_suffix('\n').unwrap_or(text);
        let mut lines = text
            .split('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .enumerate()
            .map(|(i, l)| (i + 1, l));

        match lines.next() {
            Some((_, "type warehouse")) => {}
            _ => {
                return Err(ParseError::Header {
                    line: 1,
                    expected: "type warehouse",
                })
            }
        }
        let height = header_value(&mut lines, "height", "height H", 1)?[0];
        let width = header_value(&mut lines, "width", "width W", 1)?[0];
        let s = header_value(&mut lines, "storage", "storage r0 c0 h w", 4)?;
        let storage = StorageArea {
            row: s[0],
            col: s[1],
            height: s[2],
            width: s[3],
        };
        if storage.row + storage.height > height || storage.col + storage.width > width {
            return Err(ParseError::StorageOutOfBounds(storage));
        }

        let mut tiles = Vec::with_capacity(width * height);
        let mut rows = 0;
        let mut last_line = 4;
        for (no, line) in lines {
            last_line = no;
            if rows == height {
                if line.is_empty() {
                    continue;
                }
                return Err(ParseError::RowCount {
                    line: no,
                    expected: height,
                    got: rows + 1,
                });
            }
            let mut count = 0;
            for (ci, ch) in line.chars().enumerate() {
                let tile = TileType::from_char(ch).ok_or(ParseError::UnknownTile {
                    line: no,
                    column: ci + 1,
                    ch,
                })?;
                let pos = Pos::new(rows, ci);
                if matches!(tile, TileType::Workstation | TileType::HomeLocation)
                    && ci < width
                    && storage.contains(pos)
                {
                    return Err(ParseError::Invalid {
                        line: no,
                        column: ci + 1,
                        source: LayoutError::MisplacedTile { tile, pos },
                    });
                }
                tiles.push(tile);
                count += 1;
            }
            if count != width {
                return Err(ParseError::RaggedRow {
                    line: no,
                    got: count,
                    expected: width,
                });
            }
            rows += 1;
        }
        if rows != height {
            return Err(ParseError::RowCount {
                line: last_line,
                expected: height,
                got: rows,
            });
        }
        Layout::new(width, height, tiles, storage).map_err(|source| ParseError::Invalid {
            line: 5,
            column: 1,
            source,
        })
    }

    /// Inverse of [`Layout::parse`]; every line ends with `\n`.
    pub fn to_text(&self) -> String {
        let s = self.storage;
        let mut out = format!(
            "type warehouse\nheight {}\nwidth {}\nstorage {} {} {} {}\n",
            self.height, self.width, s.row, s.col, s.height, s.width
        );
        out.reserve(self.tiles.len() + self.height);
        for row in self.tiles.chunks(self.width) {
            out.extend(row.iter().map(|t| t.to_char()));
            out.push('\n');
        }
        out
    }

    pub fn to_file(&self) -> LayoutFile {
        LayoutFile {
            kind: "warehouse".into(),
            height: self.height,
            width: self.width,
            storage: self.storage,
            rows: self
                .tiles
                .chunks(self.width)
                .map(|r| r.iter().map(|t| t.to_char()).collect())
                .collect(),
        }
    }

    pub fn from_file(file: &LayoutFile) -> Result<Layout, ParseError> {
        if file.kind != "warehouse" {
            return Err(ParseError::Header {
                line: 1,
                expected: "type warehouse",
            });
        }
        let s = file.storage;
        let mut text = format!(
            "type warehouse\nheight {}\nwidth {}\nstorage {} {} {} {}\n",
            file.height, file.width, s.row, s.col, s.height, s.width
        );
        for r in &file.rows {
            text.push_str(r);
            text.push('\n');
        }
        Layout::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("layout json")
    }

    pub fn from_json(json: &str) -> Result<Layout, ParseError> {
        let file: LayoutFile =
            serde_json::from_str(json).map_err(|e| ParseError::Json(e.to_string()))?;
        Layout::from_file(&file)
    }

    /// Accepts either the text format or its JSON mirror.
    pub fn parse_any(text: &str) -> Result<Layout, ParseError> {
        if text.trim_start().starts_with('{') {
            Layout::from_json(text)
        } else {
            Layout::parse(text)
        }
    }
}


impl From<Layout> for LayoutFile {
    fn from(l: Layout) -> Self {
        l.to_file()
    }
}

impl TryFrom<LayoutFile> for Layout {
    type Error = ParseError;

    fn try_from(f: LayoutFile) -> Result<Self, Self::Error> {
        Layout::from_file(&f)
    }
}
