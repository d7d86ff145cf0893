//! Exchange protocol with the learned surrogate, version 1.
//!
//! Every message is one JSON object. Layout tensors are nested arrays of
//! shape `[H][W][5]`, channels in [`TileType::PERSISTED`] order (empty,
//! shelf, endpoint, workstation, home location). Tile-usage grids are
//! `[H][W]` and sum to 1. Measures are `[n_shelf_components,
//! mean_task_length]`.
//!
//! Predict request: `{"version":1,"mode":"predict","shape":[H,W,5],"layouts":[L..]}`.
//! Predict response: `{"version":1,"predictions":[{"repaired":L,"tile_usage":U,"objective":f,"measures":[m1,m2]}..]}`,
//! one per layout, where `repaired` holds per-channel scores.
//!
//! Train request: `{"version":1,"mode":"train","shape":[H,W,5],"records":[{"unrepaired":L,"repaired":L,"tile_usage":U,"objective":f,"measures":[m1,m2]}..]}`.
//! Train response: `{"version":1,"losses":{"s1":[..],"s2":[..],"s3":[..]}}`.
//!
//! [`TileType::PERSISTED`]: crate::layout::TileType::PERSISTED

use super::{evaluate_genome, DatasetRecord, SearchConfig};
use crate::layout::{Layout, MeasureVector, TileType};
use crate::repair::SolverAdapter;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

pub const PROTOCOL_VERSION: u32 = 1;

pub type Tensor3 = Vec<Vec<Vec<f64>>>;
pub type Grid = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRecord {
    pub unrepaired: Tensor3,
    pub repaired: Tensor3,
    pub tile_usage: Grid,
    pub objective: f64,
    pub measures: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Request {
    Predict {
        version: u32,
        shape: [usize; 3],
        layouts: Vec<Tensor3>,
    },
    Train {
        version: u32,
        shape: [usize; 3],
        records: Vec<WireRecord>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePrediction {
    pub repaired: Tensor3,
    pub tile_usage: Grid,
    pub objective: f64,
    pub measures: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub version: u32,
    pub predictions: Vec<WirePrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResponse {
    pub version: u32,
    pub losses: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Argmax of the predicted repaired tensor, if it forms a legal layout.
    pub repaired: Option<Layout>,
    pub tile_usage: Vec<f64>,
    pub objective: f64,
    pub measures: MeasureVector,
}

#[derive(Debug, thiserror::Error)]
pub enum SurrogateError {
    #[error("surrogate unavailable: {0}")]
    Unavailable(String),
    #[error("surrogate protocol: {0}")]
    Protocol(String),
    #[error("surrogate failed: {0}")]
    Failed(String),
}

pub trait Surrogate {
    fn predict(&mut self, genomes: &[Layout]) -> Result<Vec<Prediction>, SurrogateError>;
    /// Fine-tunes on the full dataset; returns per-epoch losses by
    /// sub-network.
    fn train(
        &mut self,
        records: &[DatasetRecord],
    ) -> Result<BTreeMap<String, Vec<f64>>, SurrogateError>;
}

pub fn encode_layout(l: &Layout) -> Tensor3 {
    l.one_hot()
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| v.into_iter().map(f64::from).collect())
                .collect()
        })
        .collect()
}

pub fn encode_grid(values: &[f64], width: usize) -> Grid {
    values.chunks(width).map(|r| r.to_vec()).collect()
}

/// Argmax decode against the shape and storage area of `like`.
pub fn decode_layout(t: &Tensor3, like: &Layout) -> Result<Layout, SurrogateError> {
    check_shape(t, like)?;
    let mut tiles = Vec::with_capacity(like.len());
    for row in t {
        for scores in row {
            let ch = (0..scores.len())
                .max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)))
                .unwrap();
            tiles.push(TileType::PERSISTED[ch]);
        }
    }
    Layout::new(like.width(), like.height(), tiles, like.storage())
        .map_err(|e| SurrogateError::Protocol(e.to_string()))
}

fn check_shape(t: &Tensor3, like: &Layout) -> Result<(), SurrogateError> {
    let ok = t.len() == like.height()
        && t.iter().all(|r| {
            r.len() == like.width() && r.iter().all(|c| c.len() == TileType::PERSISTED.len())
        });
    if ok {
        Ok(())
    } else {
        Err(SurrogateError::Protocol(format!(
            "expected a {}x{}x{} tensor",
            like.height(),
            like.width(),
            TileType::PERSISTED.len()
        )))
    }
}

pub fn shape_of(l: &Layout) -> [usize; 3] {
    [l.height(), l.width(), TileType::PERSISTED.len()]
}

pub fn predict_request(genomes: &[Layout]) -> Request {
    Request::Predict {
        version: PROTOCOL_VERSION,
        shape: genomes
            .first()
            .map(shape_of)
            .unwrap_or([0, 0, TileType::PERSISTED.len()]),
        layouts: genomes.iter().map(encode_layout).collect(),
    }
}

pub fn train_request(records: &[DatasetRecord]) -> Request {
    Request::Train {
        version: PROTOCOL_VERSION,
        shape: records.first().map(|r| shape_of(&r.unrepaired)).unwrap_or([
            0,
            0,
            TileType::PERSISTED.len(),
        ]),
        records: records
            .iter()
            .map(|r| WireRecord {
                unrepaired: encode_layout(&r.unrepaired),
                repaired: encode_layout(&r.repaired),
                tile_usage: encode_grid(&r.tile_usage_normalized, r.repaired.width()),
                objective: r.objective,
                measures: r.measures.as_array(),
            })
            .collect(),
    }
}

/// Validates a predict response against the request's layouts.
pub fn decode_predictions(
    resp: PredictResponse,
    genomes: &[Layout],
) -> Result<Vec<Prediction>, SurrogateError> {
    if resp.version != PROTOCOL_VERSION {
        return Err(SurrogateError::Protocol(format!(
            "version {} not supported",
            resp.version
        )));
    }
    if resp.predictions.len() != genomes.len() {
        return Err(SurrogateError::Protocol(format!(
            "{} predictions for {} layouts",
            resp.predictions.len(),
            genomes.len()
        )));
    }
    resp.predictions
        .into_iter()
        .zip(genomes)
        .map(|(p, g)| {
            check_shape(&p.repaired, g)?;
            let usage: Vec<f64> = p.tile_usage.iter().flatten().copied().collect();
            if p.tile_usage.len() != g.height() || usage.len() != g.len() {
                return Err(SurrogateError::Protocol(
                    "tile usage grid has the wrong shape".into(),
                ));
            }
            Ok(Prediction {
                repaired: decode_layout(&p.repaired, g).ok(),
                tile_usage: usage,
                objective: p.objective,
                measures: MeasureVector {
                    n_shelf_components: p.measures[0],
                    mean_task_length: p.measures[1],
                },
            })
        })
        .collect()
}

/// Surrogate served by an external program: one process per request, the
/// request JSON on stdin and the response JSON on stdout.
#[derive(Debug, Clone)]
pub struct CommandSurrogate {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl CommandSurrogate {
    fn exchange(&self, req: &Request) -> Result<String, SurrogateError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SurrogateError::Unavailable(format!("{}: {e}", self.program.display())))?;
        let body = serde_json::to_vec(req).map_err(|e| SurrogateError::Protocol(e.to_string()))?;
        child
            .stdin
            .take()
            .unwrap()
            .write_all(&body)
            .map_err(|e| SurrogateError::Failed(e.to_string()))?;
        let out = child
            .wait_with_output()
            .map_err(|e| SurrogateError::Failed(e.to_string()))?;
        if !out.status.success() {
            return Err(SurrogateError::Failed(
                String::from_utf8_lossy(&out.stderr).trim().to_string(),
            ));
        }
        String::from_utf8(out.stdout).map_err(|e| SurrogateError::Protocol(e.to_string()))
    }
}

impl Surrogate for CommandSurrogate {
    fn predict(&mut self, genomes: &[Layout]) -> Result<Vec<Prediction>, SurrogateError> {
        let text = self.exchange(&predict_request(genomes))?;
        let resp: PredictResponse =
            serde_json::from_str(&text).map_err(|e| SurrogateError::Protocol(e.to_string()))?;
        decode_predictions(resp, genomes)
    }

    fn train(
        &mut self,
        records: &[DatasetRecord],
    ) -> Result<BTreeMap<String, Vec<f64>>, SurrogateError> {
        let text = self.exchange(&train_request(records))?;
        let resp: TrainResponse =
            serde_json::from_str(&text).map_err(|e| SurrogateError::Protocol(e.to_string()))?;
        if resp.version != PROTOCOL_VERSION {
            return Err(SurrogateError::Protocol(format!(
                "version {} not supported",
                resp.version
            )));
        }
        Ok(resp.losses)
    }
}

/// Answers with ground truth by repairing and simulating every layout.
/// Genomes that cannot be repaired get NaN measures, which no archive
/// accepts.
pub struct OracleSurrogate<'a> {
    pub config: SearchConfig,
    pub solver: &'a dyn SolverAdapter,
    pub seed: u64,
    calls: u64,
}

impl<'a> OracleSurrogate<'a> {
    pub fn new(config: SearchConfig, solver: &'a dyn SolverAdapter, seed: u64) -> Self {
        Self {
            config,
            solver,
            seed,
            calls: 0,
        }
    }
}

impl Surrogate for OracleSurrogate<'_> {
    fn predict(&mut self, genomes: &[Layout]) -> Result<Vec<Prediction>, SurrogateError> {
        self.calls += 1;
        let seeds: Vec<(usize, &Layout)> = genomes.iter().enumerate().collect();
        let call = self.calls;
        let results = crate::par::map(&seeds, |&(i, g)| {
            evaluate_genome(
                &self.config,
                self.solver,
                g,
                crate::par::derive_seed(self.seed, &[call, i as u64]),
            )
        });
        results
            .into_iter()
            .map(|r| match r {
                Ok(Some(ev)) => Ok(Prediction {
                    repaired: Some(ev.record.repaired.clone()),
                    tile_usage: ev.record.tile_usage_normalized.clone(),
                    objective: ev.record.objective,
                    measures: ev.record.measures,
                }),
                Ok(None) => Ok(Prediction {
                    repaired: None,
                    tile_usage: Vec::new(),
                    objective: 0.0,
                    measures: MeasureVector {
                        n_shelf_components: f64::NAN,
                        mean_task_length: f64::NAN,
                    },
                }),
                Err(e) => Err(SurrogateError::Failed(e.to_string())),
            })
            .collect()
    }

    fn train(
        &mut self,
        _records: &[DatasetRecord],
    ) -> Result<BTreeMap<String, Vec<f64>>, SurrogateError> {
        Ok(BTreeMap::new())
    }
}
