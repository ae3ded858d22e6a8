//! Document × label score matrices and the prediction interchange file.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSpace;
use crate::error::{Error, Result};

/// How real-valued scores become binary predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    /// positive iff score > 0 (margin classifiers)
    Sign,
    /// positive iff score ≥ 0.5 (probabilities and 0/1 indicators)
    Half,
}

impl ThresholdRule {
    pub fn apply(self, score: f64) -> bool {
        match self {
            ThresholdRule::Sign => score > 0.0,
            ThresholdRule::Half => score >= 0.5,
        }
    }
}

impl std::str::FromStr for ThresholdRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sign" => Ok(ThresholdRule::Sign),
            "half" => Ok(ThresholdRule::Half),
            _ => Err(Error::InvalidArgument(format!("unknown threshold rule {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n_docs: usize,
    n_labels: usize,
    data: Vec<f64>,
    pub rule: ThresholdRule,
}

impl ScoreMatrix {
    pub fn zeros(n_docs: usize, n_labels: usize, rule: ThresholdRule) -> Self {
        Self {
            n_docs,
            n_labels,
            data: vec![0.0; n_docs * n_labels],
            rule,
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, n_labels: usize, rule: ThresholdRule) -> Result<Self> {
        let n_docs = rows.len();
        let mut data = Vec::with_capacity(n_docs * n_labels);
        for row in rows {
            if row.len() != n_labels {
                return Err(Error::shape(format!("{n_labels} scores per row"), row.len()));
            }
            data.extend(row);
        }
        Ok(Self {
            n_docs,
            n_labels,
            data,
            rule,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn get(&self, doc: usize, label: usize) -> f64 {
        self.data[doc * self.n_labels + label]
    }

    pub fn set(&mut self, doc: usize, label: usize, value: f64) {
        self.data[doc * self.n_labels + label] = value;
    }

    pub fn row(&self, doc: usize) -> &[f64] {
        &self.data[doc * self.n_labels..(doc + 1) * self.n_labels]
    }

    pub fn predictions(&self) -> Vec<Vec<bool>> {
        (0..self.n_docs)
            .map(|d| self.row(d).iter().map(|&s| self.rule.apply(s)).collect())
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct PredictionRecord {
    id: String,
    scores: BTreeMap<String, f64>,
}

/// Optional sidecar next to a prediction file declaring its threshold rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMeta {
    pub model: String,
    pub threshold: ThresholdRule,
    /// Training subset fraction, when the producer records one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<f64>,
}

pub fn meta_path(predictions: &Path) -> PathBuf {
    let mut name = predictions.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes `{"id": .., "scores": {label: score}}` per line, plus the
/// `<file>.meta.json` sidecar.
pub fn write_predictions(
    path: impl AsRef<Path>,
    ids: &[String],
    scores: &ScoreMatrix,
    space: &LabelSpace,
    model: &str,
) -> Result<()> {
    let path = path.as_ref();
    if ids.len() != scores.n_docs() || space.len() != scores.n_labels() {
        return Err(Error::shape(
            format!("{}×{}", ids.len(), space.len()),
            format!("{}×{}", scores.n_docs(), scores.n_labels()),
        ));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (d, id) in ids.iter().enumerate() {
        let record = PredictionRecord {
            id: id.clone(),
            scores: space
                .labels
                .iter()
                .cloned()
                .zip(scores.row(d).iter().copied())
                .collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    let meta = PredictionMeta {
        model: model.to_string(),
        threshold: scores.rule,
        subset: None,
    };
    let mp = meta_path(path);
    std::fs::write(&mp, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(&mp, e))
}

/// Reads a prediction file into a score matrix whose rows follow `ids`.
///
/// Every id must be present exactly once and every label of `space` must be
/// scored. The threshold rule comes from the sidecar when one exists, else
/// `default_rule`.
pub fn read_predictions(
    path: impl AsRef<Path>,
    ids: &[String],
    space: &LabelSpace,
    default_rule: ThresholdRule,
) -> Result<ScoreMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut by_id: HashMap<String, Vec<f64>> = HashMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let record: PredictionRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let row = space
            .labels
            .iter()
            .map(|l| {
                record
                    .scores
                    .get(l)
                    .copied()
                    .ok_or_else(|| parse_err(format!("no score for label {l:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if by_id.insert(record.id.clone(), row).is_some() {
            return Err(Error::DuplicateId(record.id));
        }
    }
    let rule = match std::fs::read_to_string(meta_path(path)) {
        Ok(json) => serde_json::from_str::<PredictionMeta>(&json)?.threshold,
        Err(_) => default_rule,
    };
    if by_id.len() != ids.len() {
        return Err(Error::shape(format!("{} predictions", ids.len()), by_id.len()));
    }
    let rows = ids
        .iter()
        .map(|id| {
            by_id
                .remove(id)
                .ok_or_else(|| Error::InvalidArgument(format!("no prediction for document {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::from_rows(rows, space.len(), rule)
}
