use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embed::{AdamConfig, EmbedConfig, PooledEncoderConfig, PoolingMode, TrainConfig, POS_WEIGHT_CAP};
use crate::error::{Error, Result};
use crate::lsa::{LsaConfig, SvdOptions, SvmOptions};
use crate::split::DEFAULT_SEED;

/// Models benchmarked when the configuration names none.
pub const DEFAULT_MODELS: &[&str] = &["base_pdf", "count_25", "lsa_100", "lsa_250", "avg", "max", "cnn"];

/// One benchmark row: `base_pdf`, `count_<m>`, `lsa_<k>`, `avg`, `max` or
/// `cnn`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSpec {
    Base,
    Count(usize),
    Lsa(usize),
    Embed(PoolingMode),
}

impl ModelSpec {
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Base => f.write_str("base_pdf"),
            ModelSpec::Count(m) => write!(f, "count_{m}"),
            ModelSpec::Lsa(k) => write!(f, "lsa_{k}"),
            ModelSpec::Embed(PoolingMode::Average) => f.write_str("avg"),
            ModelSpec::Embed(PoolingMode::Max) => f.write_str("max"),
            ModelSpec::Embed(PoolingMode::Conv) => f.write_str("cnn"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown model {s:?}"));
        let number = |rest: &str| rest.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(bad);
        Ok(match s.trim().to_lowercase().as_str() {
            "base" | "base_pdf" => ModelSpec::Base,
            "count" => ModelSpec::Count(crate::baseline::DEFAULT_COUNT_THRESHOLD),
            "lsa" => ModelSpec::Lsa(250),
            "avg" | "glove_avg" => ModelSpec::Embed(PoolingMode::Average),
            "max" | "glove_max" => ModelSpec::Embed(PoolingMode::Max),
            "cnn" | "glove_cnn" => ModelSpec::Embed(PoolingMode::Conv),
            other => {
                if let Some(m) = other.strip_prefix("count_") {
                    ModelSpec::Count(number(m)?)
                } else if let Some(k) = other.strip_prefix("lsa_") {
                    ModelSpec::Lsa(number(k)?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsaSettings {
    /// Keep only this many most frequent terms; unlimited when absent.
    pub vocab_cap: Option<usize>,
    pub sublinear_tf: bool,
    pub svd_tol: f64,
    pub svd_max_iters: usize,
    pub svm_c: f64,
    pub svm_tol: f64,
    pub svm_max_iter: usize,
}

impl Default for LsaSettings {
    fn default() -> Self {
        let base = LsaConfig::default();
        Self {
            vocab_cap: None,
            sublinear_tf: base.sublinear_tf,
            svd_tol: base.svd.tol,
            svd_max_iters: base.svd.max_power_iters,
            svm_c: base.svm.c,
            svm_tol: base.svm.tol,
            svm_max_iter: base.svm.max_iter,
        }
    }
}

impl LsaSettings {
    pub fn config(&self, k: usize, seed: u64) -> LsaConfig {
        LsaConfig {
            k,
            vocab_cap: self.vocab_cap.unwrap_or(usize::MAX),
            sublinear_tf: self.sublinear_tf,
            svd: SvdOptions {
                tol: self.svd_tol,
                max_power_iters: self.svd_max_iters,
                ..SvdOptions::default()
            },
            svm: SvmOptions {
                c: self.svm_c,
                tol: self.svm_tol,
                max_iter: self.svm_max_iter,
                seed,
            },
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSettings {
    pub dim: usize,
    pub vocab_cap: usize,
    pub max_seq_len: usize,
    pub filter_widths: Vec<usize>,
    pub filters: usize,
    pub hidden: Vec<usize>,
    /// Epochs for the pooled models.
    pub epochs: usize,
    pub cnn_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub pos_weight_cap: f64,
    /// Whether the pooled models update their word vectors. The CNN always
    /// does.
    pub train_pooled_embeddings: bool,
}

impl Default for EmbedSettings {
    fn default() -> Self {
        let conv = PooledEncoderConfig::new(PoolingMode::Conv);
        let train = TrainConfig::default();
        Self {
            dim: 50,
            vocab_cap: 60_000,
            max_seq_len: conv.max_seq_len,
            filter_widths: conv.filter_widths,
            filters: conv.filters_per_width,
            hidden: train.hidden,
            epochs: train.epochs,
            cnn_epochs: 10,
            batch_size: train.batch_size,
            lr: train.adam.lr,
            pos_weight_cap: POS_WEIGHT_CAP,
            train_pooled_embeddings: false,
        }
    }
}

impl EmbedSettings {
    pub fn config(&self, mode: PoolingMode, seed: u64) -> EmbedConfig {
        let conv = mode == PoolingMode::Conv;
        EmbedConfig {
            encoder: PooledEncoderConfig {
                mode,
                max_seq_len: self.max_seq_len,
                filter_widths: self.filter_widths.clone(),
                filters_per_width: self.filters,
                trainable_embeddings: conv || self.train_pooled_embeddings,
            },
            train: TrainConfig {
                hidden: self.hidden.clone(),
                epochs: if conv { self.cnn_epochs } else { self.epochs },
                batch_size: self.batch_size,
                adam: AdamConfig {
                    lr: self.lr,
                    ..AdamConfig::default()
                },
                pos_weight_cap: self.pos_weight_cap,
                seed,
            },
            dim: self.dim,
            vocab_cap: self.vocab_cap,
        }
    }
}

/// Everything a run needs. Loaded from TOML; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Raw corpus JSONL for `ingest`.
    pub corpus: Option<PathBuf>,
    /// `{primary: [alternatives]}` JSON.
    pub mapping: Option<PathBuf>,
    /// One stopword per line; the built-in list when absent.
    pub stopwords: Option<PathBuf>,
    /// `token v1 … vD` word vectors; random vectors when absent.
    pub embeddings: Option<PathBuf>,
    pub top_k: usize,
    pub holdout: f64,
    pub subsets: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub models: Vec<String>,
    pub lsa: LsaSettings,
    pub embed: EmbedSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            mapping: None,
            stopwords: None,
            embeddings: None,
            top_k: 30,
            holdout: 0.1,
            subsets: vec![0.1, 0.5, 1.0],
            seed: DEFAULT_SEED,
            out: PathBuf::from("out"),
            models: DEFAULT_MODELS.iter().map(|s| s.to_string()).collect(),
            lsa: LsaSettings::default(),
            embed: EmbedSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        if self.models.is_empty() {
            return Err(Error::InvalidArgument("no models configured".into()));
        }
        self.models.iter().map(|m| m.parse()).collect()
    }

    pub fn validate_fractions(&self) -> Result<()> {
        if !(self.holdout > 0.0 && self.holdout < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "holdout fraction {} not in (0, 1)",
                self.holdout
            )));
        }
        let s = &self.subsets;
        if s.is_empty() || s[0] <= 0.0 || s.windows(2).any(|w| w[0] >= w[1]) || s[s.len() - 1] != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "subset fractions must ascend within (0, 1] and end at 1.0, got {s:?}"
            )));
        }
        Ok(())
    }
}
