//! Word-embedding document classifiers: average pooling, max pooling, and a
//! shallow CNN, each feeding a feed-forward network with sigmoid outputs.

mod conv;
mod mlp;
mod pool;
mod table;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use conv::{ConvCache, ConvEncoder, ConvGroup};
pub use mlp::{positive_weights, sigmoid, weighted_bce, Adam, AdamConfig, Dense, Mlp, MlpCache, POS_WEIGHT_CAP};
pub use pool::{average_rows, max_rows, pool_average, pool_max, token_matrix};
pub use table::{load_embeddings, EmbeddingTable, OOV_RANGE};

use crate::error::{Error, Result};
use crate::scores::{ScoreMatrix, ThresholdRule};
use crate::text::{fit_vocabulary, TokenStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMode {
    Average,
    Max,
    Conv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledEncoderConfig {
    pub mode: PoolingMode,
    pub max_seq_len: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub trainable_embeddings: bool,
}

impl PooledEncoderConfig {
    pub fn new(mode: PoolingMode) -> Self {
        Self {
            mode,
            max_seq_len: 1_000,
            filter_widths: vec![3, 3, 3],
            filters_per_width: 64,
            trainable_embeddings: mode == PoolingMode::Conv,
        }
    }

    /// Full-scale settings: 10K tokens, `[3, 3, 3] × 600` filters.
    pub fn full_scale(mode: PoolingMode) -> Self {
        Self {
            max_seq_len: 10_000,
            filters_per_width: 600,
            ..Self::new(mode)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_seq_len == 0 {
            return Err(Error::InvalidArgument("max_seq_len must be at least 1".into()));
        }
        if self.mode == PoolingMode::Conv
            && (self.filter_widths.is_empty() || self.filter_widths.contains(&0) || self.filters_per_width == 0)
        {
            return Err(Error::InvalidArgument(
                "conv encoder needs widths ≥ 1 and filters ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden layer widths between the document vector and the output.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub pos_weight_cap: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128],
            epochs: 30,
            batch_size: 32,
            adam: AdamConfig::default(),
            pos_weight_cap: POS_WEIGHT_CAP,
            seed: 36,
        }
    }
}

/// Trained feed-forward classifier over fixed document vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    pub mlp: Mlp,
    pub pos_weights: Vec<f64>,
    /// Mean per-label loss of each epoch.
    pub history: Vec<f64>,
}

impl MlpClassifier {
    /// Mean per-label weighted BCE of one sample and its parameter gradient.
    pub fn loss_and_grads(&self, x: &[f64], y: &[bool]) -> (f64, Mlp) {
        let mut grads = self.mlp.zeros_like();
        let loss = sample_step(&self.mlp, &self.pos_weights, x, y, 1.0, &mut grads).0;
        (loss, grads)
    }
}

// Forward + backward for one sample; gradients are scaled by `scale / n_labels`
// and accumulated. Returns the mean per-label loss and ∂L/∂x.
fn sample_step(mlp: &Mlp, pos_weights: &[f64], x: &[f64], y: &[bool], scale: f64, grads: &mut Mlp) -> (f64, Vec<f64>) {
    let (logits, cache) = mlp.forward(x);
    let (loss, mut d) = weighted_bce(&logits, y, pos_weights);
    let factor = scale / logits.len() as f64;
    for v in &mut d {
        *v *= factor;
    }
    let dx = mlp.backward(&cache, &d, grads);
    (loss / logits.len() as f64, dx)
}

fn check_targets(n: usize, y: &[Vec<bool>]) -> Result<usize> {
    if n != y.len() {
        return Err(Error::shape(format!("{n} label rows"), y.len()));
    }
    let n_labels = y.first().map_or(0, Vec::len);
    if n_labels == 0 {
        return Err(Error::InvalidArgument("no labels to train on".into()));
    }
    Ok(n_labels)
}

/// Shared mini-batch loop: shuffles with the seeded generator, averages
/// per-sample gradients over each batch, and applies Adam.
fn minibatch_epochs<P, G>(
    n: usize,
    config: &TrainConfig,
    params: &mut P,
    zero_grads: impl Fn(&P) -> G,
    tensors: impl Fn(&mut P) -> Vec<&mut Vec<f64>>,
    grad_tensors: impl Fn(&mut G) -> Vec<&mut Vec<f64>>,
    sample: impl Fn(&P, usize, f64, &mut G) -> f64,
) -> Result<Vec<f64>> {
    let shapes: Vec<usize> = tensors(params).iter().map(|t| t.len()).collect();
    let mut adam = Adam::new(config.adam, &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let batch_size = config.batch_size.max(1);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(batch_size) {
            let mut grads = zero_grads(params);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                total += sample(params, i, scale, &mut grads);
            }
            adam.step(tensors(params), grad_tensors(&mut grads));
        }
        let mean = total / n as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(mean);
    }
    Ok(history)
}

/// Trains an MLP on fixed feature vectors with class-weighted BCE.
pub fn train_classifier(
    features: &[Vec<f64>],
    y: &[Vec<bool>],
    pos_weights: &[f64],
    config: &TrainConfig,
) -> Result<MlpClassifier> {
    let n_labels = check_targets(features.len(), y)?;
    let n_in = features.first().map_or(0, Vec::len);
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("classifier features".into()));
    }
    if pos_weights.len() != n_labels {
        return Err(Error::shape(format!("{n_labels} class weights"), pos_weights.len()));
    }
    let sizes: Vec<usize> = std::iter::once(n_in)
        .chain(config.hidden.iter().copied())
        .chain(std::iter::once(n_labels))
        .collect();
    let mut mlp = Mlp::new(&sizes, config.seed);
    let history = minibatch_epochs(
        features.len(),
        config,
        &mut mlp,
        Mlp::zeros_like,
        Mlp::tensors_mut,
        Mlp::tensors_mut,
        |m, i, scale, g| sample_step(m, pos_weights, &features[i], &y[i], scale, g).0,
    )?;
    Ok(MlpClassifier {
        mlp,
        pos_weights: pos_weights.to_vec(),
        history,
    })
}

/// Sigmoid scores with the inclusive 0.5 threshold.
pub fn predict_proba(model: &MlpClassifier, features: &[Vec<f64>]) -> Result<ScoreMatrix> {
    let rows = features
        .iter()
        .map(|x| {
            if x.len() != model.mlp.n_in() {
                return Err(Error::shape(format!("{} features", model.mlp.n_in()), x.len()));
            }
            Ok(model.mlp.logits(x).into_iter().map(sigmoid).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    ScoreMatrix::from_rows(rows, model.mlp.n_out(), ThresholdRule::Half)
}

/// Token positions resolved against an embedding table. Positions outside
/// the table carry their fixed out-of-vocabulary vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    ids: Vec<Option<usize>>,
    oov: Vec<f64>,
}

impl Sequence {
    pub fn new<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable, max_seq_len: usize) -> Self {
        let dim = table.dim();
        let tokens = &tokens[..tokens.len().min(max_seq_len)];
        let mut oov = vec![0.0; tokens.len() * dim];
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(p, t)| {
                let id = table.id(t.as_ref());
                if id.is_none() {
                    oov[p * dim..(p + 1) * dim].copy_from_slice(&table.oov_vector(t.as_ref()));
                }
                id
            })
            .collect();
        Self { ids, oov }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn materialize(&self, table: &EmbeddingTable) -> Vec<f64> {
        let dim = table.dim();
        let mut out = self.oov.clone();
        for (p, id) in self.ids.iter().enumerate() {
            if let Some(id) = id {
                out[p * dim..(p + 1) * dim].copy_from_slice(table.row(*id));
            }
        }
        out
    }
}

/// Convolutional text classifier: embeddings → conv encoder → MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextCnn {
    pub table: EmbeddingTable,
    pub conv: ConvEncoder,
    pub mlp: Mlp,
    pub trainable_embeddings: bool,
    pub pos_weights: Vec<f64>,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextCnnGrads {
    /// Row-major like the table; empty when embeddings are frozen.
    pub embeddings: Vec<f64>,
    pub conv: ConvEncoder,
    pub mlp: Mlp,
}

impl TextCnnGrads {
    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut t = Vec::new();
        if !self.embeddings.is_empty() {
            t.push(&mut self.embeddings);
        }
        t.extend(self.conv.tensors_mut());
        t.extend(self.mlp.tensors_mut());
        t
    }
}

impl TextCnn {
    pub fn new(
        table: EmbeddingTable,
        config: &PooledEncoderConfig,
        hidden: &[usize],
        n_labels: usize,
        seed: u64,
    ) -> Self {
        let conv = ConvEncoder::new(table.dim(), &config.filter_widths, config.filters_per_width, seed);
        let sizes: Vec<usize> = std::iter::once(conv.output_len())
            .chain(hidden.iter().copied())
            .chain(std::iter::once(n_labels))
            .collect();
        let mlp = Mlp::new(&sizes, seed.wrapping_add(1));
        Self {
            table,
            conv,
            mlp,
            trainable_embeddings: config.trainable_embeddings,
            pos_weights: vec![1.0; n_labels],
            history: Vec::new(),
        }
    }

    pub fn zero_grads(&self) -> TextCnnGrads {
        TextCnnGrads {
            embeddings: if self.trainable_embeddings {
                vec![0.0; self.table.len() * self.table.dim()]
            } else {
                Vec::new()
            },
            conv: self.conv.zeros_like(),
            mlp: self.mlp.zeros_like(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut t = Vec::new();
        if self.trainable_embeddings {
            t.push(self.table.vectors_mut());
        }
        t.extend(self.conv.tensors_mut());
        t.extend(self.mlp.tensors_mut());
        t
    }

    pub fn encode(&self, seq: &Sequence) -> Vec<f64> {
        self.conv.encode(&seq.materialize(&self.table))
    }

    pub fn logits(&self, seq: &Sequence) -> Vec<f64> {
        self.mlp.logits(&self.encode(seq))
    }

    fn accumulate(&self, seq: &Sequence, y: &[bool], scale: f64, grads: &mut TextCnnGrads) -> f64 {
        let rows = seq.materialize(&self.table);
        let (h, cache) = self.conv.forward(&rows);
        let (loss, d_h) = sample_step(&self.mlp, &self.pos_weights, &h, y, scale, &mut grads.mlp);
        let d_rows = self.conv.backward(&rows, &cache, &d_h, &mut grads.conv);
        if self.trainable_embeddings {
            let dim = self.table.dim();
            for (p, id) in seq.ids.iter().enumerate() {
                if let Some(id) = id {
                    for (g, d) in grads.embeddings[id * dim..(id + 1) * dim]
                        .iter_mut()
                        .zip(&d_rows[p * dim..(p + 1) * dim])
                    {
                        *g += d;
                    }
                }
            }
        }
        loss
    }

    /// Mean per-label loss of one document and the gradient of every
    /// trainable parameter.
    pub fn loss_and_grads(&self, seq: &Sequence, y: &[bool]) -> (f64, TextCnnGrads) {
        let mut grads = self.zero_grads();
        let loss = self.accumulate(seq, y, 1.0, &mut grads);
        (loss, grads)
    }

    pub fn fit(&mut self, seqs: &[Sequence], y: &[Vec<bool>], pos_weights: &[f64], config: &TrainConfig) -> Result<()> {
        let n_labels = check_targets(seqs.len(), y)?;
        if pos_weights.len() != n_labels || self.mlp.n_out() != n_labels {
            return Err(Error::shape(format!("{} labels", self.mlp.n_out()), n_labels));
        }
        self.pos_weights = pos_weights.to_vec();
        let history = minibatch_epochs(
            seqs.len(),
            config,
            self,
            TextCnn::zero_grads,
            TextCnn::tensors_mut,
            TextCnnGrads::tensors_mut,
            |m, i, scale, g| m.accumulate(&seqs[i], &y[i], scale, g),
        )?;
        self.history = history;
        Ok(())
    }

    pub fn predict_proba(&self, seqs: &[Sequence]) -> Result<ScoreMatrix> {
        let rows = seqs
            .iter()
            .map(|s| self.logits(s).into_iter().map(sigmoid).collect())
            .collect();
        ScoreMatrix::from_rows(rows, self.mlp.n_out(), ThresholdRule::Half)
    }
}

/// Where word vectors come from.
#[derive(Debug, Clone)]
pub enum EmbeddingSource<'a> {
    /// Seeded uniform vectors only.
    Random,
    /// A `token v1 … vD` text file.
    File(&'a Path),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub encoder: PooledEncoderConfig,
    pub train: TrainConfig,
    pub dim: usize,
    pub vocab_cap: usize,
}

impl EmbedConfig {
    pub fn new(mode: PoolingMode) -> Self {
        Self {
            encoder: PooledEncoderConfig::new(mode),
            train: TrainConfig::default(),
            dim: 50,
            vocab_cap: 60_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EmbedModel {
    Pooled {
        table: EmbeddingTable,
        classifier: MlpClassifier,
    },
    Cnn(TextCnn),
}

/// End-to-end word-embedding classifier: vocabulary, vectors, encoder and
/// trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedClassifier {
    pub config: EmbedConfig,
    pub model: EmbedModel,
}

impl EmbedClassifier {
    pub fn fit(
        docs: &[TokenStream],
        y: &[Vec<bool>],
        config: EmbedConfig,
        source: EmbeddingSource<'_>,
    ) -> Result<Self> {
        config.encoder.validate()?;
        check_targets(docs.len(), y)?;
        let vocab = fit_vocabulary(docs, config.vocab_cap)?;
        let table = match source {
            EmbeddingSource::Random => EmbeddingTable::random(&vocab, config.dim, config.train.seed),
            EmbeddingSource::File(path) => load_embeddings(path, &vocab, config.dim, config.train.seed)?,
        };
        let pos_weights = positive_weights(y, config.train.pos_weight_cap);
        let model = match config.encoder.mode {
            PoolingMode::Average | PoolingMode::Max => {
                let features = pooled_features(docs, &table, &config.encoder);
                let classifier = train_classifier(&features, y, &pos_weights, &config.train)?;
                EmbedModel::Pooled { table, classifier }
            }
            PoolingMode::Conv => {
                let seqs: Vec<Sequence> = docs
                    .iter()
                    .map(|d| Sequence::new(d, &table, config.encoder.max_seq_len))
                    .collect();
                let n_labels = y[0].len();
                let mut cnn = TextCnn::new(
                    table,
                    &config.encoder,
                    &config.train.hidden,
                    n_labels,
                    config.train.seed,
                );
                cnn.fit(&seqs, y, &pos_weights, &config.train)?;
                EmbedModel::Cnn(cnn)
            }
        };
        Ok(Self { config, model })
    }

    pub fn history(&self) -> &[f64] {
        match &self.model {
            EmbedModel::Pooled { classifier, .. } => &classifier.history,
            EmbedModel::Cnn(cnn) => &cnn.history,
        }
    }

    pub fn predict(&self, docs: &[TokenStream]) -> Result<ScoreMatrix> {
        match &self.model {
            EmbedModel::Pooled { table, classifier } => {
                predict_proba(classifier, &pooled_features(docs, table, &self.config.encoder))
            }
            EmbedModel::Cnn(cnn) => {
                let seqs: Vec<Sequence> = docs
                    .iter()
                    .map(|d| Sequence::new(d, &cnn.table, self.config.encoder.max_seq_len))
                    .collect();
                cnn.predict_proba(&seqs)
            }
        }
    }

    /// Restores lookup indices dropped by serialization.
    pub fn reindex(&mut self) {
        match &mut self.model {
            EmbedModel::Pooled { table, .. } => table.reindex(),
            EmbedModel::Cnn(cnn) => cnn.table.reindex(),
        }
    }
}

fn pooled_features(docs: &[TokenStream], table: &EmbeddingTable, config: &PooledEncoderConfig) -> Vec<Vec<f64>> {
    docs.iter()
        .map(|d| match config.mode {
            PoolingMode::Max => pool_max(d, table, config.max_seq_len),
            _ => pool_average(d, table, config.max_seq_len),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logit_model_predicts_everything() {
        let mut mlp = Mlp::new(&[2, 3], 1);
        for t in mlp.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        let model = MlpClassifier {
            mlp,
            pos_weights: vec![1.0; 3],
            history: vec![],
        };
        let s = predict_proba(&model, &[vec![0.3, -2.0]]).unwrap();
        assert_eq!(s.row(0), &[0.5, 0.5, 0.5]);
        assert!(s.predictions()[0].iter().all(|&p| p));
        assert!(predict_proba(&model, &[vec![1.0]]).is_err());
    }

    #[test]
    fn large_logit_is_near_one() {
        let mlp = Mlp {
            layers: vec![Dense {
                n_in: 1,
                n_out: 1,
                w: vec![0.0],
                b: vec![10.0],
            }],
        };
        let model = MlpClassifier {
            mlp,
            pos_weights: vec![1.0],
            history: vec![],
        };
        assert!(predict_proba(&model, &[vec![0.0]]).unwrap().get(0, 0) > 0.9999);
    }

    #[test]
    fn separable_toy_reaches_perfect_training_f1() {
        let features: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 / 40.0;
                if i % 2 == 0 {
                    vec![1.0 + t, 0.5 - t]
                } else {
                    vec![-1.0 - t, t - 0.5]
                }
            })
            .collect();
        let y: Vec<Vec<bool>> = (0..40).map(|i| vec![i % 2 == 0]).collect();
        let config = TrainConfig {
            epochs: 200,
            batch_size: 8,
            adam: AdamConfig {
                lr: 1e-2,
                ..Default::default()
            },
            ..Default::default()
        };
        let model = train_classifier(&features, &y, &[1.0], &config).unwrap();
        let preds = predict_proba(&model, &features).unwrap().predictions();
        assert_eq!(preds, y);
    }

    #[test]
    fn all_negative_label_learns_low_rate() {
        let features: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin(), (i as f64).cos()]).collect();
        let y = vec![vec![false]; 30];
        let config = TrainConfig {
            epochs: 100,
            adam: AdamConfig {
                lr: 1e-2,
                ..Default::default()
            },
            ..Default::default()
        };
        let model = train_classifier(&features, &y, &[1.0], &config).unwrap();
        assert!(*model.history.last().unwrap() < std::f64::consts::LN_2);
        let preds = predict_proba(&model, &features).unwrap().predictions();
        assert!(preds.iter().all(|r| !r[0]));
    }

    #[test]
    fn divergence_is_reported() {
        let features = vec![vec![1e300, -1e300], vec![-1e300, 1e300]];
        let config = TrainConfig {
            epochs: 5,
            adam: AdamConfig {
                lr: 1e300,
                ..Default::default()
            },
            ..Default::default()
        };
        let err = train_classifier(&features, &[vec![true], vec![false]], &[1.0], &config);
        assert!(matches!(err, Err(Error::Diverged { .. })), "{err:?}");
    }

    #[test]
    fn encoder_config_validation() {
        let mut c = PooledEncoderConfig::new(PoolingMode::Conv);
        assert!(c.validate().is_ok());
        c.filter_widths = vec![0];
        assert!(c.validate().is_err());
        c = PooledEncoderConfig::new(PoolingMode::Average);
        c.max_seq_len = 0;
        assert!(c.validate().is_err());
        assert!(!PooledEncoderConfig::new(PoolingMode::Max).trainable_embeddings);
        assert!(PooledEncoderConfig::new(PoolingMode::Conv).trainable_embeddings);
    }
}
