//! Experiment orchestration: configuration, pipeline stages, and the
//! model × subset benchmark.

mod config;
mod stage;
mod synth;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{EmbedSettings, ExperimentConfig, LsaSettings, ModelSpec, DEFAULT_MODELS};
pub use stage::{file_digest, FileDigest, StageManifest};
pub use synth::{synth_corpus, SynthOptions, SynthPaths, SyntheticCorpus};

use crate::baseline::{
    build_associated_terms, count_match_predict, fit_dummy, label_stopwords, predict_dummy, AssociatedTerms, DummyModel,
};
use crate::corpus::{
    build_sublabel_index, finalize_label_space, label_matrix, load_corpus, load_finalized, normalize_labels,
    write_corpus, Document, LabelMapping, LabelSpace,
};
use crate::embed::{EmbedClassifier, EmbedConfig, EmbeddingSource};
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, confusion, render_report, Metric, MetricsReport};
use crate::lsa::{top_topic_terms, LsaClassifier};
use crate::scores::{read_predictions, write_predictions, PredictionMeta, ScoreMatrix, ThresholdRule};
use crate::split::{fraction_label, make_manifest, SplitManifest};
use crate::text::{read_stopwords, TokenStream, Tokenizer};

/// Version tag written into model checkpoints.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Locations of the artifacts each stage reads and writes under `out`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub out: PathBuf,
}

impl Layout {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self { out: out.into() }
    }

    pub fn corpus(&self) -> PathBuf {
        self.out.join("corpus.jsonl")
    }

    pub fn labels(&self) -> PathBuf {
        self.out.join("labels.json")
    }

    pub fn split(&self) -> PathBuf {
        self.out.join("split.json")
    }

    pub fn stage_manifest(&self, stage: &str) -> PathBuf {
        self.out.join(format!("{stage}.manifest.json"))
    }

    pub fn model(&self, model: &str, subset: f64) -> PathBuf {
        self.out.join("models").join(format!("{model}_{}.json", pct(subset)))
    }

    pub fn predictions(&self, model: &str, subset: f64) -> PathBuf {
        self.out
            .join("predictions")
            .join(format!("{model}_{}.jsonl", pct(subset)))
    }

    pub fn report_json(&self) -> PathBuf {
        self.out.join("report.json")
    }

    pub fn report_text(&self) -> PathBuf {
        self.out.join("report.txt")
    }
}

fn pct(subset: f64) -> String {
    format!("{}pct", (subset * 100.0).round() as i64)
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn tokenizer(config: &ExperimentConfig) -> Result<Tokenizer> {
    Ok(match &config.stopwords {
        Some(path) => Tokenizer::new(read_stopwords(path)?),
        None => Tokenizer::default(),
    })
}

/// Writes a synthetic corpus, its mapping and word vectors into `out`.
pub fn cmd_synth(options: &SynthOptions, out: impl AsRef<Path>) -> Result<SynthPaths> {
    let out = out.as_ref();
    let corpus = synth_corpus(options)?;
    let paths = corpus.write(out)?;
    StageManifest::new(
        "synth",
        options.seed,
        &[],
        &[&paths.corpus, &paths.mapping, &paths.embeddings],
    )?
    .write(Layout::new(out).stage_manifest("synth"))?;
    Ok(paths)
}

/// Reads, normalizes and truncates the raw corpus; writes the finalized
/// corpus and its label-space sidecar.
pub fn cmd_ingest(config: &ExperimentConfig) -> Result<(LabelSpace, Vec<Document>)> {
    let corpus_path = config
        .corpus
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("no corpus path configured".into()))?;
    let raw = load_corpus(corpus_path)?;
    let docs = match &config.mapping {
        Some(path) => normalize_labels(&raw, &LabelMapping::from_json_file(path)?),
        None => raw,
    };
    let (space, finalized) = finalize_label_space(&docs, config.top_k)?;

    let layout = Layout::new(&config.out);
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    write_corpus(layout.corpus(), &finalized, Some(&space))?;
    space.write(layout.labels())?;
    let mut inputs = vec![corpus_path.to_path_buf()];
    inputs.extend(config.mapping.clone());
    inputs.extend(config.stopwords.clone());
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    StageManifest::new("ingest", config.seed, &inputs, &[&layout.corpus(), &layout.labels()])?
        .write(layout.stage_manifest("ingest"))?;
    Ok((space, finalized))
}

/// Loads the finalized corpus and label space written by [`cmd_ingest`].
pub fn load_ingested(config: &ExperimentConfig) -> Result<(LabelSpace, Vec<Document>)> {
    let layout = Layout::new(&config.out);
    let space = LabelSpace::read(layout.labels())?;
    let docs = load_finalized(layout.corpus(), &space)?;
    Ok((space, docs))
}

pub fn cmd_split(config: &ExperimentConfig) -> Result<SplitManifest> {
    config.validate_fractions()?;
    let (space, docs) = load_ingested(config)?;
    let manifest = make_manifest(&docs, &space, config.holdout, &config.subsets, config.seed)?;
    let layout = Layout::new(&config.out);
    manifest.write(layout.split())?;
    StageManifest::new(
        "split",
        config.seed,
        &[&layout.corpus(), &layout.labels()],
        &[&layout.split()],
    )?
    .write(layout.stage_manifest("split"))?;
    Ok(manifest)
}

/// A fitted model of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Base(DummyModel),
    Count { terms: AssociatedTerms, m: usize },
    Lsa(Box<LsaClassifier>),
    Embed(Box<EmbedClassifier>),
}

/// Model file: the fitted state plus the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: String,
    pub subset: f64,
    pub labels: Vec<String>,
    pub config: ExperimentConfig,
    pub state: TrainedModel,
}

impl Checkpoint {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_text(path, &(serde_json::to_string(self)? + "\n"))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut checkpoint: Checkpoint = serde_json::from_str(&text)?;
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "{}: checkpoint version {} is not supported",
                path.display(),
                checkpoint.version
            )));
        }
        if let TrainedModel::Embed(model) = &mut checkpoint.state {
            model.reindex();
        }
        Ok(checkpoint)
    }
}

/// Fits one model on training documents and their token streams.
pub fn train_model(
    spec: &ModelSpec,
    docs: &[Document],
    tokens: &[TokenStream],
    space: &LabelSpace,
    config: &ExperimentConfig,
    tokenizer: &Tokenizer,
) -> Result<TrainedModel> {
    if docs.is_empty() {
        return Err(Error::EmptySplit(format!("no training documents for {}", spec.name())));
    }
    let y = label_matrix(docs, space);
    Ok(match *spec {
        ModelSpec::Base => TrainedModel::Base(fit_dummy(docs, space)),
        ModelSpec::Count(m) => {
            let sub = build_sublabel_index(docs, space);
            TrainedModel::Count {
                terms: build_associated_terms(&sub, space, &label_stopwords(), tokenizer),
                m,
            }
        }
        ModelSpec::Lsa(k) => TrainedModel::Lsa(Box::new(LsaClassifier::fit(
            tokens,
            &y,
            config.lsa.config(k, config.seed),
        )?)),
        ModelSpec::Embed(mode) => {
            let embed_config: EmbedConfig = config.embed.config(mode, config.seed);
            let source = match &config.embeddings {
                Some(path) => EmbeddingSource::File(path),
                None => EmbeddingSource::Random,
            };
            TrainedModel::Embed(Box::new(EmbedClassifier::fit(tokens, &y, embed_config, source)?))
        }
    })
}

pub fn predict_model(model: &TrainedModel, tokens: &[TokenStream]) -> Result<ScoreMatrix> {
    match model {
        TrainedModel::Base(m) => Ok(predict_dummy(m, tokens.len())),
        TrainedModel::Count { terms, m } => Ok(count_match_predict(tokens, terms, *m)),
        TrainedModel::Lsa(m) => m.predict(tokens),
        TrainedModel::Embed(m) => m.predict(tokens),
    }
}

/// Corpus, split and token streams shared by every cell of a run.
pub struct Workspace {
    pub space: LabelSpace,
    pub docs: Vec<Document>,
    pub tokens: Vec<TokenStream>,
    pub manifest: SplitManifest,
    pub tokenizer: Tokenizer,
    index: HashMap<String, usize>,
}

impl Workspace {
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        let (space, docs) = load_ingested(config)?;
        let manifest = SplitManifest::read(Layout::new(&config.out).split())?;
        Self::new(space, docs, manifest, tokenizer(config)?)
    }

    pub fn new(space: LabelSpace, docs: Vec<Document>, manifest: SplitManifest, tokenizer: Tokenizer) -> Result<Self> {
        let index: HashMap<String, usize> = docs.iter().enumerate().map(|(i, d)| (d.id.clone(), i)).collect();
        for id in manifest
            .holdout
            .iter()
            .chain(manifest.subsets.iter().flat_map(|(_, ids)| ids))
        {
            if !index.contains_key(id) {
                return Err(Error::InvalidArgument(format!("split names unknown document {id:?}")));
            }
        }
        let tokens = docs.iter().map(|d| tokenizer.tokenize(&d.text)).collect();
        Ok(Self {
            space,
            docs,
            tokens,
            manifest,
            tokenizer,
            index,
        })
    }

    fn select(&self, ids: &BTreeSet<String>) -> (Vec<Document>, Vec<TokenStream>) {
        ids.iter()
            .map(|id| {
                let i = self.index[id];
                (self.docs[i].clone(), self.tokens[i].clone())
            })
            .unzip()
    }

    pub fn training_set(&self, subset: f64) -> Result<(Vec<Document>, Vec<TokenStream>)> {
        let ids = self
            .manifest
            .subset(subset)
            .ok_or_else(|| Error::InvalidArgument(format!("split has no {} subset", fraction_label(subset))))?;
        Ok(self.select(ids))
    }

    /// Holdout documents in id order with their token streams.
    pub fn holdout(&self) -> (Vec<Document>, Vec<TokenStream>) {
        self.select(&self.manifest.holdout)
    }

    pub fn holdout_ids(&self) -> Vec<String> {
        self.manifest.holdout.iter().cloned().collect()
    }
}

pub fn cmd_train(config: &ExperimentConfig, ws: &Workspace, spec: &ModelSpec, subset: f64) -> Result<PathBuf> {
    let (docs, tokens) = ws.training_set(subset)?;
    let state = train_model(spec, &docs, &tokens, &ws.space, config, &ws.tokenizer)?;
    let path = Layout::new(&config.out).model(&spec.name(), subset);
    Checkpoint {
        version: CHECKPOINT_VERSION,
        model: spec.name(),
        subset,
        labels: ws.space.labels.clone(),
        config: config.clone(),
        state,
    }
    .write(&path)?;
    Ok(path)
}

/// Scores the holdout with a saved model and writes the prediction file.
pub fn cmd_predict(config: &ExperimentConfig, ws: &Workspace, checkpoint: impl AsRef<Path>) -> Result<PathBuf> {
    let checkpoint = Checkpoint::read(checkpoint)?;
    if checkpoint.labels != ws.space.labels {
        return Err(Error::InvalidArgument(
            "checkpoint label space differs from the corpus".into(),
        ));
    }
    let (_, tokens) = ws.holdout();
    let scores = predict_model(&checkpoint.state, &tokens)?;
    let path = Layout::new(&config.out).predictions(&checkpoint.model, checkpoint.subset);
    create_parent(&path)?;
    write_predictions(&path, &ws.holdout_ids(), &scores, &ws.space, &checkpoint.model)?;
    tag_subset(&path, checkpoint.subset)?;
    Ok(path)
}

fn tag_subset(predictions: &Path, subset: f64) -> Result<()> {
    let meta_path = crate::scores::meta_path(predictions);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let mut meta: PredictionMeta = serde_json::from_str(&text)?;
    meta.subset = Some(subset);
    write_text(&meta_path, &(serde_json::to_string_pretty(&meta)? + "\n"))
}

/// Scores prediction files against the holdout. Each file's model name and
/// subset come from its sidecar; files without one are named after the file
/// stem and placed in the 100% column.
pub fn cmd_evaluate(ws: &Workspace, prediction_files: &[PathBuf]) -> Result<Vec<MetricsReport>> {
    let ids = ws.holdout_ids();
    let (holdout, _) = ws.holdout();
    let gold = label_matrix(&holdout, &ws.space);
    prediction_files
        .iter()
        .map(|path| {
            let meta = read_meta(path)?;
            let rule = meta.as_ref().map_or(ThresholdRule::Half, |m| m.threshold);
            let scores = read_predictions(path, &ids, &ws.space, rule)?;
            let counts = confusion(&gold, &scores.predictions())?;
            let model = meta
                .as_ref()
                .map(|m| m.model.clone())
                .unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned());
            let subset = meta.and_then(|m| m.subset).unwrap_or(1.0);
            Ok(compute_metrics(&counts, &model, subset))
        })
        .collect()
}

fn read_meta(path: &Path) -> Result<Option<PredictionMeta>> {
    let meta_path = crate::scores::meta_path(path);
    if !meta_path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    Ok(Some(serde_json::from_str(&text)?))
}

/// Outcome of one (model, subset) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub model: String,
    pub subset: f64,
    pub train_docs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall-clock training and prediction time; kept out of the JSON so
    /// reruns are byte-identical.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    /// True when at least one cell failed.
    pub partial: bool,
    pub holdout_docs: usize,
    pub labels: Vec<String>,
    pub cells: Vec<CellResult>,
}

impl BenchmarkReport {
    pub fn metrics(&self) -> Vec<MetricsReport> {
        self.cells.iter().filter_map(|c| c.metrics.clone()).collect()
    }

    pub fn cell(&self, model: &str, subset: f64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.model == model && (c.subset - subset).abs() < 1e-12)
    }

    /// Seed header, failure notes, then the F1, precision and recall tables.
    pub fn render(&self) -> String {
        let mut out = format!("seed: {}\n", self.seed);
        if self.partial {
            out.push_str("PARTIAL: some cells failed\n");
            for c in self.cells.iter().filter(|c| c.error.is_some()) {
                out.push_str(&format!(
                    "  {} @ {}: {}\n",
                    c.model,
                    fraction_label(c.subset),
                    c.error.as_deref().unwrap_or_default()
                ));
            }
        }
        let metrics = self.metrics();
        for metric in Metric::ALL {
            out.push('\n');
            out.push_str(&render_report(&metrics, metric));
        }
        out
    }
}

/// Worker-thread count from `LEXAREA_WORKERS`, defaulting to 1.
pub fn workers_from_env() -> usize {
    std::env::var("LEXAREA_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn run_cell(config: &ExperimentConfig, ws: &Workspace, spec: &ModelSpec, subset: f64) -> CellResult {
    let start = Instant::now();
    let name = spec.name();
    let mut train_docs = 0;
    let outcome = (|| {
        let (docs, tokens) = ws.training_set(subset)?;
        train_docs = docs.len();
        let model = train_model(spec, &docs, &tokens, &ws.space, config, &ws.tokenizer)?;
        let (holdout, holdout_tokens) = ws.holdout();
        let scores = predict_model(&model, &holdout_tokens)?;
        let path = Layout::new(&config.out).predictions(&name, subset);
        create_parent(&path)?;
        write_predictions(&path, &ws.holdout_ids(), &scores, &ws.space, &name)?;
        tag_subset(&path, subset)?;
        let counts = confusion(&label_matrix(&holdout, &ws.space), &scores.predictions())?;
        Ok::<_, Error>(compute_metrics(&counts, &name, subset))
    })();
    let (metrics, error) = match outcome {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    CellResult {
        model: name,
        subset,
        train_docs,
        metrics,
        error,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Trains every configured model on every subset, scores the shared
/// holdout, and writes prediction files plus JSON and text reports.
///
/// Cells run on up to `workers` threads. A failing cell is recorded and the
/// run continues; the report is then marked partial.
pub fn cmd_benchmark(config: &ExperimentConfig, ws: &Workspace, workers: usize) -> Result<BenchmarkReport> {
    let specs = config.model_specs()?;
    let cells: Vec<(ModelSpec, f64)> = specs
        .iter()
        .flat_map(|s| config.subsets.iter().map(move |&f| (*s, f)))
        .collect();
    let results: Mutex<Vec<Option<CellResult>>> = Mutex::new(vec![None; cells.len()]);
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, cells.len().max(1)) {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some((spec, subset)) = cells.get(i) else { break };
                let result = run_cell(config, ws, spec, *subset);
                results.lock().unwrap()[i] = Some(result);
            });
        }
    });
    let cells: Vec<CellResult> = results.into_inner().unwrap().into_iter().flatten().collect();
    let report = BenchmarkReport {
        seed: config.seed,
        partial: cells.iter().any(|c| c.error.is_some()),
        holdout_docs: ws.manifest.holdout.len(),
        labels: ws.space.labels.clone(),
        cells,
    };

    let layout = Layout::new(&config.out);
    write_text(&layout.report_json(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write_text(&layout.report_text(), &report.render())?;
    let mut outputs = vec![layout.report_json(), layout.report_text()];
    outputs.extend(
        report
            .cells
            .iter()
            .filter(|c| c.error.is_none())
            .map(|c| layout.predictions(&c.model, c.subset)),
    );
    let outputs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    let mut inputs = vec![layout.corpus(), layout.labels(), layout.split()];
    inputs.extend(config.embeddings.clone().filter(|p| p.exists()));
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    StageManifest::new("benchmark", config.seed, &inputs, &outputs)?.write(layout.stage_manifest("benchmark"))?;
    Ok(report)
}

/// Fits LSA on the full training subset and lists the top terms of the
/// first `n_topics` topics, one topic per line.
pub fn cmd_topics(
    config: &ExperimentConfig,
    ws: &Workspace,
    k: usize,
    n_topics: usize,
    n_terms: usize,
) -> Result<String> {
    let (docs, tokens) = ws.training_set(1.0)?;
    let y = label_matrix(&docs, &ws.space);
    let model = LsaClassifier::fit(&tokens, &y, config.lsa.config(k, config.seed))?;
    let mut out = format!("seed: {}\n", config.seed);
    for t in 0..n_topics.min(model.topics.k) {
        let terms = top_topic_terms(&model.topics, &model.vocab, t, n_terms)?;
        let words: Vec<&str> = terms.iter().map(|(w, _)| w.as_str()).collect();
        out.push_str(&format!("Topic {}: {}\n", t + 1, words.join(", ")));
    }
    Ok(out)
}
