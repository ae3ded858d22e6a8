//! Planted-topic synthetic corpus: every area owns a block of words, and a
//! document's text mixes words from its areas' blocks with shared noise.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::LABEL_STOPWORDS;
use crate::corpus::{normalize_label_name, write_corpus, Document, PATH_DELIMITER};
use crate::error::{Error, Result};
use crate::text::DEFAULT_STOPWORDS;

const AREA_NAMES: &[&str] = &[
    "Contract",
    "Tort",
    "Criminal Law",
    "Civil Procedure",
    "Evidence",
    "Family Law",
    "Companies",
    "Land",
    "Trusts",
    "Equity",
    "Insolvency",
    "Banking",
    "Employment Law",
    "Arbitration",
    "Administrative Law",
    "Constitutional Law",
    "Intellectual Property",
    "Conflict of Laws",
    "Legal Profession",
    "Damages",
    "Succession and Wills",
    "Building and Construction Law",
    "Revenue Law",
    "Criminal Procedure and Sentencing",
    "Road Traffic",
    "Insurance",
    "Shipping",
    "Credit and Security",
    "Restitution",
    "Partnership",
    "Immigration",
    "Landlord and Tenant",
    "Statutory Interpretation",
    "Agency",
    "Sale of Goods",
    "Courts and Jurisdiction",
    "Personal Property",
    "Charities",
    "Commercial Transactions",
    "Financial and Securities Markets",
];

const SYLLABLES: &[&str] = &[
    "ba", "ce", "di", "fo", "gu", "ha", "ke", "li", "mo", "nu", "pa", "re", "si", "to", "vu", "wa", "xe", "yo", "za",
    "bro", "cla", "dre", "fli", "gro", "pla", "tri", "sto", "que", "ven", "dor", "mar", "tal", "rin", "sel",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub n_docs: usize,
    pub n_labels: usize,
    pub seed: u64,
    /// Words owned by each area.
    pub block_words: usize,
    pub noise_words: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Share of a document's tokens drawn from its areas' blocks.
    pub signal_fraction: f64,
    /// Probability that a document gets a second area from its primary's
    /// partners.
    pub co_occurrence: f64,
    /// Probability that a raw label uses an alternative spelling.
    pub alias_rate: f64,
    pub embedding_dim: usize,
}

impl SynthOptions {
    pub fn new(n_docs: usize, n_labels: usize, seed: u64) -> Self {
        Self {
            n_docs,
            n_labels,
            seed,
            block_words: 24,
            noise_words: 600,
            min_tokens: 40,
            max_tokens: 70,
            signal_fraction: 0.35,
            co_occurrence: 0.3,
            alias_rate: 0.15,
            embedding_dim: 50,
        }
    }

    /// Every area appears on at least this many documents.
    pub fn label_floor(&self) -> usize {
        (self.n_docs / (2 * self.n_labels)).clamp(1, 20)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub docs: Vec<Document>,
    /// Display names of the areas, most frequent by construction first.
    pub areas: Vec<String>,
    /// Words planted for each area.
    pub blocks: Vec<Vec<String>>,
    pub noise: Vec<String>,
    /// `{primary: [alternatives]}` over normalized area names.
    pub mapping: BTreeMap<String, Vec<String>>,
    pub embeddings: Vec<(String, Vec<f64>)>,
}

/// Files written by [`SyntheticCorpus::write`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthPaths {
    pub corpus: PathBuf,
    pub mapping: PathBuf,
    pub embeddings: PathBuf,
}

impl SyntheticCorpus {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<SynthPaths> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = SynthPaths {
            corpus: dir.join("corpus.jsonl"),
            mapping: dir.join("mapping.json"),
            embeddings: dir.join("embeddings.txt"),
        };
        write_corpus(&paths.corpus, &self.docs, None)?;
        let mapping = serde_json::to_string_pretty(&self.mapping)? + "\n";
        fs::write(&paths.mapping, mapping).map_err(|e| Error::io(&paths.mapping, e))?;
        let mut text = String::new();
        for (word, v) in &self.embeddings {
            text.push_str(word);
            for x in v {
                let _ = write!(text, " {x:.6}");
            }
            text.push('\n');
        }
        fs::write(&paths.embeddings, text).map_err(|e| Error::io(&paths.embeddings, e))?;
        Ok(paths)
    }
}

fn area_name(i: usize) -> String {
    AREA_NAMES
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("Area {}", i + 1))
}

fn alternative_name(name: &str) -> String {
    match name.strip_suffix(" Law") {
        Some(stem) => stem.to_string(),
        None => format!("{name} Law"),
    }
}

fn pseudo_words(n: usize, rng: &mut ChaCha8Rng, taken: &mut HashSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let word: String = (0..syllables)
            .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
            .collect();
        if taken.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

// index drawn with probability proportional to its weight
fn skewed_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|i| 1.0 / ((i + 1) as f64).powf(s)).collect()
}

fn assign_labels(opts: &SynthOptions, rng: &mut ChaCha8Rng) -> Result<Vec<BTreeSet<usize>>> {
    let weights = zipf_weights(opts.n_labels, 0.5);
    let partners: Vec<[usize; 2]> = (0..opts.n_labels)
        .map(|l| [(l + 1) % opts.n_labels, (l + opts.n_labels / 2) % opts.n_labels])
        .collect();
    let floor = opts.label_floor();
    for _ in 0..10_000 {
        let mut counts = vec![0usize; opts.n_labels];
        let assignment: Vec<BTreeSet<usize>> = (0..opts.n_docs)
            .map(|_| {
                let mut labels = BTreeSet::new();
                let primary = skewed_index(&weights, rng);
                labels.insert(primary);
                if rng.random::<f64>() < opts.co_occurrence {
                    labels.insert(partners[primary][rng.random_range(0..2)]);
                }
                for &l in &labels {
                    counts[l] += 1;
                }
                labels
            })
            .collect();
        if counts.iter().all(|&c| c >= floor) {
            return Ok(assignment);
        }
    }
    Err(Error::InvalidArgument(format!(
        "could not give every one of {} labels {floor} documents",
        opts.n_labels
    )))
}

/// Generates a labelled corpus, an alias mapping, and word vectors in which
/// each area's words cluster around their own centroid.
pub fn synth_corpus(opts: &SynthOptions) -> Result<SyntheticCorpus> {
    if opts.n_labels < 2 || opts.n_docs < opts.n_labels {
        return Err(Error::InvalidArgument(format!(
            "need n_docs ≥ n_labels ≥ 2, got {} docs and {} labels",
            opts.n_docs, opts.n_labels
        )));
    }
    if opts.min_tokens == 0 || opts.min_tokens > opts.max_tokens || opts.block_words < 2 || opts.noise_words == 0 {
        return Err(Error::InvalidArgument("invalid synthetic document shape".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let areas: Vec<String> = (0..opts.n_labels).map(area_name).collect();

    let mut taken: HashSet<String> = DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect();
    // a name word shared by two areas belongs to the first one only
    let name_words: Vec<Vec<String>> = areas
        .iter()
        .map(|a| {
            normalize_label_name(a)
                .split('_')
                .filter(|w| !LABEL_STOPWORDS.contains(w) && w.len() >= 2)
                .filter(|w| taken.insert(w.to_string()))
                .map(str::to_string)
                .collect()
        })
        .collect();
    let blocks: Vec<Vec<String>> = name_words
        .iter()
        .map(|own| {
            let mut block = own.clone();
            block.extend(pseudo_words(opts.block_words, &mut rng, &mut taken));
            block
        })
        .collect();
    let noise = pseudo_words(opts.noise_words, &mut rng, &mut taken);

    let mut mapping = BTreeMap::new();
    let primaries: HashSet<String> = areas.iter().map(|a| normalize_label_name(a)).collect();
    let aliases: Vec<Option<String>> = areas
        .iter()
        .map(|a| {
            let alt = alternative_name(a);
            if primaries.contains(&normalize_label_name(&alt)) {
                return None;
            }
            mapping.insert(normalize_label_name(a), vec![normalize_label_name(&alt)]);
            Some(alt)
        })
        .collect();

    // sub-label phrases: pairs of the area's own planted words
    let sublabels: Vec<Vec<String>> = blocks
        .iter()
        .map(|b| {
            let own = b.len() - opts.block_words;
            (0..3)
                .map(|i| {
                    let w1 = &b[own + 2 * i % opts.block_words];
                    let w2 = &b[own + (2 * i + 1) % opts.block_words];
                    format!("{} {}", capitalize(w1), w2)
                })
                .collect()
        })
        .collect();

    let assignment = assign_labels(opts, &mut rng)?;
    let noise_weights = zipf_weights(noise.len(), 1.0);
    let width = opts.n_docs.to_string().len();
    let docs = assignment
        .iter()
        .enumerate()
        .map(|(d, labels)| {
            let labels: Vec<usize> = labels.iter().copied().collect();
            let n_tokens = rng.random_range(opts.min_tokens..=opts.max_tokens);
            let words: Vec<&str> = (0..n_tokens)
                .map(|_| {
                    if rng.random::<f64>() < opts.signal_fraction {
                        let block = &blocks[labels[rng.random_range(0..labels.len())]];
                        block[rng.random_range(0..block.len())].as_str()
                    } else {
                        noise[skewed_index(&noise_weights, &mut rng)].as_str()
                    }
                })
                .collect();
            let raw_labels = labels
                .iter()
                .map(|&l| {
                    let head = match &aliases[l] {
                        Some(alt) if rng.random::<f64>() < opts.alias_rate => alt.clone(),
                        _ => areas[l].clone(),
                    };
                    let depth = rng.random_range(0..=2);
                    std::iter::once(head)
                        .chain((0..depth).map(|_| sublabels[l][rng.random_range(0..3)].clone()))
                        .collect::<Vec<_>>()
                        .join(PATH_DELIMITER)
                })
                .collect();
            Document::new(format!("doc-{d:0width$}"), sentences(&words, &mut rng), raw_labels)
        })
        .collect();

    let embeddings = synth_embeddings(&blocks, &noise, opts.embedding_dim, &mut rng);
    Ok(SyntheticCorpus {
        docs,
        areas,
        blocks,
        noise,
        mapping,
        embeddings,
    })
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn sentences(words: &[&str], rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < words.len() {
        let n = rng.random_range(6..=12).min(words.len() - i);
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&capitalize(words[i]));
        for w in &words[i + 1..i + n] {
            out.push(' ');
            out.push_str(w);
        }
        out.push('.');
        i += n;
    }
    out
}

fn synth_embeddings(
    blocks: &[Vec<String>],
    noise: &[String],
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    for block in blocks {
        let centroid: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for w in block {
            let v = centroid.iter().map(|c| c + rng.random_range(-0.3..0.3)).collect();
            out.push((w.clone(), v));
        }
    }
    for w in noise {
        out.push((w.clone(), (0..dim).map(|_| rng.random_range(-0.25..0.25)).collect()));
    }
    out
}
