//! Tokenization, vocabulary fitting and sublinear TF-IDF.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Lowercase tokens of one document, in document order.
pub type TokenStream = Vec<String>;

/// Built-in English stopwords.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "also",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "done",
    "down",
    "during",
    "each",
    "either",
    "else",
    "even",
    "ever",
    "every",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "however",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "least",
    "less",
    "may",
    "me",
    "might",
    "more",
    "most",
    "much",
    "must",
    "my",
    "myself",
    "neither",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "often",
    "on",
    "once",
    "only",
    "or",
    "other",
    "others",
    "otherwise",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "per",
    "rather",
    "same",
    "she",
    "should",
    "since",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "thereby",
    "therefore",
    "these",
    "they",
    "this",
    "those",
    "though",
    "through",
    "thus",
    "to",
    "too",
    "under",
    "until",
    "up",
    "upon",
    "us",
    "very",
    "was",
    "we",
    "were",
    "what",
    "whatever",
    "when",
    "where",
    "whereas",
    "whether",
    "which",
    "while",
    "who",
    "whom",
    "whose",
    "why",
    "will",
    "with",
    "within",
    "without",
    "would",
    "yet",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// Reads a stopword file with one token per line. Blank lines are ignored.
pub fn read_stopwords(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

/// Splits on non-alphanumeric characters, lowercases, drops stopwords and
/// single-character tokens.
pub fn tokenize(text: &str, stopwords: &HashSet<String>) -> TokenStream {
    Tokenizer::new(stopwords.clone()).tokenize(text)
}

/// Token post-processing hook, applied after lowercasing and before the
/// stopword and length filters.
pub type TokenNormalizer = Arc<dyn Fn(&str) -> String + Send + Sync>;

#[derive(Clone)]
pub struct Tokenizer {
    pub stopwords: HashSet<String>,
    pub normalizer: Option<TokenNormalizer>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new(default_stopwords())
    }
}

impl std::fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tokenizer")
            .field("stopwords", &self.stopwords.len())
            .field("normalizer", &self.normalizer.is_some())
            .finish()
    }
}

impl Tokenizer {
    pub fn new(stopwords: HashSet<String>) -> Self {
        Self {
            stopwords,
            normalizer: None,
        }
    }

    pub fn with_normalizer(mut self, normalizer: TokenNormalizer) -> Self {
        self.normalizer = Some(normalizer);
        self
    }

    pub fn tokenize(&self, text: &str) -> TokenStream {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| {
                let lower = t.to_lowercase();
                match &self.normalizer {
                    Some(f) => f(&lower),
                    None => lower,
                }
            })
            .filter(|t| t.chars().count() >= 2 && !self.stopwords.contains(t))
            .collect()
    }
}

/// Term ↔ index bijection with document frequencies.
///
/// Indices follow rank order: most frequent term first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    terms: Vec<String>,
    term_to_index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    size_cap: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    /// Number of documents the vocabulary was fitted on.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn size_cap(&self) -> usize {
        self.size_cap
    }

    /// Smoothed inverse document frequency: `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        smoothed_idf(self.n_docs, self.doc_freq[index])
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct VocabularyFile {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    size_cap: usize,
}

impl From<VocabularyFile> for Vocabulary {
    fn from(f: VocabularyFile) -> Self {
        let term_to_index = f.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            terms: f.terms,
            term_to_index,
            doc_freq: f.doc_freq,
            n_docs: f.n_docs,
            size_cap: f.size_cap,
        }
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        Self {
            terms: v.terms,
            doc_freq: v.doc_freq,
            n_docs: v.n_docs,
            size_cap: v.size_cap,
        }
    }
}

pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Keeps the `size_cap` terms with the highest collection frequency, ties
/// broken lexicographically.
pub fn fit_vocabulary(docs: &[TokenStream], size_cap: usize) -> Result<Vocabulary> {
    let mut collection: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for tok in doc {
            let entry = collection.entry(tok.as_str()).or_default();
            entry.0 += 1;
            if seen.insert(tok.as_str()) {
                entry.1 += 1;
            }
        }
    }
    if collection.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let mut ranked: Vec<(&str, (usize, usize))> = collection.into_iter().collect();
    // BTreeMap iteration is already lexicographic; a stable sort keeps that
    // order among equal frequencies.
    ranked.sort_by_key(|(_, (tf, _))| std::cmp::Reverse(*tf));
    ranked.truncate(size_cap);
    let terms: Vec<String> = ranked.iter().map(|(t, _)| t.to_string()).collect();
    let doc_freq = ranked.iter().map(|(_, (_, df))| *df).collect();
    let term_to_index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(Vocabulary {
        terms,
        term_to_index,
        doc_freq,
        n_docs: docs.len(),
        size_cap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TfidfOptions {
    pub sublinear: bool,
    pub l2_normalize: bool,
}

impl Default for TfidfOptions {
    fn default() -> Self {
        Self {
            sublinear: true,
            l2_normalize: true,
        }
    }
}

/// TF-IDF document-term matrix. Out-of-vocabulary tokens are ignored.
pub fn tfidf_transform(docs: &[TokenStream], vocab: &Vocabulary, options: TfidfOptions) -> SparseMatrix {
    let idf: Vec<f64> = (0..vocab.len()).map(|t| vocab.idf(t)).collect();
    let rows = docs
        .iter()
        .map(|doc| {
            let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
            for tok in doc {
                if let Some(t) = vocab.index(tok) {
                    *tf.entry(t).or_default() += 1;
                }
            }
            let mut row: Vec<(usize, f64)> = tf
                .into_iter()
                .map(|(t, count)| {
                    let count = count as f64;
                    let tf = if options.sublinear { 1.0 + count.ln() } else { count };
                    (t, tf * idf[t])
                })
                .collect();
            if options.l2_normalize {
                let norm = row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for (_, w) in &mut row {
                        *w /= norm;
                    }
                }
            }
            row
        })
        .collect();
    SparseMatrix::from_rows(vocab.len(), rows).expect("vocabulary indices are in range")
}
