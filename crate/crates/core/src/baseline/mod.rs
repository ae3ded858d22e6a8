//! Label-frequency dummy classifier and keyword-count classifier.

mod matcher;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

pub use matcher::PhraseAutomaton;

use crate::corpus::{Document, LabelSpace, SubLabelIndex};
use crate::scores::{ScoreMatrix, ThresholdRule};
use crate::text::{TokenStream, Tokenizer};

/// Stopwords applied to label-name unigrams when building associated terms.
pub const LABEL_STOPWORDS: &[&str] = &["and", "law", "of", "non", "others"];

/// Thresholds swept for the keyword-count baseline.
pub const COUNT_THRESHOLDS: &[usize] = &[1, 5, 10, 25, 35];
pub const DEFAULT_COUNT_THRESHOLD: usize = 25;

pub fn label_stopwords() -> HashSet<String> {
    LABEL_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// Predicts, for every document, the labels whose training frequency is at
/// least `1 / |labels|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DummyModel {
    pub predicted_labels: BTreeSet<usize>,
    pub threshold: f64,
    pub n_labels: usize,
}

pub fn fit_dummy(train_docs: &[Document], space: &LabelSpace) -> DummyModel {
    let n_labels = space.len();
    let mut counts = vec![0usize; n_labels];
    for d in train_docs {
        for &l in &d.final_labels {
            counts[l] += 1;
        }
    }
    let total = train_docs.len();
    // count / total >= 1 / n_labels, compared exactly in integers
    let predicted_labels = (0..n_labels)
        .filter(|&l| total > 0 && counts[l] * n_labels >= total)
        .collect();
    DummyModel {
        predicted_labels,
        threshold: 1.0 / n_labels as f64,
        n_labels,
    }
}

pub fn predict_dummy(model: &DummyModel, n_docs: usize) -> ScoreMatrix {
    let mut scores = ScoreMatrix::zeros(n_docs, model.n_labels, ThresholdRule::Half);
    for d in 0..n_docs {
        for &l in &model.predicted_labels {
            scores.set(d, l, 1.0);
        }
    }
    scores
}

/// Per-label phrases, each a non-empty sequence of tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociatedTerms {
    pub per_label: Vec<BTreeSet<Vec<String>>>,
}

/// Sub-label phrases of each label plus the label name's own unigrams
/// (split on underscores) that are not in `custom_stopwords`.
///
/// Phrases are run through `tokenizer` so they line up with the tokenized
/// documents they are matched against; a phrase that tokenizes to nothing
/// is dropped.
pub fn build_associated_terms(
    sub_index: &SubLabelIndex,
    space: &LabelSpace,
    custom_stopwords: &HashSet<String>,
    tokenizer: &Tokenizer,
) -> AssociatedTerms {
    let per_label = (0..space.len())
        .map(|l| {
            let mut phrases = BTreeSet::new();
            if let Some(subs) = sub_index.get(l) {
                for phrase in subs {
                    let toks = tokenizer.tokenize(phrase);
                    if !toks.is_empty() {
                        phrases.insert(toks);
                    }
                }
            }
            for unigram in space.name(l).split('_') {
                let unigram = unigram.to_lowercase();
                if unigram.is_empty() || custom_stopwords.contains(&unigram) {
                    continue;
                }
                let toks = tokenizer.tokenize(&unigram);
                if !toks.is_empty() {
                    phrases.insert(toks);
                }
            }
            phrases
        })
        .collect();
    AssociatedTerms { per_label }
}

/// Keyword-count classifier compiled into one automaton over all phrases.
#[derive(Debug, Clone)]
pub struct CountMatcher {
    automaton: PhraseAutomaton,
    /// phrase id → labels that own it
    owners: Vec<Vec<usize>>,
    n_labels: usize,
}

impl CountMatcher {
    pub fn new(terms: &AssociatedTerms) -> Self {
        let mut phrases: Vec<Vec<String>> = Vec::new();
        let mut owners: Vec<Vec<usize>> = Vec::new();
        for (label, set) in terms.per_label.iter().enumerate() {
            for phrase in set {
                match phrases.iter().position(|p| p == phrase) {
                    Some(i) => owners[i].push(label),
                    None => {
                        phrases.push(phrase.clone());
                        owners.push(vec![label]);
                    }
                }
            }
        }
        Self {
            automaton: PhraseAutomaton::new(&phrases),
            owners,
            n_labels: terms.per_label.len(),
        }
    }

    /// Total (non-unique) associated-term occurrences per label.
    pub fn label_counts(&self, tokens: &[String]) -> Vec<usize> {
        let mut out = vec![0; self.n_labels];
        for (phrase, n) in self.automaton.count(tokens).into_iter().enumerate() {
            for &l in &self.owners[phrase] {
                out[l] += n;
            }
        }
        out
    }

    pub fn predict(&self, docs: &[TokenStream], m: usize) -> ScoreMatrix {
        let mut scores = ScoreMatrix::zeros(docs.len(), self.n_labels, ThresholdRule::Half);
        for (d, doc) in docs.iter().enumerate() {
            for (l, n) in self.label_counts(doc).into_iter().enumerate() {
                if n >= m {
                    scores.set(d, l, 1.0);
                }
            }
        }
        scores
    }
}

/// Predicts a label when its associated terms occur at least `m` times.
pub fn count_match_predict(docs: &[TokenStream], terms: &AssociatedTerms, m: usize) -> ScoreMatrix {
    assert!(m >= 1, "count threshold must be at least 1");
    CountMatcher::new(terms).predict(docs, m)
}
