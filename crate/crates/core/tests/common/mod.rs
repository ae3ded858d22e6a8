#![allow(dead_code)]

use std::collections::BTreeSet;

use lexarea::corpus::{finalize_label_space, normalize_labels, Document, LabelMapping, LabelSpace};
use lexarea::embed::{EmbeddingTable, Mlp, MlpClassifier, PooledEncoderConfig, PoolingMode, Sequence, TextCnn};
use lexarea::eval::{LabelCounts, Prf};
use lexarea::experiment::{synth_corpus, SynthOptions};
use lexarea::sparse::SparseMatrix;
use lexarea::text::fit_vocabulary;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bool_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, p: f64) -> Vec<Vec<bool>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random::<f64>() < p).collect())
        .collect()
}

/// Per-cell tally and textbook formulas, written without the library.
pub struct CellOracle {
    pub per_label: Vec<(f64, f64, f64)>,
    pub macro_prf: (f64, f64, f64),
    pub micro_prf: (f64, f64, f64),
}

pub fn metrics_oracle(gold: &[Vec<bool>], pred: &[Vec<bool>]) -> CellOracle {
    let n_labels = gold.first().map_or(0, Vec::len);
    let mut tp = vec![0u64; n_labels];
    let mut fp = vec![0u64; n_labels];
    let mut fn_ = vec![0u64; n_labels];
    for d in 0..gold.len() {
        for l in 0..n_labels {
            match (gold[d][l], pred[d][l]) {
                (true, true) => tp[l] += 1,
                (false, true) => fp[l] += 1,
                (true, false) => fn_[l] += 1,
                _ => {}
            }
        }
    }
    let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    // F1 from counts: 2tp / (2tp + fp + fn), zero when undefined
    let prf = |tp: u64, fp: u64, fn_: u64| (div(tp, tp + fp), div(tp, tp + fn_), div(2 * tp, 2 * tp + fp + fn_));
    let per_label: Vec<(f64, f64, f64)> = (0..n_labels).map(|l| prf(tp[l], fp[l], fn_[l])).collect();
    let n = n_labels.max(1) as f64;
    let macro_prf = (
        per_label.iter().map(|p| p.0).sum::<f64>() / n,
        per_label.iter().map(|p| p.1).sum::<f64>() / n,
        per_label.iter().map(|p| p.2).sum::<f64>() / n,
    );
    let micro_prf = prf(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    CellOracle {
        per_label,
        macro_prf,
        micro_prf,
    }
}

pub fn prf_distance(a: &Prf, b: (f64, f64, f64)) -> f64 {
    (a.precision - b.0)
        .abs()
        .max((a.recall - b.1).abs())
        .max((a.f1 - b.2).abs())
}

pub fn counts(tp: u64, fp: u64, fn_: u64) -> LabelCounts {
    LabelCounts { tp, fp, fn_ }
}

/// Occurrences of `phrase` in `tokens` by sliding-window comparison,
/// overlapping matches included.
pub fn naive_count(tokens: &[String], phrase: &[String]) -> usize {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return 0;
    }
    tokens.windows(phrase.len()).filter(|w| *w == phrase).count()
}

pub fn random_sparse(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> SparseMatrix {
    let mut entries = vec![Vec::new(); rows];
    for row in &mut entries {
        for c in 0..cols {
            if rng.random::<f64>() < density {
                row.push((c, rng.random_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrix::from_rows(cols, entries).unwrap()
}

/// Singular values of `x` from the eigenvalues of the dense Gram matrix,
/// descending.
pub fn gram_singular_values(x: &DMatrix<f64>) -> Vec<f64> {
    let gram = x.transpose() * x;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Relative error with magnitudes floored at 1e-5, so components that are
/// zero analytically are compared in absolute terms.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-5))
        .fold(0.0, f64::max)
}

pub const FD_STEP: f64 = 1e-5;

fn flatten(tensors: Vec<&mut Vec<f64>>) -> Vec<f64> {
    tensors.into_iter().flat_map(|t| t.to_vec()).collect()
}

// central differences over every scalar reachable through `tensors`
fn central_differences<M: Clone>(
    model: &M,
    tensors: impl Fn(&mut M) -> Vec<&mut Vec<f64>>,
    loss: impl Fn(&M) -> f64,
) -> Vec<f64> {
    let mut probe = model.clone();
    let shapes: Vec<usize> = tensors(&mut probe).iter().map(|t| t.len()).collect();
    let mut out = Vec::new();
    for (t, &len) in shapes.iter().enumerate() {
        for i in 0..len {
            let mut plus = model.clone();
            tensors(&mut plus)[t][i] += FD_STEP;
            let mut minus = model.clone();
            tensors(&mut minus)[t][i] -= FD_STEP;
            out.push((loss(&plus) - loss(&minus)) / (2.0 * FD_STEP));
        }
    }
    out
}

/// Gradient check of the MLP classifier on a random 5-feature, 3-label
/// instance; returns the max relative error.
pub fn mlp_gradient_check(seed: u64) -> f64 {
    let mut r = rng(seed);
    let model = MlpClassifier {
        mlp: Mlp::new(&[5, 6, 4, 3], seed),
        pos_weights: (0..3).map(|_| r.random_range(0.5..5.0)).collect(),
        history: vec![],
    };
    let x: Vec<f64> = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
    let y: Vec<bool> = (0..3).map(|_| r.random::<bool>()).collect();
    let (_, mut grads) = model.loss_and_grads(&x, &y);
    let analytic = flatten(grads.tensors_mut());
    let numeric = central_differences(&model, |m| m.mlp.tensors_mut(), |m| m.loss_and_grads(&x, &y).0);
    max_relative_error(&analytic, &numeric)
}

/// Gradient check of embeddings → conv → MLP on a random 7-token document
/// with one out-of-vocabulary token; returns the max relative error.
pub fn conv_gradient_check(seed: u64) -> f64 {
    let mut r = rng(seed);
    let words: Vec<String> = ["alpha", "beta", "gamma", "delta", "eps"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let vocab = fit_vocabulary(std::slice::from_ref(&words), 100).unwrap();
    let table = EmbeddingTable::random(&vocab, 4, seed);
    let config = PooledEncoderConfig {
        filter_widths: vec![2, 3],
        filters_per_width: 3,
        ..PooledEncoderConfig::new(PoolingMode::Conv)
    };
    let mut model = TextCnn::new(table, &config, &[5], 3, seed);
    model.pos_weights = (0..3).map(|_| r.random_range(0.5..5.0)).collect();
    // nonzero biases keep every filter away from the ReLU kink
    for t in model.conv.tensors_mut().into_iter().skip(1).step_by(2) {
        t.iter_mut().for_each(|b| *b = r.random_range(0.05..0.2));
    }
    let mut tokens: Vec<String> = (0..6).map(|_| words[r.random_range(0..words.len())].clone()).collect();
    tokens.insert(3, "unseen".to_string());
    let seq = Sequence::new(&tokens, &model.table, 100);
    let y: Vec<bool> = (0..3).map(|_| r.random::<bool>()).collect();

    let (_, mut grads) = model.loss_and_grads(&seq, &y);
    let mut analytic = grads.embeddings.clone();
    analytic.extend(flatten(grads.conv.tensors_mut()));
    analytic.extend(flatten(grads.mlp.tensors_mut()));
    let numeric = central_differences(
        &model,
        |m| {
            let TextCnn { table, conv, mlp, .. } = m;
            let mut t = vec![table.vectors_mut()];
            t.extend(conv.tensors_mut());
            t.extend(mlp.tensors_mut());
            t
        },
        |m| m.loss_and_grads(&seq, &y).0,
    );
    max_relative_error(&analytic, &numeric)
}

/// Synthetic corpus with raw labels resolved and truncated to `top_k`.
pub fn finalized_synth(n_docs: usize, n_labels: usize, top_k: usize, seed: u64) -> (LabelSpace, Vec<Document>) {
    let corpus = synth_corpus(&SynthOptions::new(n_docs, n_labels, seed)).unwrap();
    let mapping = LabelMapping::new(corpus.mapping.clone()).unwrap();
    finalize_label_space(&normalize_labels(&corpus.docs, &mapping), top_k).unwrap()
}

pub fn ids_with_label(docs: &[Document], label: usize) -> BTreeSet<String> {
    docs.iter()
        .filter(|d| d.final_labels.contains(&label))
        .map(|d| d.id.clone())
        .collect()
}
