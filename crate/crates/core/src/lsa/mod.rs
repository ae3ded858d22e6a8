//! Latent semantic analysis features with a one-vs-rest linear SVM.

mod svd;
mod svm;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use svd::{fit_truncated_svd, residual, LsaModel, SvdOptions, NUMERICAL_ZERO};
pub use svm::{predict_linsvm, train_binary, train_ovr_linsvm, BinarySvm, LinSvmOvr, SvmOptions, SvmTrace};

use crate::error::{Error, Result};
use crate::scores::ScoreMatrix;
use crate::sparse::SparseMatrix;
use crate::text::{fit_vocabulary, tfidf_transform, TfidfOptions, TokenStream, Vocabulary};

/// Topic counts used for the `lsa_100` and `lsa_250` models.
pub const TOPIC_PRESETS: [usize; 2] = [100, 250];

/// Doc-topic weights `X V`, each nonzero row scaled to unit length.
pub fn project_normalize(x: &SparseMatrix, model: &LsaModel) -> Result<DMatrix<f64>> {
    if x.n_cols() != model.n_terms() {
        return Err(Error::shape(format!("{} terms", model.n_terms()), x.n_cols()));
    }
    let mut z = x.mul_dense(&model.term_topic);
    for mut row in z.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(z)
}

/// The `n` terms with the largest absolute loading on `topic`, sign kept.
pub fn top_topic_terms(model: &LsaModel, vocab: &Vocabulary, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
    if topic >= model.k {
        return Err(Error::InvalidArgument(format!(
            "topic {topic} out of range (k = {})",
            model.k
        )));
    }
    let col = model.topic(topic);
    let mut order: Vec<usize> = (0..col.len()).collect();
    order.sort_by(|&a, &b| col[b].abs().total_cmp(&col[a].abs()).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(n)
        .map(|t| (vocab.term(t).to_string(), col[t]))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsaConfig {
    pub k: usize,
    pub vocab_cap: usize,
    pub sublinear_tf: bool,
    pub svd: SvdOptions,
    pub svm: SvmOptions,
    pub seed: u64,
}

impl Default for LsaConfig {
    fn default() -> Self {
        Self {
            k: 250,
            vocab_cap: usize::MAX,
            sublinear_tf: true,
            svd: SvdOptions {
                tol: 1e-6,
                max_power_iters: 300,
                ..SvdOptions::default()
            },
            svm: SvmOptions::default(),
            seed: 36,
        }
    }
}

/// TF-IDF → truncated SVD → normalization → OVR linear SVM, refit per
/// training subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaClassifier {
    pub config: LsaConfig,
    pub vocab: Vocabulary,
    pub topics: LsaModel,
    pub svm: LinSvmOvr,
}

impl LsaClassifier {
    /// Fits on tokenized training documents and their gold label rows.
    ///
    /// When the training matrix is too small for `config.k` topics the topic
    /// count is reduced to `min(n_docs, n_terms) - 1`; `topics.k` records the
    /// value used.
    pub fn fit(docs: &[TokenStream], y: &[Vec<bool>], config: LsaConfig) -> Result<Self> {
        let vocab = fit_vocabulary(docs, config.vocab_cap)?;
        let x = tfidf_transform(docs, &vocab, Self::tfidf_options(&config));
        let max_k = x.n_rows().min(x.n_cols()).saturating_sub(1);
        if max_k == 0 {
            return Err(Error::InvalidArgument("training matrix too small for LSA".into()));
        }
        let topics = fit_truncated_svd(&x, config.k.min(max_k), config.seed, config.svd)?;
        let z = project_normalize(&x, &topics)?;
        let (svm, _) = train_ovr_linsvm(&z, y, config.svm)?;
        Ok(Self {
            config,
            vocab,
            topics,
            svm,
        })
    }

    fn tfidf_options(config: &LsaConfig) -> TfidfOptions {
        TfidfOptions {
            sublinear: config.sublinear_tf,
            l2_normalize: true,
        }
    }

    pub fn features(&self, docs: &[TokenStream]) -> Result<DMatrix<f64>> {
        let x = tfidf_transform(docs, &self.vocab, Self::tfidf_options(&self.config));
        project_normalize(&x, &self.topics)
    }

    pub fn predict(&self, docs: &[TokenStream]) -> Result<ScoreMatrix> {
        predict_linsvm(&self.svm, &self.features(docs)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_model() -> (SparseMatrix, LsaModel) {
        let x = SparseMatrix::from_rows(2, vec![vec![(0, 3.0)], vec![(1, 1.0)]]).unwrap();
        let m = fit_truncated_svd(&x, 1, 36, SvdOptions::default()).unwrap();
        (x, m)
    }

    fn vocab(terms: &[&str]) -> Vocabulary {
        let docs: Vec<TokenStream> = vec![terms.iter().map(|s| s.to_string()).collect()];
        fit_vocabulary(&docs, 100).unwrap()
    }

    #[test]
    fn one_hot_projects_to_unit_topic() {
        let (_, m) = diag_model();
        let doc = SparseMatrix::from_rows(2, vec![vec![(0, 5.0)], vec![]]).unwrap();
        let z = project_normalize(&doc, &m).unwrap();
        assert!((z[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(z[(1, 0)], 0.0);
    }

    #[test]
    fn top_terms_of_diagonal() {
        let (_, m) = diag_model();
        let v = vocab(&["first", "second"]);
        let top = top_topic_terms(&m, &v, 0, 1).unwrap();
        assert_eq!(top[0].0, "first");
        assert_eq!(top_topic_terms(&m, &v, 0, 10).unwrap().len(), 2);
        assert!(top_topic_terms(&m, &v, 1, 1).is_err());
    }

    #[test]
    fn width_mismatch_rejected() {
        let (_, m) = diag_model();
        assert!(project_normalize(&SparseMatrix::zeros(1, 3), &m).is_err());
    }
}
