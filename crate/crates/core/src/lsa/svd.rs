use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvdOptions {
    /// Extra columns in the random sketch beyond `k`.
    pub oversample: usize,
    /// Power iterations always performed, converged or not.
    pub min_power_iters: usize,
    pub max_power_iters: usize,
    /// Convergence threshold on the relative change of each of the top-k
    /// singular values between consecutive power iterations.
    pub tol: f64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            oversample: 10,
            min_power_iters: 4,
            max_power_iters: 500,
            tol: 1e-12,
        }
    }
}

/// Rank-k truncated SVD `X ≈ U S Vᵀ`, keeping `S` and `V` (the term-topic
/// loadings).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaModel {
    pub k: usize,
    pub seed: u64,
    pub singular_values: Vec<f64>,
    /// n_terms × k, columns orthonormal.
    pub term_topic: DMatrix<f64>,
    pub iterations: usize,
}

impl LsaModel {
    pub fn n_terms(&self) -> usize {
        self.term_topic.nrows()
    }

    pub fn topic(&self, t: usize) -> nalgebra::DVectorView<'_, f64> {
        self.term_topic.column(t)
    }
}

fn orthonormalize(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Singular values below this fraction of the largest are treated as zero
/// by the convergence test.
pub const NUMERICAL_ZERO: f64 = 1e-10;

/// Descending singular values and right singular vectors of a small dense
/// matrix.
fn sorted_svd(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| v_t.row(i).transpose())
            .collect::<Vec<DVector<f64>>>(),
    );
    (values, v)
}

/// Randomized subspace iteration. A seeded sketch `X Ω` is refined by
/// alternating multiplications with `Xᵀ` and `X` (re-orthonormalizing each
/// time) until the top-k singular values stop moving.
pub fn fit_truncated_svd(x: &SparseMatrix, k: usize, seed: u64, options: SvdOptions) -> Result<LsaModel> {
    let (n_rows, n_cols) = (x.n_rows(), x.n_cols());
    let min_dim = n_rows.min(n_cols);
    if k == 0 || k >= min_dim {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must satisfy 1 <= k < min(n_rows, n_cols) = {min_dim}"
        )));
    }
    if x.nnz() == 0 {
        return Err(Error::InvalidArgument("cannot factor an all-zero matrix".into()));
    }
    let width = (k + options.oversample).min(min_dim);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n_cols, width, |_, _| rng.random_range(-1.0..1.0));
    let mut q = orthonormalize(x.mul_dense(&omega));

    let mut previous: Option<Vec<f64>> = None;
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    let (q_right, r) = loop {
        let qr = x.t_mul_dense(&q).qr();
        let (q_right, r) = (qr.q(), qr.r());
        let values = {
            let mut s: Vec<f64> = r.singular_values().iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            s.truncate(k);
            s
        };
        if let Some(prev) = &previous {
            // values this far below σ₀ are numerically zero and only jitter
            let zero = values[0] * NUMERICAL_ZERO;
            change = values
                .iter()
                .zip(prev)
                .filter(|(a, b)| a.max(**b) > zero)
                .map(|(a, b)| (a - b).abs() / a)
                .fold(0.0, f64::max);
        }
        if iterations >= options.min_power_iters && change <= options.tol {
            break (q_right, r);
        }
        if iterations >= options.max_power_iters {
            let model = finish(&q_right, &r, k, seed, iterations);
            return Err(Error::NoConvergence {
                iterations,
                change,
                residual: residual(x, &model),
            });
        }
        previous = Some(values);
        q = orthonormalize(x.mul_dense(&q_right));
        iterations += 1;
    };
    Ok(finish(&q_right, &r, k, seed, iterations))
}

// With Xᵀ Q = Q₂ R we have Qᵀ X = Rᵀ Q₂ᵀ; the SVD Rᵀ = W Σ Mᵀ gives the
// right singular vectors V = Q₂ M.
fn finish(q_right: &DMatrix<f64>, r: &DMatrix<f64>, k: usize, seed: u64, iterations: usize) -> LsaModel {
    let (values, m) = sorted_svd(r.transpose());
    let mut term_topic = (q_right * m).columns(0, k).into_owned();
    for mut col in term_topic.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    LsaModel {
        k,
        seed,
        singular_values: values[..k].to_vec(),
        term_topic,
        iterations,
    }
}

/// Largest `‖Xᵀ X v − σ² v‖ / σ₀²` over the model's topics.
pub fn residual(x: &SparseMatrix, model: &LsaModel) -> f64 {
    let xv = x.mul_dense(&model.term_topic);
    let xtxv = x.t_mul_dense(&xv);
    let scale = model
        .singular_values
        .first()
        .map_or(1.0, |s| s * s)
        .max(f64::MIN_POSITIVE);
    (0..model.k)
        .map(|i| {
            let s2 = model.singular_values[i].powi(2);
            (xtxv.column(i) - model.term_topic.column(i) * s2).norm() / scale
        })
        .fold(0.0, f64::max)
}
