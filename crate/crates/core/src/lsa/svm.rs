//! One-vs-rest linear SVM trained by dual coordinate descent.
//!
//! Each binary problem is the L2-regularized squared-hinge SVM
//!
//! ```text
//! min_w  ½‖w‖² + C Σᵢ max(0, 1 − yᵢ wᵀx̂ᵢ)²
//! ```
//!
//! with `x̂ = [x, 1]`, so the bias is learned as an ordinary (regularized)
//! weight. The solver works on the dual
//!
//! ```text
//! min_α  ½ αᵀ(Q + D)α − Σᵢ αᵢ,   αᵢ ≥ 0,   Qᵢⱼ = yᵢyⱼ x̂ᵢᵀx̂ⱼ,   Dᵢᵢ = 1/(2C)
//! ```
//!
//! where each coordinate update is an exact line minimization, so the dual
//! objective never increases.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scores::{ScoreMatrix, ThresholdRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmOptions {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-4,
            max_iter: 1000,
            seed: 36,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinarySvm {
    pub fn decision(&self, z: &[f64]) -> f64 {
        self.weights.iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinSvmOvr {
    pub models: Vec<BinarySvm>,
    pub n_features: usize,
    pub options: SvmOptions,
}

/// Per-epoch dual objective values and convergence status of one label.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmTrace {
    pub objective: Vec<f64>,
    pub converged: bool,
}

fn row_major(z: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..z.nrows()).map(|i| z.row(i).iter().copied().collect()).collect()
}

/// Trains one binary model; `labels[i]` marks positives.
pub fn train_binary(rows: &[Vec<f64>], labels: &[bool], options: &SvmOptions) -> (BinarySvm, SvmTrace) {
    let n_features = rows.first().map_or(0, Vec::len);
    if !labels.iter().any(|&y| y) {
        let model = BinarySvm {
            weights: vec![0.0; n_features],
            bias: -1.0,
        };
        return (
            model,
            SvmTrace {
                objective: vec![],
                converged: true,
            },
        );
    }

    let diag = 0.5 / options.c;
    let y: Vec<f64> = labels.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
    // squared norms of the augmented rows
    let q_ii: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0 + diag)
        .collect();
    let mut alpha = vec![0.0; rows.len()];
    let mut w = vec![0.0; n_features];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut trace = SvmTrace {
        objective: Vec::new(),
        converged: false,
    };

    for _ in 0..options.max_iter {
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let xi = &rows[i];
            let margin = xi.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + b;
            let grad = y[i] * margin - 1.0 + diag * alpha[i];
            let pg = if alpha[i] == 0.0 { grad.min(0.0) } else { grad };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - grad / q_ii[i]).max(0.0);
                let step = (alpha[i] - old) * y[i];
                for (w, x) in w.iter_mut().zip(xi) {
                    *w += step * x;
                }
                b += step;
            }
        }
        let wnorm = w.iter().map(|v| v * v).sum::<f64>() + b * b;
        let objective = 0.5 * wnorm + 0.5 * diag * alpha.iter().map(|a| a * a).sum::<f64>() - alpha.iter().sum::<f64>();
        trace.objective.push(objective);
        if pg_max - pg_min < options.tol {
            trace.converged = true;
            break;
        }
    }
    (BinarySvm { weights: w, bias: b }, trace)
}

/// Trains one independent binary model per label column of `y`.
///
/// Every label uses the same seed, so a label's model depends only on its own
/// column.
pub fn train_ovr_linsvm(z: &DMatrix<f64>, y: &[Vec<bool>], options: SvmOptions) -> Result<(LinSvmOvr, Vec<SvmTrace>)> {
    if z.nrows() != y.len() {
        return Err(Error::shape(format!("{} label rows", z.nrows()), y.len()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVM features".into()));
    }
    let n_labels = y.first().map_or(0, Vec::len);
    let rows = row_major(z);
    let mut models = Vec::with_capacity(n_labels);
    let mut traces = Vec::with_capacity(n_labels);
    for l in 0..n_labels {
        let labels: Vec<bool> = y.iter().map(|r| r[l]).collect();
        let (m, t) = train_binary(&rows, &labels, &options);
        models.push(m);
        traces.push(t);
    }
    Ok((
        LinSvmOvr {
            models,
            n_features: z.ncols(),
            options,
        },
        traces,
    ))
}

/// Decision values `w·z + b`, thresholded by sign.
pub fn predict_linsvm(model: &LinSvmOvr, z: &DMatrix<f64>) -> Result<ScoreMatrix> {
    if z.ncols() != model.n_features {
        return Err(Error::shape(format!("{} features", model.n_features), z.ncols()));
    }
    let rows = row_major(z);
    let mut scores = ScoreMatrix::zeros(rows.len(), model.models.len(), ThresholdRule::Sign);
    for (d, row) in rows.iter().enumerate() {
        for (l, m) in model.models.iter().enumerate() {
            scores.set(d, l, m.decision(row));
        }
    }
    Ok(scores)
}
