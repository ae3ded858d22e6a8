//! Feed-forward classifier with per-label sigmoid outputs, class-weighted
//! binary cross-entropy, and an Adam optimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::dot;

/// Upper bound on the positive-class loss weight.
pub const POS_WEIGHT_CAP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    /// `n_out × n_in`, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    fn glorot(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        Self {
            n_in,
            n_out,
            w: (0..n_in * n_out).map(|_| rng.random_range(-limit..limit)).collect(),
            b: vec![0.0; n_out],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| self.b[o] + dot(&self.w[o * self.n_in..(o + 1) * self.n_in], x))
            .collect()
    }

    fn zeros_like(&self) -> Self {
        Self {
            n_in: self.n_in,
            n_out: self.n_out,
            w: vec![0.0; self.w.len()],
            b: vec![0.0; self.b.len()],
        }
    }
}

/// Dense layers with ReLU between them; the last layer emits one logit per
/// label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer (post-ReLU for hidden layers).
    inputs: Vec<Vec<f64>>,
}

impl Mlp {
    /// `sizes = [n_in, hidden…, n_out]`.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            layers: sizes.windows(2).map(|w| Dense::glorot(w[0], w[1], &mut rng)).collect(),
        }
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().unwrap().n_out
    }

    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, MlpCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(&h);
            if i + 1 < self.layers.len() {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            inputs.push(std::mem::replace(&mut h, z));
        }
        (h, MlpCache { inputs })
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).0
    }

    /// Accumulates parameter gradients given `∂L/∂logits`; returns `∂L/∂x`.
    pub fn backward(&self, cache: &MlpCache, d_logits: &[f64], grads: &mut Mlp) -> Vec<f64> {
        let mut delta = d_logits.to_vec();
        for (i, (layer, g)) in self.layers.iter().zip(grads.layers.iter_mut()).enumerate().rev() {
            let input = &cache.inputs[i];
            let mut d_in = vec![0.0; layer.n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.b[o] += d;
                let row = o * layer.n_in;
                for j in 0..layer.n_in {
                    g.w[row + j] += d * input[j];
                    d_in[j] += d * layer.w[row + j];
                }
            }
            if i > 0 {
                // input of layer i is ReLU output of layer i-1
                for (dj, &a) in d_in.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *dj = 0.0;
                    }
                }
            }
            delta = d_in;
        }
        delta
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w, &mut l.b]).collect()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Class-weighted binary cross-entropy with logits, summed over labels, and
/// its gradient with respect to the logits.
///
/// `loss = Σ_l w⁺_l · y_l · softplus(−z_l) + (1 − y_l) · softplus(z_l)`
pub fn weighted_bce(logits: &[f64], targets: &[bool], pos_weights: &[f64]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = logits
        .iter()
        .zip(targets)
        .zip(pos_weights)
        .map(|((&z, &y), &w)| {
            if y {
                loss += w * softplus(-z);
                w * (sigmoid(z) - 1.0)
            } else {
                loss += softplus(z);
                sigmoid(z)
            }
        })
        .collect();
    (loss, grad)
}

/// `(N − n_l) / n_l` capped at [`POS_WEIGHT_CAP`]; labels without positives
/// get the cap.
pub fn positive_weights(y: &[Vec<bool>], cap: f64) -> Vec<f64> {
    let n = y.len() as f64;
    let n_labels = y.first().map_or(0, Vec::len);
    (0..n_labels)
        .map(|l| {
            let pos = y.iter().filter(|r| r[l]).count() as f64;
            if pos == 0.0 {
                cap
            } else {
                ((n - pos) / pos).min(cap)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-7,
        }
    }
}

/// First/second moment estimates for a list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        Self {
            config,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: Vec<&mut Vec<f64>>, grads: Vec<&mut Vec<f64>>) {
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(10.0) > 0.9999);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn bce_at_zero_logit_is_ln2() {
        let (loss, grad) = weighted_bce(&[0.0, 0.0], &[true, false], &[1.0, 1.0]);
        assert!((loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.5, 0.5]);
    }

    #[test]
    fn positive_weights_cap_and_monotonicity() {
        let mk = |pos: usize, n: usize| (0..n).map(|i| vec![i < pos]).collect::<Vec<_>>();
        assert_eq!(positive_weights(&mk(1, 100), 30.0), vec![30.0]);
        assert_eq!(positive_weights(&mk(0, 10), 30.0), vec![30.0]);
        assert_eq!(positive_weights(&mk(25, 100), 30.0), vec![3.0]);
        assert_eq!(positive_weights(&mk(10, 10), 30.0), vec![0.0]);
        let mut prev = f64::INFINITY;
        for pos in 1..=100 {
            let w = positive_weights(&mk(pos, 100), 30.0)[0];
            assert!((0.0..=30.0).contains(&w) && w <= prev);
            prev = w;
        }
    }
}
