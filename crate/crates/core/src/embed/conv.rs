//! Shallow 1-D convolution over token vectors with ReLU and max-over-time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `filters` kernels of `width` consecutive token vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvGroup {
    pub width: usize,
    pub filters: usize,
    /// `filters × (width · dim)`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvEncoder {
    pub dim: usize,
    pub groups: Vec<ConvGroup>,
}

/// Forward-pass bookkeeping needed by [`ConvEncoder::backward`]: the winning
/// position of every filter, or `None` when the ReLU clipped it to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvCache {
    winners: Vec<Option<usize>>,
}

impl ConvEncoder {
    pub fn new(dim: usize, widths: &[usize], filters: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groups = widths
            .iter()
            .map(|&width| {
                let fan_in = width * dim;
                let limit = (6.0 / (fan_in + width * filters) as f64).sqrt();
                ConvGroup {
                    width,
                    filters,
                    weights: (0..filters * fan_in).map(|_| rng.random_range(-limit..limit)).collect(),
                    bias: vec![0.0; filters],
                }
            })
            .collect();
        Self { dim, groups }
    }

    pub fn output_len(&self) -> usize {
        self.groups.iter().map(|g| g.filters).sum()
    }

    fn max_width(&self) -> usize {
        self.groups.iter().map(|g| g.width).max().unwrap_or(1)
    }

    /// Pads a `len × dim` sequence with zero rows up to the widest filter.
    fn padded<'a>(&self, seq: &'a [f64]) -> std::borrow::Cow<'a, [f64]> {
        let need = self.max_width() * self.dim;
        if seq.len() >= need {
            std::borrow::Cow::Borrowed(seq)
        } else {
            let mut v = seq.to_vec();
            v.resize(need, 0.0);
            std::borrow::Cow::Owned(v)
        }
    }

    pub fn forward(&self, seq: &[f64]) -> (Vec<f64>, ConvCache) {
        let seq = self.padded(seq);
        let len = seq.len() / self.dim;
        let mut out = Vec::with_capacity(self.output_len());
        let mut winners = Vec::with_capacity(self.output_len());
        for g in &self.groups {
            let span = g.width * self.dim;
            let positions = len + 1 - g.width;
            for f in 0..g.filters {
                let kernel = &g.weights[f * span..(f + 1) * span];
                let mut best = f64::NEG_INFINITY;
                let mut best_pos = 0;
                for p in 0..positions {
                    let window = &seq[p * self.dim..p * self.dim + span];
                    let a = g.bias[f] + dot(kernel, window);
                    if a > best {
                        best = a;
                        best_pos = p;
                    }
                }
                if best > 0.0 {
                    out.push(best);
                    winners.push(Some(best_pos));
                } else {
                    out.push(0.0);
                    winners.push(None);
                }
            }
        }
        (out, ConvCache { winners })
    }

    pub fn encode(&self, seq: &[f64]) -> Vec<f64> {
        self.forward(seq).0
    }

    /// Accumulates `∂L/∂θ` into `grads` given `∂L/∂output`; returns
    /// `∂L/∂seq` for the unpadded input rows.
    pub fn backward(&self, seq: &[f64], cache: &ConvCache, d_out: &[f64], grads: &mut ConvEncoder) -> Vec<f64> {
        let padded = self.padded(seq);
        let mut d_seq = vec![0.0; padded.len()];
        let mut k = 0;
        for (g, gg) in self.groups.iter().zip(grads.groups.iter_mut()) {
            let span = g.width * self.dim;
            for f in 0..g.filters {
                if let Some(p) = cache.winners[k] {
                    let d = d_out[k];
                    let window = &padded[p * self.dim..p * self.dim + span];
                    let kernel = &g.weights[f * span..(f + 1) * span];
                    for (gw, x) in gg.weights[f * span..(f + 1) * span].iter_mut().zip(window) {
                        *gw += d * x;
                    }
                    gg.bias[f] += d;
                    for (dx, w) in d_seq[p * self.dim..p * self.dim + span].iter_mut().zip(kernel) {
                        *dx += d * w;
                    }
                }
                k += 1;
            }
        }
        d_seq.truncate(seq.len());
        d_seq
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            dim: self.dim,
            groups: self
                .groups
                .iter()
                .map(|g| ConvGroup {
                    width: g.width,
                    filters: g.filters,
                    weights: vec![0.0; g.weights.len()],
                    bias: vec![0.0; g.bias.len()],
                })
                .collect(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.groups
            .iter_mut()
            .flat_map(|g| [&mut g.weights, &mut g.bias])
            .collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorize; summation order is fixed
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for j in 0..4 {
            acc[j] += a[4 * i + j] * b[4 * i + j];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}
