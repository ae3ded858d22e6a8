use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Vocabulary;

/// Half-width of the uniform range for vectors without a pre-trained value.
pub const OOV_RANGE: f64 = 0.5;

/// Word vectors for a fixed vocabulary. Lookups are total: a token outside
/// the vocabulary gets a vector drawn uniformly from `[-0.5, 0.5]` by a
/// generator seeded from the table seed and the token text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    seed: u64,
    terms: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    /// Row-major, `terms.len() × dim`.
    vectors: Vec<f64>,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn uniform_vector(rng: &mut ChaCha8Rng, dim: usize) -> impl Iterator<Item = f64> + '_ {
    (0..dim).map(move |_| rng.random_range(-OOV_RANGE..=OOV_RANGE))
}

impl EmbeddingTable {
    /// Random vectors for every vocabulary term.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = uniform_vector(&mut rng, vocab.len() * dim).collect();
        Self::from_parts(vocab.terms().to_vec(), dim, seed, vectors)
    }

    fn from_parts(terms: Vec<String>, dim: usize, seed: u64, vectors: Vec<f64>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            dim,
            seed,
            terms,
            index,
            vectors,
        }
    }

    /// Rebuilds the term index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn row_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn vectors_mut(&mut self) -> &mut Vec<f64> {
        &mut self.vectors
    }

    /// Deterministic vector for a token outside the table.
    pub fn oov_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(token));
        uniform_vector(&mut rng, self.dim).collect()
    }

    pub fn lookup(&self, token: &str) -> Vec<f64> {
        match self.id(token) {
            Some(i) => self.row(i).to_vec(),
            None => self.oov_vector(token),
        }
    }
}

/// Loads `token v1 … vD` rows for the tokens of `vocab`; vocabulary tokens
/// absent from the file get seeded uniform vectors in `[-0.5, 0.5]`.
pub fn load_embeddings(path: impl AsRef<Path>, vocab: &Vocabulary, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = EmbeddingTable::random(vocab, dim, seed);
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values: Vec<&str> = parts.collect();
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        if values.len() != dim {
            return Err(parse_err(format!("expected {dim} components, found {}", values.len())));
        }
        let Some(id) = table.id(token) else { continue };
        let parsed = values
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| parse_err(format!("{v:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        table.row_mut(id).copy_from_slice(&parsed);
    }
    Ok(table)
}
