use super::table::EmbeddingTable;

/// Row-major `len × dim` matrix of token vectors.
pub fn token_matrix<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable, max_seq_len: usize) -> Vec<f64> {
    tokens
        .iter()
        .take(max_seq_len)
        .flat_map(|t| table.lookup(t.as_ref()))
        .collect()
}

pub fn average_rows(rows: &[f64], dim: usize) -> Vec<f64> {
    let n = rows.len() / dim;
    let mut out = vec![0.0; dim];
    if n == 0 {
        return out;
    }
    for row in rows.chunks_exact(dim) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= n as f64;
    }
    out
}

pub fn max_rows(rows: &[f64], dim: usize) -> Vec<f64> {
    let mut chunks = rows.chunks_exact(dim);
    let Some(first) = chunks.next() else {
        return vec![0.0; dim];
    };
    let mut out = first.to_vec();
    for row in chunks {
        for (o, &v) in out.iter_mut().zip(row) {
            if v > *o {
                *o = v;
            }
        }
    }
    out
}

/// Componentwise mean of the first `max_seq_len` token vectors; zero for an
/// empty document.
pub fn pool_average<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable, max_seq_len: usize) -> Vec<f64> {
    average_rows(&token_matrix(tokens, table, max_seq_len), table.dim())
}

/// Componentwise maximum of the first `max_seq_len` token vectors; zero for
/// an empty document.
pub fn pool_max<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable, max_seq_len: usize) -> Vec<f64> {
    max_rows(&token_matrix(tokens, table, max_seq_len), table.dim())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_and_max_of_two_rows() {
        let rows = [1.0, 3.0, 3.0, 5.0];
        assert_eq!(average_rows(&rows, 2), vec![2.0, 4.0]);
        assert_eq!(max_rows(&rows, 2), vec![3.0, 5.0]);
    }

    #[test]
    fn single_row_is_identity() {
        assert_eq!(average_rows(&[0.25, -1.0], 2), vec![0.25, -1.0]);
        assert_eq!(max_rows(&[-1.0, -2.0], 2), vec![-1.0, -2.0]);
    }

    #[test]
    fn empty_document_pools_to_zero() {
        assert_eq!(average_rows(&[], 3), vec![0.0; 3]);
        assert_eq!(max_rows(&[], 3), vec![0.0; 3]);
    }
}
