//! Compressed sparse row matrix with the products the SVD needs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-major sparse matrix. Column indices are strictly increasing within a
/// row and explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            indptr: vec![0; n_rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from per-row `(column, value)` lists. Entries within a
    /// row may come in any order; duplicates are summed and zeros dropped.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n_rows = rows.len();
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let start = indices.len();
            for (c, v) in row {
                if c >= n_cols {
                    return Err(Error::shape(format!("column < {n_cols}"), c));
                }
                if indices.len() > start && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            // drop zeros produced by cancellation or given explicitly
            let mut w = start;
            for r in start..indices.len() {
                if values[r] != 0.0 {
                    indices[w] = indices[r];
                    values[w] = values[r];
                    w += 1;
                }
            }
            indices.truncate(w);
            values.truncate(w);
            indptr.push(indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(dense: &DMatrix<f64>) -> Self {
        let rows = (0..dense.nrows())
            .map(|i| {
                (0..dense.ncols())
                    .filter(|&j| dense[(i, j)] != 0.0)
                    .map(|j| (j, dense[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(dense.ncols(), rows).expect("columns are in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[usize], &[f64])> {
        (0..self.n_rows).map(|i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(i, c)] = v;
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for &r in rows {
            let (c, v) = self.row(r);
            indices.extend_from_slice(c);
            values.extend_from_slice(v);
            indptr.push(indices.len());
        }
        Self {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            indptr,
            indices,
            values,
        }
    }

    /// `self · rhs`
    pub fn mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(rhs.nrows(), self.n_cols, "inner dimension mismatch");
        let k = rhs.ncols();
        let mut out = DMatrix::zeros(self.n_rows, k);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for j in 0..k {
                let col = rhs.column(j);
                let mut acc = 0.0;
                for (&c, &v) in cols.iter().zip(vals) {
                    acc += v * col[c];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `selfᵀ · rhs`
    pub fn t_mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(rhs.nrows(), self.n_rows, "inner dimension mismatch");
        let k = rhs.ncols();
        let mut out = DMatrix::zeros(self.n_cols, k);
        for j in 0..k {
            let src = rhs.column(j);
            let mut dst = out.column_mut(j);
            for i in 0..self.n_rows {
                let x = src[i];
                if x == 0.0 {
                    continue;
                }
                let (cols, vals) = self.row(i);
                for (&c, &v) in cols.iter().zip(vals) {
                    dst[c] += v * x;
                }
            }
        }
        out
    }

    /// Writes the triplet text format:
    ///
    /// ```text
    /// <n_rows> <n_cols> <nnz>
    /// <row> <col> <weight>
    /// ...
    /// ```
    ///
    /// Weights use Rust's shortest round-trip float formatting, so reading the
    /// file back reproduces the matrix bit for bit.
    pub fn write_triplets(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "{} {} {}", self.n_rows, self.n_cols, self.nnz()).map_err(io)?;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(out, "{i} {c} {v}").map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }

    pub fn read_triplets(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?
            .map_err(|e| Error::io(path, e))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(1, format!("bad header: {e}")))?;
        let [n_rows, n_cols, nnz] = dims[..] else {
            return Err(parse_err(1, "header must be `n_rows n_cols nnz`".into()));
        };
        let mut rows = vec![Vec::new(); n_rows];
        let mut seen = 0;
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = i + 2;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(parse_err(lineno, "expected `row col weight`".into()));
            }
            let r: usize = parts[0].parse().map_err(|e| parse_err(lineno, format!("{e}")))?;
            let c: usize = parts[1].parse().map_err(|e| parse_err(lineno, format!("{e}")))?;
            let v: f64 = parts[2].parse().map_err(|e| parse_err(lineno, format!("{e}")))?;
            if r >= n_rows {
                return Err(parse_err(lineno, format!("row {r} out of range")));
            }
            rows[r].push((c, v));
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(1, format!("header declares {nnz} entries, found {seen}")));
        }
        Self::from_rows(n_cols, rows)
    }
}
