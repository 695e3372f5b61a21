//! Observation matrices for data-driven problems, dense or sparse by rows.

use crate::linalg::{self, DenseMatrix};

/// Sparse observation matrix stored by rows, with a column index built once
/// at construction so Jacobian columns can be gathered without scanning.
#[derive(Debug, Clone)]
pub struct SparseRowMatrix {
    rows: usize,
    cols: usize,
    row_entries: Vec<Vec<(usize, f64)>>,
    col_entries: Vec<Vec<(usize, f64)>>,
}

impl SparseRowMatrix {
    /// Build from per-row `(column, value)` entry lists.
    pub fn from_rows(cols: usize, row_entries: Vec<Vec<(usize, f64)>>) -> Self {
        let rows = row_entries.len();
        let mut col_entries = vec![Vec::new(); cols];
        for (i, row) in row_entries.iter().enumerate() {
            for &(j, v) in row {
                assert!(j < cols, "column index {j} out of range (cols = {cols})");
                col_entries[j].push((i, v));
            }
        }
        Self {
            rows,
            cols,
            row_entries,
            col_entries,
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_entries.iter().map(Vec::len).sum()
    }
}

/// Dense or sparse `n × d` observation matrix.
#[derive(Debug, Clone)]
pub enum DataMatrix {
    Dense(DenseMatrix),
    Sparse(SparseRowMatrix),
}

impl DataMatrix {
    pub fn rows(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.rows(),
            DataMatrix::Sparse(m) => m.rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            DataMatrix::Dense(m) => m.cols(),
            DataMatrix::Sparse(m) => m.cols,
        }
    }

    /// `a_iᵀ x`
    pub fn dot_row(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            DataMatrix::Dense(m) => linalg::dot(m.row(i), x),
            DataMatrix::Sparse(m) => m.row_entries[i]
                .iter()
                .map(|&(j, v)| v * x[j])
                .sum(),
        }
    }

    /// `out += alpha · a_i`
    pub fn scatter_row(&self, i: usize, alpha: f64, out: &mut [f64]) {
        match self {
            DataMatrix::Dense(m) => linalg::axpy(alpha, m.row(i), out),
            DataMatrix::Sparse(m) => {
                for &(j, v) in &m.row_entries[i] {
                    out[j] += alpha * v;
                }
            }
        }
    }

    /// Visit the nonzeros of column `j` as `(row, value)`.
    pub fn for_column(&self, j: usize, mut visit: impl FnMut(usize, f64)) {
        match self {
            DataMatrix::Dense(m) => {
                for i in 0..m.rows() {
                    visit(i, m.get(i, j));
                }
            }
            DataMatrix::Sparse(m) => {
                for &(i, v) in &m.col_entries[j] {
                    visit(i, v);
                }
            }
        }
    }
}
