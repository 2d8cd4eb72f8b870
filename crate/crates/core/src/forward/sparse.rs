use rayon::prelude::*;

use crate::error::{check_len, Result};

/// Compressed sparse column matrix. ICD needs fast column access, and both
/// products below are written against that layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseColumns {
    nrows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SparseColumns {
    /// Assemble from per-column `(row, value)` lists. Rows must be unique
    /// within a column; order is preserved.
    pub fn from_columns(nrows: usize, columns: Vec<Vec<(u32, f64)>>) -> Self {
        let nnz = columns.iter().map(Vec::len).sum();
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for col in columns {
            for (r, v) in col {
                debug_assert!((r as usize) < nrows);
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Self { nrows, col_ptr, row_idx, values }
    }

    /// From dense columns, keeping every nonzero entry.
    pub fn from_dense_columns(nrows: usize, columns: &[Vec<f64>]) -> Self {
        let cols = columns
            .iter()
            .map(|c| {
                assert_eq!(c.len(), nrows, "dense column length");
                c.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i as u32, *v))
                    .collect()
            })
            .collect();
        Self::from_columns(nrows, cols)
    }

    pub fn empty(nrows: usize) -> Self {
        Self::from_columns(nrows, Vec::new())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn column(&self, j: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[a..b], &self.values[a..b])
    }

    /// Dense copy of column `j`.
    pub fn dense_column(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        let (rows, vals) = self.column(j);
        for (r, v) in rows.iter().zip(vals) {
            out[*r as usize] = *v;
        }
        out
    }

    pub fn column_norm_sq(&self, j: usize) -> f64 {
        self.column(j).1.iter().map(|v| v * v).sum()
    }

    #[inline]
    pub fn column_dot(&self, j: usize, u: &[f64]) -> f64 {
        let (rows, vals) = self.column(j);
        rows.iter().zip(vals).map(|(r, v)| v * u[*r as usize]).sum()
    }

    /// `u += alpha * column(j)`
    #[inline]
    pub fn axpy_column(&self, j: usize, alpha: f64, u: &mut [f64]) {
        let (rows, vals) = self.column(j);
        for (r, v) in rows.iter().zip(vals) {
            u[*r as usize] += alpha * v;
        }
    }

    /// `M x`
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("operand", self.ncols(), x.len())?;
        let mut out = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                self.axpy_column(j, xj, &mut out);
            }
        }
        Ok(out)
    }

    /// `Mᵀ u`
    pub fn tmul_vec(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("operand", self.nrows, u.len())?;
        Ok((0..self.ncols()).into_par_iter().map(|j| self.column_dot(j, u)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let cols = vec![vec![1.0, 0.0, 2.0], vec![0.0, 0.0, 0.0], vec![0.0, -3.0, 4.0]];
        let m = SparseColumns::from_dense_columns(3, &cols);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.mul_vec(&[1.0, 5.0, 2.0]).unwrap(), vec![1.0, -6.0, 10.0]);
        assert_eq!(m.tmul_vec(&[1.0, 1.0, 1.0]).unwrap(), vec![3.0, 0.0, 1.0]);
        assert!(m.mul_vec(&[1.0]).is_err());
        assert_eq!(m.dense_column(2), cols[2]);
    }
}
