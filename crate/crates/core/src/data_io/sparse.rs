use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::oracle::Point;

/// Compressed sparse row matrix with 0-based column indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row `(column, value)` lists; columns must be strictly increasing.
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for &(j, v) in row {
                debug_assert!(j < ncols);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: rows.len(),
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows: Vec<Vec<(usize, f64)>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
            .collect();
        Self::from_rows(m.ncols(), &rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub(crate) fn row_values_mut(&mut self, i: usize) -> (&[usize], &mut [f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &mut self.values[a..b])
    }

    pub fn row_dot(&self, i: usize, w: &Point) -> f64 {
        let (idx, val) = self.row(i);
        sparse_dot(idx, val, w.as_slice())
    }

    /// `out += scale * x_i`.
    pub fn add_row_scaled(&self, i: usize, scale: f64, out: &mut Point) {
        let (idx, val) = self.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            out[j] += scale * v;
        }
    }

    /// `X w`.
    pub fn matvec(&self, w: &Point) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row_dot(i, w)).collect()
    }

    /// `Xᵀ r`.
    pub fn tmatvec(&self, r: &[f64]) -> Point {
        let mut out = Point::zeros(self.ncols);
        for (i, &ri) in r.iter().enumerate() {
            if ri != 0.0 {
                self.add_row_scaled(i, ri, &mut out);
            }
        }
        out
    }

    /// `Σ_i weight_i x_i x_iᵀ`.
    pub fn weighted_gram(&self, weights: &[f64]) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.ncols, self.ncols);
        for (i, &wt) in weights.iter().enumerate() {
            let (idx, val) = self.row(i);
            for (a, (&ja, &va)) in idx.iter().zip(val).enumerate() {
                for (&jb, &vb) in idx[a..].iter().zip(&val[a..]) {
                    g[(ja, jb)] += wt * va * vb;
                }
            }
        }
        for j in 0..self.ncols {
            for k in (j + 1)..self.ncols {
                let s = g[(j, k)] + g[(k, j)];
                g[(j, k)] = s;
                g[(k, j)] = s;
            }
        }
        g
    }

    /// `XᵀX`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.weighted_gram(&vec![1.0; self.nrows])
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let picked: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|&i| {
                let (idx, val) = self.row(i);
                idx.iter().copied().zip(val.iter().copied()).collect()
            })
            .collect();
        Self::from_rows(self.ncols, &picked)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.indptr, &self.indices, &self.values)
    }
}

/// `Σ v_k w[j_k]` with four independent accumulators to break the add latency chain.
#[inline]
pub(crate) fn sparse_dot(idx: &[usize], val: &[f64], w: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ic, vc) = (idx.chunks_exact(4), val.chunks_exact(4));
    let (ir, vr) = (ic.remainder(), vc.remainder());
    for (i4, v4) in ic.zip(vc) {
        for k in 0..4 {
            acc[k] += v4[k] * w[i4[k]];
        }
    }
    let tail: f64 = ir.iter().zip(vr).map(|(&j, &v)| v * w[j]).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_dense_product() {
        let dense = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.0, 0.0]);
        let s = SparseMatrix::from_dense(&dense);
        assert_eq!(s.nnz(), 5);
        let err = (s.gram() - dense.transpose() * &dense).amax();
        assert!(err < 1e-14);
        let w = Point::from_vec(vec![1.0, 2.0, 3.0]);
        let xw = s.matvec(&w);
        assert_eq!(xw, (&dense * &w).iter().copied().collect::<Vec<_>>());
        assert_eq!(s.tmatvec(&xw), dense.transpose() * (&dense * &w));
        assert_eq!(s.select_rows(&[2, 0]).to_dense().row(0), dense.row(2));
    }
}
