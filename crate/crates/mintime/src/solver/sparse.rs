//! Minimal compressed-sparse-column matrix used by the QP backend.

/// Sparse matrix in CSC layout; row indices are sorted within each column
/// and duplicates are summed on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CscMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for &(r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            per_col[c].push((r, v));
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in per_col.iter_mut() {
            col.sort_by_key(|&(r, _)| r);
            let mut i = 0;
            while i < col.len() {
                let r = col[i].0;
                let mut v = 0.0;
                while i < col.len() && col[i].0 == r {
                    v += col[i].1;
                    i += 1;
                }
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        y.fill(0.0);
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
    }

    /// y = A^T x
    pub fn mul_transpose_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc += self.values[p] * x[self.row_idx[p]];
            }
            y[j] = acc;
        }
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut counts = vec![0usize; self.nrows];
        for &r in &self.row_idx {
            counts[r] += 1;
        }
        let mut col_ptr = vec![0usize; self.nrows + 1];
        for i in 0..self.nrows {
            col_ptr[i + 1] = col_ptr[i] + counts[i];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let r = self.row_idx[p];
                let dst = next[r];
                next[r] += 1;
                row_idx[dst] = j;
                values[dst] = self.values[p];
            }
        }
        CscMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Scales row i by r[i] and column j by c[j] in place.
    pub fn scale(&mut self, row: &[f64], col: &[f64]) {
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                self.values[p] *= row[self.row_idx[p]] * col[j];
            }
        }
    }

    pub fn infinity_norm_cols(&self) -> Vec<f64> {
        let mut norms = vec![0.0f64; self.ncols];
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                norms[j] = norms[j].max(self.values[p].abs());
            }
        }
        norms
    }

    pub fn infinity_norm_rows(&self) -> Vec<f64> {
        let mut norms = vec![0.0f64; self.nrows];
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let r = self.row_idx[p];
                norms[r] = norms[r].max(self.values[p].abs());
            }
        }
        norms
    }

    /// Upper triangle (including the diagonal) of a square matrix.
    pub fn upper_triangle(&self) -> CscMatrix {
        assert_eq!(self.nrows, self.ncols);
        let mut triplets = Vec::new();
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let r = self.row_idx[p];
                if r <= j {
                    triplets.push((r, j, self.values[p]));
                }
            }
        }
        CscMatrix::from_triplets(self.nrows, self.ncols, &triplets)
    }
}

/// M = H + sigma I + A^T diag(w) A, as triplets suitable for factorization.
/// The triplet order is deterministic given the inputs.
pub fn normal_matrix(h: &CscMatrix, sigma: f64, a: &CscMatrix, w: &[f64]) -> CscMatrix {
    assert_eq!(h.nrows, h.ncols);
    assert_eq!(a.ncols, h.ncols);
    assert_eq!(w.len(), a.nrows);
    let n = h.ncols;
    let mut triplets = Vec::with_capacity(h.nnz() + n + 4 * a.nnz());
    for j in 0..n {
        for p in h.col_ptr[j]..h.col_ptr[j + 1] {
            triplets.push((h.row_idx[p], j, h.values[p]));
        }
        triplets.push((j, j, sigma));
    }
    // row-wise outer products of A
    let at = a.transpose(); // columns of `at` are rows of A
    for i in 0..a.nrows {
        let (cols, vals) = at.col(i);
        let wi = w[i];
        for (a_idx, &ci) in cols.iter().enumerate() {
            for (b_idx, &cj) in cols.iter().enumerate() {
                triplets.push((ci, cj, wi * vals[a_idx] * vals[b_idx]));
            }
        }
    }
    CscMatrix::from_triplets(n, n, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CscMatrix::from_triplets(3, 2, &[(2, 0, 1.0), (0, 0, 2.0), (2, 0, 0.5), (1, 1, 4.0)]);
        assert_eq!(m.col(0), (&[0usize, 2][..], &[2.0, 1.5][..]));
        assert_eq!(m.col(1), (&[1usize][..], &[4.0][..]));
    }

    #[test]
    fn matvec_and_transpose_agree_with_dense() {
        let m = CscMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (1, 0, -2.0), (0, 2, 3.0)]);
        let mut y = vec![0.0; 2];
        m.mul_vec(&[1.0, 5.0, 2.0], &mut y);
        assert_eq!(y, vec![7.0, -2.0]);
        let mut z = vec![0.0; 3];
        m.mul_transpose_vec(&[1.0, 1.0], &mut z);
        assert_eq!(z, vec![-1.0, 0.0, 3.0]);
        let t = m.transpose();
        assert_eq!(t.nrows, 3);
        let mut y2 = vec![0.0; 3];
        t.mul_vec(&[1.0, 1.0], &mut y2);
        assert_eq!(y2, z);
    }

    #[test]
    fn normal_matrix_matches_dense_arithmetic() {
        let h = CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 2.0)]);
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]);
        let m = normal_matrix(&h, 0.5, &a, &[2.0, 3.0]);
        // M = H + 0.5 I + A^T W A, A = [[1,1],[0,1]], W = diag(2,3)
        // A^T W A = [[2,2],[2,5]]
        let dense = [[4.5, 2.0], [2.0, 7.5]];
        for j in 0..2 {
            let (rows, vals) = m.col(j);
            for (idx, &r) in rows.iter().enumerate() {
                assert!((vals[idx] - dense[r][j]).abs() < 1e-14);
            }
        }
    }
}
