//! Sparse LDL^T factorization without pivoting (up-looking, elimination
//! tree based). Used on the symmetric positive definite normal matrix of
//! the QP backend; natural ordering is kept because the transcribed
//! problems are chains (optionally with one dense trailing column), for
//! which it is already fill-efficient.

use super::sparse::CscMatrix;
use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering of a symmetric pattern (`perm[new] = old`).
/// Keeps chain-structured problems banded so the no-pivot factorization
/// stays近-linear even after slack columns are appended.
pub fn rcm_order(m: &CscMatrix) -> Vec<usize> {
    let n = m.ncols;
    assert_eq!(m.nrows, n);
    // adjacency (both triangles)
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for p in m.col_ptr[j]..m.col_ptr[j + 1] {
            let i = m.row_idx[p];
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    let mut candidates: Vec<usize> = (0..n).collect();
    candidates.sort_by_key(|&j| (degree[j], j));
    for &start in &candidates {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(j) = queue.pop_front() {
            order.push(j);
            let mut next: Vec<usize> = adj[j].iter().copied().filter(|&k| !visited[k]).collect();
            next.sort_by_key(|&k| (degree[k], k));
            for k in next {
                visited[k] = true;
                queue.push_back(k);
            }
        }
    }
    order.reverse();
    order
}

/// LDL^T factorization behind a symmetric fill-reducing permutation.
#[derive(Debug, Clone)]
pub struct OrderedLdl {
    perm: Vec<usize>,
    inv: Vec<usize>,
    symbolic: LdlSymbolic,
}

impl OrderedLdl {
    /// Analyzes the pattern of a full symmetric matrix.
    pub fn analyze(m: &CscMatrix) -> Self {
        let perm = rcm_order(m);
        let n = perm.len();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let upper = Self::permuted_upper(m, &inv);
        let symbolic = LdlSymbolic::new(&upper);
        OrderedLdl {
            perm,
            inv,
            symbolic,
        }
    }

    fn permuted_upper(m: &CscMatrix, inv: &[usize]) -> CscMatrix {
        let n = m.ncols;
        let mut triplets = Vec::with_capacity(m.nnz() / 2 + n);
        for j in 0..n {
            for p in m.col_ptr[j]..m.col_ptr[j + 1] {
                let i = m.row_idx[p];
                if i > j {
                    continue;
                }
                let (a, b) = (inv[i].min(inv[j]), inv[i].max(inv[j]));
                triplets.push((a, b, m.values[p]));
            }
        }
        CscMatrix::from_triplets(n, n, &triplets)
    }

    /// Numeric refactorization; the matrix must have the analyzed pattern.
    pub fn factor(&self, m: &CscMatrix) -> Result<OrderedFactors> {
        let upper = Self::permuted_upper(m, &self.inv);
        let factors = LdlFactors::factor(&self.symbolic, &upper)?;
        Ok(OrderedFactors {
            perm: self.perm.clone(),
            factors,
        })
    }

    pub fn l_nnz(&self) -> usize {
        self.symbolic.l_nnz()
    }
}

/// Numeric factors with their permutation.
#[derive(Debug, Clone)]
pub struct OrderedFactors {
    perm: Vec<usize>,
    factors: LdlFactors,
}

impl OrderedFactors {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.perm.len();
        let mut pb = vec![0.0; n];
        for new in 0..n {
            pb[new] = b[self.perm[new]];
        }
        self.factors.solve_in_place(&mut pb);
        for new in 0..n {
            b[self.perm[new]] = pb[new];
        }
    }
}

/// Symbolic analysis of the upper-triangular pattern: elimination tree and
/// column counts of L. Reusable across numeric refactorizations with the
/// same pattern.
#[derive(Debug, Clone)]
pub struct LdlSymbolic {
    n: usize,
    parent: Vec<isize>,
    l_col_ptr: Vec<usize>,
}

impl LdlSymbolic {
    /// `upper` must hold the upper triangle (diagonal included) of a
    /// symmetric matrix in CSC form.
    pub fn new(upper: &CscMatrix) -> Self {
        let n = upper.ncols;
        let mut parent = vec![-1isize; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_nz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for p in upper.col_ptr[k]..upper.col_ptr[k + 1] {
                let mut i = upper.row_idx[p];
                while i < k && flag[i] != k {
                    if parent[i] == -1 {
                        parent[i] = k as isize;
                    }
                    l_nz[i] += 1;
                    flag[i] = k;
                    i = parent[i] as usize;
                }
            }
        }
        let mut l_col_ptr = vec![0usize; n + 1];
        for i in 0..n {
            l_col_ptr[i + 1] = l_col_ptr[i] + l_nz[i];
        }
        LdlSymbolic {
            n,
            parent,
            l_col_ptr,
        }
    }

    pub fn l_nnz(&self) -> usize {
        self.l_col_ptr[self.n]
    }
}

/// Numeric LDL^T factors: unit lower-triangular L (diagonal implicit) and
/// diagonal D.
#[derive(Debug, Clone)]
pub struct LdlFactors {
    n: usize,
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    l_values: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactors {
    /// Factorizes the matrix whose upper triangle is `upper`, reusing the
    /// symbolic analysis. Fails on a zero pivot.
    pub fn factor(symbolic: &LdlSymbolic, upper: &CscMatrix) -> Result<Self> {
        let n = symbolic.n;
        let mut l_row_idx = vec![0usize; symbolic.l_nnz()];
        let mut l_values = vec![0.0; symbolic.l_nnz()];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_next = vec![0usize; n]; // next free slot in column i of L
        for i in 0..n {
            l_next[i] = symbolic.l_col_ptr[i];
        }
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            y[k] = 0.0;
            for p in upper.col_ptr[k]..upper.col_ptr[k + 1] {
                let i = upper.row_idx[p];
                if i > k {
                    continue;
                }
                y[i] += upper.values[p];
                // walk up the etree and push the path in reverse (topological) order
                let mut len = 0;
                let mut ii = i;
                while flag[ii] != k {
                    pattern[len] = ii;
                    len += 1;
                    flag[ii] = k;
                    ii = symbolic.parent[ii] as usize;
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                for p in symbolic.l_col_ptr[i]..l_next[i] {
                    y[l_row_idx[p]] -= l_values[p] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                l_row_idx[l_next[i]] = k;
                l_values[l_next[i]] = lki;
                l_next[i] += 1;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(Error::Qp(format!("zero or non-finite pivot at column {k}")));
            }
        }
        Ok(LdlFactors {
            n,
            l_col_ptr: symbolic.l_col_ptr.clone(),
            l_row_idx,
            l_values,
            d,
        })
    }

    /// Solves `(L D L^T) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let bi = b[i];
            if bi != 0.0 {
                for p in self.l_col_ptr[i]..self.l_col_ptr[i + 1] {
                    b[self.l_row_idx[p]] -= self.l_values[p] * bi;
                }
            }
        }
        for i in 0..self.n {
            b[i] /= self.d[i];
        }
        for i in (0..self.n).rev() {
            let mut acc = b[i];
            for p in self.l_col_ptr[i]..self.l_col_ptr[i + 1] {
                acc -= self.l_values[p] * b[self.l_row_idx[p]];
            }
            b[i] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_solve_small_spd() {
        // M = [[4,1,0],[1,3,1],[0,1,2]]
        let upper = CscMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 1, 3.0), (1, 2, 1.0), (2, 2, 2.0)],
        );
        let symbolic = LdlSymbolic::new(&upper);
        let factors = LdlFactors::factor(&symbolic, &upper).unwrap();
        let mut b = vec![1.0, 2.0, 3.0];
        factors.solve_in_place(&mut b);
        // verify M x = rhs
        let m = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let rhs = [1.0, 2.0, 3.0];
        for i in 0..3 {
            let mut acc = 0.0;
            for j in 0..3 {
                acc += m[i][j] * b[j];
            }
            assert!((acc - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_trailing_column_is_handled() {
        // arrow matrix: diagonal plus dense last row/column
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 10.0 + i as f64));
        }
        for i in 0..n - 1 {
            t.push((i, n - 1, 1.0));
        }
        let upper = CscMatrix::from_triplets(n, n, &t);
        let symbolic = LdlSymbolic::new(&upper);
        let factors = LdlFactors::factor(&symbolic, &upper).unwrap();
        let mut b = vec![1.0; n];
        factors.solve_in_place(&mut b);
        // residual check against the full symmetric matrix
        let mut r = vec![0.0; n];
        for i in 0..n {
            r[i] = (10.0 + i as f64) * b[i];
        }
        for i in 0..n - 1 {
            r[i] += b[n - 1];
            r[n - 1] += b[i];
        }
        for v in &r {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
