//! Column-compressed symmetric matrices for generators from stencils.
//!
//! A generator whose nonzeros fill at most [`SPARSE_DENSITY`] of the matrix
//! keeps a sparse copy of `−A`. The closed-form synthesis then factors `−A`
//! and `M = A² + GWGᵀ` with a fill-reducing sparse Cholesky instead of the
//! dense one; results agree to round-off.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatRef, Side};

use crate::error::{HinfError, Result};

/// Largest nonzero fraction stored sparsely.
pub const SPARSE_DENSITY: f64 = 0.05;

/// Smallest order stored sparsely.
pub const SPARSE_MIN_DIM: usize = 64;

#[derive(Debug, Clone)]
pub struct SparseSym {
    n: usize,
    /// `(row, value)` per column, rows ascending.
    cols: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    /// Sparse copy of a symmetric matrix if it is large and sparse enough.
    pub fn from_dense(a: MatRef<'_, f64>) -> Option<Self> {
        let n = a.nrows();
        if n < SPARSE_MIN_DIM {
            return None;
        }
        let budget = (SPARSE_DENSITY * (n * n) as f64) as usize;
        let mut nnz = 0;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut col = Vec::new();
            for i in 0..n {
                let v = a[(i, j)];
                if v != 0.0 {
                    col.push((i, v));
                }
            }
            nnz += col.len();
            if nnz > budget {
                return None;
            }
            cols.push(col);
        }
        Some(Self { n, cols })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            cols: self
                .cols
                .iter()
                .map(|c| c.iter().map(|&(i, v)| (i, s * v)).collect())
                .collect(),
        }
    }

    /// `S² + G W Gᵀ` with `G` dense `n×p`; the low-rank term only touches
    /// rows where `G` is nonzero.
    pub fn square_plus_low_rank(&self, g: MatRef<'_, f64>, w: MatRef<'_, f64>) -> Self {
        let n = self.n;
        let support: Vec<usize> = (0..n)
            .filter(|&i| (0..g.ncols()).any(|k| g[(i, k)] != 0.0))
            .collect();
        let gw = g * w;
        let mut acc = vec![0.0; n];
        let mut touched = vec![false; n];
        let mut rows = Vec::new();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            // symmetric: column j of S² is S·(column j of S)
            for &(k, skj) in &self.cols[j] {
                for &(i, sik) in &self.cols[k] {
                    if !touched[i] {
                        touched[i] = true;
                        rows.push(i);
                    }
                    acc[i] += sik * skj;
                }
            }
            if support.binary_search(&j).is_ok() {
                for &i in &support {
                    // evaluate on the lower triangle so both halves match bitwise
                    let (r, c) = (i.max(j), i.min(j));
                    let v: f64 = (0..g.ncols()).map(|k| gw[(r, k)] * g[(c, k)]).sum();
                    if !touched[i] {
                        touched[i] = true;
                        rows.push(i);
                    }
                    acc[i] += v;
                }
            }
            rows.sort_unstable();
            let col = rows.iter().map(|&i| (i, acc[i])).collect();
            for &i in &rows {
                acc[i] = 0.0;
                touched[i] = false;
            }
            rows.clear();
            cols.push(col);
        }
        Self { n, cols }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .cols
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().map(move |&(i, v)| Triplet::new(i, j, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|_| HinfError::SingularFactorization)
    }

    /// `S⁻¹V` for symmetric positive definite `S`.
    pub fn spd_solve(&self, v: MatRef<'_, f64>) -> Result<Mat<f64>> {
        let llt = self
            .to_faer()?
            .sp_cholesky(Side::Lower)
            .map_err(|_| HinfError::SingularFactorization)?;
        let x = llt.solve(v);
        if x.col_iter().any(|c| c.iter().any(|e| !e.is_finite())) {
            return Err(HinfError::SingularFactorization);
        }
        Ok(x)
    }
}
