//! Sparse symmetric positive definite systems factored once and solved many
//! times.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

pub struct SparseSpd {
    n: usize,
    matrix: SparseColMat<usize, f64>,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for SparseSpd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseSpd").field("n", &self.n).finish()
    }
}

impl SparseSpd {
    /// Build from (row, col, value) triplets; duplicates are summed. Both
    /// triangles must be supplied.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if triplets.iter().any(|t| !t.2.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        let entries: Vec<Triplet<usize, usize, f64>> =
            triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        let matrix = SparseColMat::try_new_from_triplets(n, n, &entries)
            .map_err(|e| Error::Solver(format!("sparse assembly: {e:?}")))?;
        let llt = matrix
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(Self { n, matrix, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.matrix.as_ref();
        let cp = m.col_ptr();
        let ri = m.row_idx();
        let v = m.val();
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            for k in cp[j]..cp[j + 1] {
                y[ri[k]] += v[k] * xj;
            }
        }
        y
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.llt.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solve with one step of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_with(b, true)
    }

    /// Solve, optionally skipping the refinement step.
    pub fn solve_with(&self, b: &[f64], refine: bool) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::InvalidArgument("right-hand side length".into()));
        }
        let mut x = self.raw_solve(b);
        if refine {
            let ax = self.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.raw_solve(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("non-finite solution".into()));
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_solve_is_exact() {
        // [[4,1],[1,3]] assembled from split contributions
        let t = [(0, 0, 2.0), (0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)];
        let s = SparseSpd::from_triplets(2, &t).unwrap();
        assert_eq!(s.matvec(&[1.0, 0.0]), vec![4.0, 1.0]);
        let x = s.solve(&[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-15 && (x[1] - 7.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_is_rejected() {
        let t = [(0, 0, 1.0), (1, 1, -1.0)];
        assert!(SparseSpd::from_triplets(2, &t).is_err());
    }
}
