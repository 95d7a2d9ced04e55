//! Fixed sparsity pattern with a reusable symbolic LU.

use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::Mat;

use crate::error::SolverError;

/// Triplet positions fixed once; values are refilled in the same order.
#[derive(Clone, Debug)]
pub struct SparsePattern {
    n: usize,
    n_triplets: usize,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu: SymbolicLu<usize>,
}

/// A numeric factorization tied to a [`SparsePattern`].
#[derive(Clone, Debug)]
pub struct Factorization {
    lu: Lu<usize, f64>,
    n: usize,
}

impl SparsePattern {
    pub fn new(n: usize, pairs: &[(usize, usize)]) -> Self {
        let idx: Vec<Pair<usize, usize>> = pairs.iter().map(|&(row, col)| Pair { row, col }).collect();
        let (symbolic, argsort) =
            SymbolicSparseColMat::try_new_from_indices(n, n, &idx).expect("indices within bounds");
        let lu = SymbolicLu::try_new(symbolic.as_ref()).expect("symbolic LU");
        Self { n, n_triplets: pairs.len(), symbolic, argsort, lu }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_triplets(&self) -> usize {
        self.n_triplets
    }

    /// Compressed matrix; duplicate triplets are summed.
    pub fn matrix(&self, values: &[f64]) -> SparseColMat<usize, f64> {
        assert_eq!(values.len(), self.n_triplets);
        SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, values).expect("allocation")
    }

    pub fn factor(&self, values: &[f64]) -> Result<Factorization, SolverError> {
        let m = self.matrix(values);
        let lu = Lu::try_new_with_symbolic(self.lu.clone(), m.as_ref())
            .map_err(|_| SolverError::Singular { block: "saddle-point" })?;
        Ok(Factorization { lu, n: self.n })
    }
}

impl Factorization {
    /// Solve `A x = rhs`; a non-finite result is reported as singular.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        assert_eq!(rhs.len(), self.n);
        let mut b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| b[(i, 0)]).collect();
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(SolverError::Singular { block: "saddle-point" })
        }
    }
}

/// `y = A x` for a compressed column matrix.
pub fn matvec(a: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    let s = a.symbolic();
    let vals = a.val();
    for j in 0..a.ncols() {
        let xj = x[j];
        for k in s.col_range(j) {
            y[s.row_idx()[k]] += vals[k] * xj;
        }
    }
    y
}

/// `y = Aᵀ x` for a compressed column matrix.
pub fn matvec_t(a: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    let s = a.symbolic();
    let vals = a.val();
    (0..a.ncols())
        .map(|j| s.col_range(j).map(|k| vals[k] * x[s.row_idx()[k]]).sum())
        .collect()
}

/// Matrix Market coordinate text (1-based, general real).
pub fn matrix_market(a: &SparseColMat<usize, f64>) -> String {
    let s = a.symbolic();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.val().len());
    for j in 0..a.ncols() {
        for k in s.col_range(j) {
            let _ = writeln!(out, "{} {} {:.17e}", s.row_idx()[k] + 1, j + 1, a.val()[k]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indefinite_system_solves_and_sums_duplicates() {
        // [[2, 1], [1, 0]] with the 2 split across two triplets
        let p = SparsePattern::new(2, &[(0, 0), (0, 1), (1, 0), (0, 0)]);
        let f = p.factor(&[1.5, 1.0, 1.0, 0.5]).unwrap();
        let x = f.solve(&[3.0, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let m = p.matrix(&[1.5, 1.0, 1.0, 0.5]);
        assert_eq!(matvec(&m, &[1.0, 1.0]), vec![3.0, 1.0]);
        assert_eq!(matvec_t(&m, &[1.0, 2.0]), vec![4.0, 1.0]);
        let mm = matrix_market(&m);
        assert!(mm.starts_with("%%MatrixMarket") && mm.lines().count() == 5);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let p = SparsePattern::new(2, &[(0, 0), (1, 1)]);
        let r = p.factor(&[1.0, 0.0]).and_then(|f| f.solve(&[1.0, 1.0]));
        assert!(matches!(r, Err(SolverError::Singular { .. })));
    }
}
