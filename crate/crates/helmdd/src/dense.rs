//! Dense complex matrix helpers on top of `faer::Mat`.
//!
//! Dense blocks show up in the coarse-space machinery: eigenvector blocks,
//! Schur complements on interfaces and the coarse operator itself. They are
//! all small enough at this scale that dense algebra is the simplest tool.

use crate::error::{Error, Result};
use crate::sparse::ComplexSparseMatrix;
use faer::linalg::solvers::Solve;
use num_complex::Complex64;

pub type CMat = faer::Mat<Complex64>;

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn from_sparse(a: &ComplexSparseMatrix) -> CMat {
    let mut m = CMat::zeros(a.n_rows(), a.n_cols());
    for (r, c, v) in a.triplets() {
        m[(r, c)] = v;
    }
    m
}

pub fn matvec(a: &CMat, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![Complex64::new(0.0, 0.0); a.nrows()];
    for c in 0..a.ncols() {
        let xc = x[c];
        for r in 0..a.nrows() {
            y[r] += a[(r, c)] * xc;
        }
    }
    y
}

/// A^H x.
pub fn dagger_matvec(a: &CMat, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.nrows(), x.len());
    let mut y = vec![Complex64::new(0.0, 0.0); a.ncols()];
    for c in 0..a.ncols() {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..a.nrows() {
            acc += a[(r, c)].conj() * x[r];
        }
        y[c] = acc;
    }
    y
}

/// A^T x.
pub fn transpose_matvec(a: &CMat, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.nrows(), x.len());
    let mut y = vec![Complex64::new(0.0, 0.0); a.ncols()];
    for c in 0..a.ncols() {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..a.nrows() {
            acc += a[(r, c)] * x[r];
        }
        y[c] = acc;
    }
    y
}

pub fn max_norm(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            m = m.max(a[(r, c)].norm());
        }
    }
    m
}

pub fn col_to_vec(a: &CMat, c: usize) -> Vec<Complex64> {
    (0..a.nrows()).map(|r| a[(r, c)]).collect()
}

pub fn set_col(a: &mut CMat, c: usize, v: &[Complex64]) {
    assert_eq!(a.nrows(), v.len());
    for r in 0..v.len() {
        a[(r, c)] = v[r];
    }
}

/// Exact dense LU solver handle with a singularity check at build time.
#[derive(Debug)]
pub struct DenseLu {
    lu: faer::linalg::solvers::PartialPivLu<Complex64>,
    n: usize,
}

impl DenseLu {
    pub fn new(a: &CMat, context: &str) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "DenseLu needs a square matrix");
        let lu = a.partial_piv_lu();
        let handle = DenseLu { lu, n };
        // a singular factor surfaces as non-finite entries on a probe solve
        let probe: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + (i % 3) as f64, -0.5))
            .collect();
        let x = handle.solve(&probe);
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Singular {
                context: context.to_string(),
                subdomain: None,
            });
        }
        Ok(handle)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n);
        let rhs = CMat::from_fn(self.n, 1, |r, _| b[r]);
        let x = self.lu.solve(rhs);
        (0..self.n).map(|r| x[(r, 0)]).collect()
    }

    /// Solve with a dense multi-column right-hand side.
    pub fn solve_mat(&self, b: &CMat) -> CMat {
        assert_eq!(b.nrows(), self.n);
        self.lu.solve(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dense_lu_solves() {
        let a = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                c(2.0 + i as f64, 0.5)
            } else {
                c(0.3, -0.1)
            }
        });
        let lu = DenseLu::new(&a, "test").unwrap();
        let xtrue: Vec<Complex64> = (0..3).map(|i| c(i as f64, 1.0)).collect();
        let b = matvec(&a, &xtrue);
        let x = lu.solve(&b);
        for i in 0..3 {
            assert!((x[i] - xtrue[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn dense_lu_detects_singular() {
        let mut a = CMat::zeros(3, 3);
        a[(0, 0)] = c(1.0, 0.0);
        a[(0, 1)] = c(2.0, 0.0);
        // row 1 zero, row 2 something
        a[(2, 2)] = c(1.0, 0.0);
        assert!(matches!(
            DenseLu::new(&a, "test"),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn dagger_matches_manual() {
        let a = CMat::from_fn(2, 2, |i, j| c(i as f64, j as f64));
        let x = vec![c(1.0, 1.0), c(0.0, -2.0)];
        let y = dagger_matvec(&a, &x);
        // y[c] = sum_r conj(a[r,c]) x[r]
        let y0 = a[(0, 0)].conj() * x[0] + a[(1, 0)].conj() * x[1];
        assert!((y[0] - y0).norm() < 1e-15);
    }
}
