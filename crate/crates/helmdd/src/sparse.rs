//! Complex sparse matrices in compressed row form.
//!
//! All assembled operators live in this format. Columns are strictly
//! increasing within each row and duplicate entries are summed at build
//! time, so identical triplet multisets always compress to the same matrix.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::Write;

/// Compressed-row complex sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

/// Triplet accumulator for assembly.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl CooBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        CooBuilder {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.entries.push((row, col, value));
    }

    /// Compress to CSR, summing duplicates. Entries are sorted by
    /// (row, col) with a stable sort first, so duplicate contributions are
    /// summed in insertion order.
    pub fn build(mut self) -> ComplexSparseMatrix {
        self.entries
            .sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_counts = vec![0usize; self.n_rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(self.entries.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_counts[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.n_rows {
            row_counts[r + 1] += row_counts[r];
        }
        ComplexSparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr: row_counts,
            col_idx,
            values,
        }
    }
}

impl ComplexSparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        ComplexSparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        ComplexSparseMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut b = CooBuilder::new(n_rows, n_cols);
        for (r, c, v) in triplets {
            b.push(r, c, v);
        }
        b.build()
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

    pub fn row(&self, r: usize) -> (&[usize], &[Complex64]) {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(p) => vals[p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_cols, "matvec dimension mismatch");
        let mut y = vec![Complex64::new(0.0, 0.0); self.n_rows];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// y += alpha * A x
    pub fn matvec_add(&self, x: &[Complex64], alpha: Complex64, y: &mut [Complex64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] += alpha * acc;
        }
    }

    /// A^dagger x (conjugate transpose applied to x).
    pub fn dagger_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_rows);
        let mut y = vec![Complex64::new(0.0, 0.0); self.n_cols];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v.conj() * x[r];
            }
        }
        y
    }

    /// A^T x (plain transpose applied to x).
    pub fn transpose_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_rows);
        let mut y = vec![Complex64::new(0.0, 0.0); self.n_cols];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * x[r];
            }
        }
        y
    }

    /// Submatrix at the given (sorted or unsorted) global row/col index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (local, &g) in cols.iter().enumerate() {
            col_map[g] = local;
        }
        let mut b = CooBuilder::new(rows.len(), cols.len());
        for (lr, &gr) in rows.iter().enumerate() {
            let (cs, vs) = self.row(gr);
            for (&c, &v) in cs.iter().zip(vs) {
                let lc = col_map[c];
                if lc != usize::MAX {
                    b.push(lr, lc, v);
                }
            }
        }
        b.build()
    }

    pub fn transpose(&self) -> Self {
        let mut b = CooBuilder::new(self.n_cols, self.n_rows);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                b.push(c, r, v);
            }
        }
        b.build()
    }

    /// max over entries of |a_ij| (zero entries excluded; fine for norms).
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.n_rows)
            .map(|r| self.row(r).1.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// self + alpha * other, matching dimensions required.
    pub fn add_scaled(&self, alpha: Complex64, other: &Self) -> Self {
        assert_eq!(self.n_rows, other.n_rows);
        assert_eq!(self.n_cols, other.n_cols);
        let mut b = CooBuilder::new(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                b.push(r, c, v);
            }
            let (cols, vals) = other.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                b.push(r, c, alpha * v);
            }
        }
        b.build()
    }

    /// D * A * D with diagonal D given as a weight vector.
    pub fn scale_rows_cols(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n_rows);
        assert_eq!(d.len(), self.n_cols);
        let mut out = self.clone();
        for r in 0..self.n_rows {
            let lo = out.row_ptr[r];
            let hi = out.row_ptr[r + 1];
            for p in lo..hi {
                out.values[p] *= d[r] * d[out.col_idx[p]];
            }
        }
        out
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Matrix Market coordinate output (complex general, 1-based).
    pub fn write_matrix_market(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{} {} {:.17e} {:.17e}", r + 1, c + 1, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn to_faer(&self) -> Result<faer::sparse::SparseColMat<usize, Complex64>> {
        let trips: Vec<faer::sparse::Triplet<usize, usize, Complex64>> = self
            .triplets()
            .map(|(r, c, v)| faer::sparse::Triplet::new(r, c, v))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &trips)
            .map_err(|e| Error::invalid(format!("sparse conversion failed: {e:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = ComplexSparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, c(1.0, 0.0)), (0, 0, c(2.0, 1.0)), (1, 1, c(3.0, 0.0))],
        );
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), c(3.0, 1.0));
        assert_eq!(a.get(1, 1), c(3.0, 0.0));
        assert_eq!(a.get(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn empty_rows_are_handled() {
        let a = ComplexSparseMatrix::from_triplets(4, 4, vec![(3, 2, c(1.0, 0.0))]);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(3, 2), c(1.0, 0.0));
        let y = a.matvec(&[c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(y[3], c(2.0, 0.0));
        assert_eq!(y[0], c(0.0, 0.0));
    }

    #[test]
    fn submatrix_matches_dense_slicing() {
        let a = ComplexSparseMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, c(1.0, 0.0)),
                (0, 2, c(2.0, 0.5)),
                (1, 1, c(3.0, 0.0)),
                (2, 0, c(4.0, -1.0)),
                (2, 2, c(5.0, 0.0)),
            ],
        );
        let s = a.submatrix(&[0, 2], &[0, 2]);
        assert_eq!(s.get(0, 0), c(1.0, 0.0));
        assert_eq!(s.get(0, 1), c(2.0, 0.5));
        assert_eq!(s.get(1, 0), c(4.0, -1.0));
        assert_eq!(s.get(1, 1), c(5.0, 0.0));
    }

    #[test]
    fn matrix_market_roundtrip_header() {
        let a = ComplexSparseMatrix::identity(2);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate complex general"));
        assert!(s.contains("2 2 2"));
    }

    proptest! {
        #[test]
        fn build_is_order_independent(rot in 0usize..12) {
            // the same triplet multiset in two different orders compresses
            // to the same matrix (up to summation order of duplicates)
            let trips: Vec<(usize, usize, Complex64)> = (0..12)
                .map(|i| ((i * 7) % 4, (i * 5) % 4, c(i as f64, -(i as f64))))
                .collect();
            let mut shuffled = trips.clone();
            shuffled.rotate_left(rot);
            let a = ComplexSparseMatrix::from_triplets(4, 4, trips);
            let b = ComplexSparseMatrix::from_triplets(4, 4, shuffled);
            for r in 0..4 {
                for cidx in 0..4 {
                    let d = (a.get(r, cidx) - b.get(r, cidx)).norm();
                    prop_assert!(d <= 1e-12);
                }
            }
        }

        #[test]
        fn matvec_matches_dense(n in 1usize..8, seed in 0u64..50) {
            let mut entries = Vec::new();
            let mut st = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut next = || { st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (st >> 33) as f64 / (1u64 << 31) as f64 - 0.5 };
            for r in 0..n {
                for cc in 0..n {
                    if next() > 0.0 {
                        entries.push((r, cc, c(next(), next())));
                    }
                }
            }
            let a = ComplexSparseMatrix::from_triplets(n, n, entries.clone());
            let x: Vec<Complex64> = (0..n).map(|i| c(i as f64 + 1.0, -0.5)).collect();
            let y = a.matvec(&x);
            // dense reference
            let mut yd = vec![c(0.0, 0.0); n];
            for &(r, cc, v) in &entries {
                yd[r] += v * x[cc];
            }
            for i in 0..n {
                prop_assert!((y[i] - yd[i]).norm() <= 1e-12);
            }
        }
    }
}
