//! Coordinate-format sparse matrices.
//!
//! Triplets are collected in a [`TripletBuilder`] and finalized into a
//! [`SparseMatrix`]: entries are sorted by `(row, col)`, duplicates are summed
//! and exact zeros dropped. A finalized matrix is immutable.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Anything that can apply a square linear map to a vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`. Both slices have length [`LinearOperator::dim`].
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Main diagonal, when cheaply available (used by the Jacobi preconditioner).
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        (**self).diagonal()
    }
}

/// `x - scale * A x`; with `scale = dt/2` and a generator `A` this is the
/// implicit half of a Cayley transform.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedOperator<Op> {
    pub op: Op,
    pub scale: f64,
}

impl<Op: LinearOperator> LinearOperator for ShiftedOperator<Op> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi - self.scale * *yi;
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        self.op
            .diagonal()
            .map(|d| d.into_iter().map(|v| 1.0 - self.scale * v).collect())
    }
}

/// Unsorted triplet accumulator.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, ..Self::default() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    /// Adds `scale * m` with its top-left corner at `(row_off, col_off)`.
    pub fn push_block(&mut self, row_off: usize, col_off: usize, m: &SparseMatrix, scale: f64) {
        for (r, c, v) in m.triplets() {
            self.push(row_off + r, col_off + c, scale * v);
        }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn finish(self) -> Result<SparseMatrix> {
        let (nrows, ncols) = (self.nrows, self.ncols);
        for i in 0..self.vals.len() {
            let (row, col) = (self.rows[i], self.cols[i]);
            if row >= nrows || col >= ncols {
                return Err(Error::EntryOutOfBounds { row, col, nrows, ncols });
            }
            if !self.vals[i].is_finite() {
                return Err(Error::NonFiniteEntry { row, col });
            }
        }
        let mut order: Vec<usize> = (0..self.vals.len()).collect();
        order.sort_unstable_by_key(|&i| (self.rows[i], self.cols[i]));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(order.len());
        let mut vals = Vec::with_capacity(order.len());
        let mut rows = Vec::with_capacity(order.len());
        let mut idx = 0;
        while idx < order.len() {
            let (r, c) = (self.rows[order[idx]], self.cols[order[idx]]);
            let mut sum = 0.0;
            while idx < order.len() && self.rows[order[idx]] == r && self.cols[order[idx]] == c {
                sum += self.vals[order[idx]];
                idx += 1;
            }
            if sum != 0.0 {
                rows.push(r);
                cols.push(c);
                vals.push(sum);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseMatrix { nrows, ncols, rows, cols, vals, row_ptr })
    }
}

/// Finalized coordinate-format matrix, sorted by row then column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    row_ptr: Vec<usize>,
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut b = TripletBuilder::with_capacity(nrows, ncols, triplets.len());
        for &(r, c, v) in triplets {
            b.push(r, c, v);
        }
        b.finish()
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).finish().expect("empty matrix is valid")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut b = TripletBuilder::with_capacity(d.len(), d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            b.push(i, i, v);
        }
        b.finish().expect("diagonal entries are in bounds")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored (non-zero) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.vals.len()).map(move |i| (self.rows[i], self.cols[i], self.vals[i]))
    }

    /// Entries of one row as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (self.cols[i], self.vals[i]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match span.binary_search(&c) {
            Ok(p) => self.vals[self.row_ptr[r] + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = M x`, accumulated row by row in column order.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: x.len() });
        }
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch { expected: self.nrows, found: y.len() });
        }
        self.matvec_unchecked(x, y);
        Ok(())
    }

    fn matvec_unchecked(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.cols[i]];
            }
            *yr = acc;
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (r, c, v) in self.triplets() {
            b.push(c, r, v);
        }
        b.finish().expect("transpose stays in bounds")
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.triplets() {
            b.push(r, c, s * v);
        }
        b.finish().expect("scaling stays in bounds")
    }

    /// `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> Result<SparseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch { expected: self.nrows, found: other.nrows });
        }
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        b.push_block(0, 0, self, alpha);
        b.push_block(0, 0, other, beta);
        b.finish()
    }

    /// `diag(d) * self`.
    pub fn scale_rows(&self, d: &[f64]) -> Result<SparseMatrix> {
        if d.len() != self.nrows {
            return Err(Error::DimensionMismatch { expected: self.nrows, found: d.len() });
        }
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.triplets() {
            b.push(r, c, d[r] * v);
        }
        b.finish()
    }

    /// `self * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Result<SparseMatrix> {
        if d.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: d.len() });
        }
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.triplets() {
            b.push(r, c, v * d[c]);
        }
        b.finish()
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: other.nrows });
        }
        let mut b = TripletBuilder::new(self.nrows, other.ncols);
        let mut acc = vec![0.0; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.ncols];
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, v) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * v;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                b.push(r, c, acc[c]);
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
        }
        b.finish()
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    /// Largest `|m_rc - m_cr|`; zero means exactly symmetric.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| libm::fabs(v - self.get(c, r)))
            .fold(0.0, f64::max)
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        debug_assert_eq!(self.nrows, self.ncols);
        self.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_unchecked(x, y);
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.diagonal_values())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 1.0), (1, 0, -1.0), (1, 1, 4.0)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn rejects_out_of_bounds_and_nan() {
        assert!(matches!(
            SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]),
            Err(Error::EntryOutOfBounds { .. })
        ));
        assert!(matches!(
            SparseMatrix::from_triplets(2, 2, &[(0, 0, f64::NAN)]),
            Err(Error::NonFiniteEntry { .. })
        ));
    }

    #[test]
    fn identity_and_zero_matvec() {
        let x = [1.0, -2.0, 3.5];
        assert_eq!(SparseMatrix::identity(3).matvec(&x).unwrap(), x.to_vec());
        assert_eq!(SparseMatrix::zeros(3, 3).matvec(&x).unwrap(), vec![0.0; 3]);
        assert!(SparseMatrix::identity(2).matvec(&x).is_err());
    }

    #[test]
    fn matmul_and_transpose_agree_with_dense() {
        let a = SparseMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, -1.0), (2, 1, 3.0)])
            .unwrap();
        let b = SparseMatrix::from_triplets(2, 3, &[(0, 2, 5.0), (1, 0, 1.0), (1, 1, -2.0)]).unwrap();
        let p = a.matmul(&b).unwrap().to_dense();
        let q = a.to_dense().matmul(&b.to_dense());
        assert_eq!(p, q);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
    }
}
