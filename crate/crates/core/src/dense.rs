//! Dense column-major matrices.
//!
//! Column-major storage matches the access pattern of the factorization
//! kernels: elimination walks down columns, and the matrix-vector product is
//! a sequence of column axpys.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<P: Real> {
    rows: usize,
    cols: usize,
    data: Vec<P>,
}

impl<P: Real> DenseMatrix<P> {
    /// Validating constructor from column-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<P>) -> Result<Self> {
        Error::check_dims(rows * cols, data.len())?;
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![P::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, P::ONE);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> P) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Row-major literal, convenient in tests: `from_rows(&[&[4.0, 3.0], &[6.0, 3.0]])`.
    pub fn from_rows(rows: &[&[P]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c));
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> P {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: P) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[P] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [P] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Two columns as disjoint mutable slices, `j0 < j1`.
    pub(crate) fn cols_mut2(&mut self, j0: usize, j1: usize) -> (&mut [P], &mut [P]) {
        debug_assert!(j0 < j1 && j1 < self.cols);
        let (a, b) = self.data.split_at_mut(j1 * self.rows);
        (
            &mut a[j0 * self.rows..(j0 + 1) * self.rows],
            &mut b[..self.rows],
        )
    }

    pub fn as_slice(&self) -> &[P] {
        &self.data
    }

    pub fn bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<P>()
    }

    /// `y = A x`, accumulated in precision `P` column by column.
    pub fn matvec(&self, x: &Vector<P>) -> Result<Vector<P>> {
        Error::check_dims(self.cols, x.len())?;
        let mut y = vec![P::ZERO; self.rows];
        for j in 0..self.cols {
            let xj = x[j];
            for (yi, aij) in y.iter_mut().zip(self.col(j)) {
                *yi += *aij * xj;
            }
        }
        P::record_flops(2 * (self.rows * self.cols) as u64);
        Ok(Vector::from_raw(y))
    }

    /// `y = A^T x`; each output entry is one column dot product.
    pub fn matvec_transpose(&self, x: &Vector<P>) -> Result<Vector<P>> {
        Error::check_dims(self.rows, x.len())?;
        let mut y = Vec::with_capacity(self.cols);
        for j in 0..self.cols {
            let mut acc = P::ZERO;
            for (aij, xi) in self.col(j).iter().zip(x.iter()) {
                acc += *aij * *xi;
            }
            y.push(acc);
        }
        P::record_flops(2 * (self.rows * self.cols) as u64);
        Ok(Vector::from_raw(y))
    }

    /// Largest entry magnitude (the max norm), in f64.
    pub fn norm_max(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.to_f64().abs()))
    }

    /// Infinity norm: max absolute row sum, accumulated in f64.
    pub fn norm_inf(&self) -> f64 {
        let mut row_sums = vec![0.0f64; self.rows];
        for j in 0..self.cols {
            for (s, v) in row_sums.iter_mut().zip(self.col(j)) {
                *s += v.to_f64().abs();
            }
        }
        row_sums.into_iter().fold(0.0, f64::max)
    }

    /// Round every entry to precision `L`, preserving shape.
    pub fn demote<L: Real>(&self) -> Result<DenseMatrix<L>> {
        let mut out = Vec::with_capacity(self.data.len());
        for (i, v) in self.data.iter().enumerate() {
            let w = v.to_f64();
            if w.abs() > L::MAX_FINITE {
                return Err(Error::OverflowOnDemotion { index: i, value: w });
            }
            out.push(L::from_f64(w));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: out,
        })
    }

    /// Widen every entry to precision `H`.
    pub fn promote<H: Real>(&self) -> DenseMatrix<H> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| H::from_f64(v.to_f64())).collect(),
        }
    }

    /// Symmetry check with tolerance `tol * max|A|`.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.norm_max();
        for j in 0..self.cols {
            for i in (j + 1)..self.rows {
                let d = (self.get(i, j).to_f64() - self.get(j, i).to_f64()).abs();
                if d > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matvec() {
        let a = DenseMatrix::<f64>::identity(3);
        let x = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.matvec(&x).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn matvec_zero_vector() {
        let a = DenseMatrix::from_rows(&[&[1.0f64, 2.0], &[3.0, 4.0]]);
        let x = Vector::<f64>::zeros(2);
        assert_eq!(a.matvec(&x).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn matvec_hand_checked_row_sums() {
        let a = DenseMatrix::from_rows(&[&[1.0f64, 2.0], &[3.0, 4.0]]);
        let x = Vector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(a.matvec(&x).unwrap().as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = DenseMatrix::<f64>::identity(3);
        let x = Vector::<f64>::zeros(2);
        assert!(matches!(
            a.matvec(&x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn transpose_product() {
        let a = DenseMatrix::from_rows(&[&[1.0f64, 2.0], &[3.0, 4.0]]);
        let x = Vector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(a.matvec_transpose(&x).unwrap().as_slice(), &[4.0, 6.0]);
    }

    #[test]
    fn column_major_layout() {
        let a = DenseMatrix::from_rows(&[&[1.0f64, 2.0], &[3.0, 4.0]]);
        assert_eq!(a.as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(a.get(0, 1), 2.0);
    }

    #[test]
    fn rejects_non_finite_and_bad_len() {
        assert!(DenseMatrix::new(2, 2, vec![1.0f64, 2.0, 3.0]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0f64, f64::NAN]).is_err());
    }

    #[test]
    fn symmetry_probe() {
        let s = DenseMatrix::from_rows(&[&[4.0f64, 2.0], &[2.0, 5.0]]);
        assert!(s.is_symmetric(1e-14));
        let ns = DenseMatrix::from_rows(&[&[4.0f64, 2.0], &[1.0, 5.0]]);
        assert!(!ns.is_symmetric(1e-14));
    }
}
