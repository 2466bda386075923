//! Compressed sparse row matrices.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::Vector;

/// CSR matrix: `row_ptr[i]..row_ptr[i+1]` indexes the entries of row `i`,
/// with strictly increasing column indices inside each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<P: Real> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<P>,
}

impl<P: Real> CsrMatrix<P> {
    /// Validating constructor; every CSR structural invariant is enforced.
    pub fn new(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<P>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 {
            return Err(Error::InvalidCsr(format!(
                "row_ptr length {} != rows + 1 = {}",
                row_ptr.len(),
                rows + 1
            )));
        }
        if row_ptr[0] != 0 {
            return Err(Error::InvalidCsr("row_ptr[0] != 0".into()));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidCsr("row_ptr not nondecreasing".into()));
        }
        let nnz = row_ptr[rows];
        if col_idx.len() != nnz || values.len() != nnz {
            return Err(Error::InvalidCsr(format!(
                "nnz mismatch: row_ptr says {}, col_idx has {}, values has {}",
                nnz,
                col_idx.len(),
                values.len()
            )));
        }
        for i in 0..rows {
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidCsr(format!(
                        "row {i}: column indices not strictly increasing"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last >= cols {
                    return Err(Error::InvalidCsr(format!(
                        "row {i}: column index {last} out of bounds (cols = {cols})"
                    )));
                }
            }
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Build from unordered (row, col, value) triplets. Duplicate positions
    /// are summed, the usual MatrixMarket convention.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, P)]) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::InvalidCsr(format!(
                    "triplet ({i}, {j}) out of bounds for {rows}x{cols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, P)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_of = Vec::with_capacity(sorted.len());
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<P> = Vec::with_capacity(sorted.len());
        for (i, j, v) in sorted {
            if let (Some(&li), Some(&lj)) = (row_of.last(), col_idx.last()) {
                if li == i && lj == j {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            row_of.push(i);
            col_idx.push(j);
            values.push(v);
        }

        let mut row_ptr = vec![0usize; rows + 1];
        for &i in &row_of {
            row_ptr[i + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(rows, cols, row_ptr, col_idx, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[P] {
        &self.values
    }

    /// Entries of row `i` as parallel (column, value) slices.
    pub fn row(&self, i: usize) -> (&[usize], &[P]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Bytes held by the value array alone (what changes under demotion).
    pub fn value_bytes(&self) -> usize {
        self.values.len() * std::mem::size_of::<P>()
    }

    /// Bytes held by all three arrays.
    pub fn bytes(&self) -> usize {
        self.value_bytes() + (self.row_ptr.len() + self.col_idx.len()) * std::mem::size_of::<usize>()
    }

    /// `y = A x` in O(nnz).
    pub fn matvec(&self, x: &Vector<P>) -> Result<Vector<P>> {
        Error::check_dims(self.cols, x.len())?;
        let mut y = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let mut acc = P::ZERO;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y.push(acc);
        }
        P::record_flops(2 * self.nnz() as u64);
        Ok(Vector::from_raw(y))
    }

    /// `y = A^T x` in O(nnz).
    pub fn matvec_transpose(&self, x: &Vector<P>) -> Result<Vector<P>> {
        Error::check_dims(self.rows, x.len())?;
        let mut y = vec![P::ZERO; self.cols];
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let xi = x[i];
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        P::record_flops(2 * self.nnz() as u64);
        Ok(Vector::from_raw(y))
    }

    /// Round every value to precision `L`; structure is shared unchanged.
    pub fn demote<L: Real>(&self) -> Result<CsrMatrix<L>> {
        let mut out = Vec::with_capacity(self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            let w = v.to_f64();
            if w.abs() > L::MAX_FINITE {
                return Err(Error::OverflowOnDemotion { index: i, value: w });
            }
            out.push(L::from_f64(w));
        }
        Ok(CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: out,
        })
    }

    pub fn promote<H: Real>(&self) -> CsrMatrix<H> {
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| H::from_f64(v.to_f64())).collect(),
        }
    }

    /// Dense copy, for small oracles and the dense solver paths.
    pub fn to_dense(&self) -> crate::dense::DenseMatrix<P> {
        let mut a = crate::dense::DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                a.set(i, j, v);
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CsrMatrix<f64> {
        // [[1, 0, 2],
        //  [0, 3, 0]]
        CsrMatrix::new(2, 3, vec![0, 2, 3], vec![0, 2, 1], vec![1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn matvec_matches_dense() {
        let a = small();
        let x = Vector::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(a.matvec(&x).unwrap().as_slice(), &[3.0, 3.0]);
        let y = Vector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(a.matvec_transpose(&y).unwrap().as_slice(), &[1.0, 6.0, 2.0]);
    }

    #[test]
    fn from_triplets_sums_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0f64), (1, 1, 2.0), (0, 0, 0.5)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.values(), &[1.5, 2.0]);
        assert_eq!(a.row_ptr(), &[0, 1, 2]);
    }

    #[test]
    fn rejects_bad_row_ptr() {
        assert!(CsrMatrix::new(2, 2, vec![1, 1, 2], vec![0, 1], vec![1.0f64, 1.0]).is_err());
        assert!(CsrMatrix::new(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0f64, 1.0]).is_err());
        assert!(CsrMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0f64]).is_err());
    }

    #[test]
    fn rejects_unsorted_or_out_of_bounds_columns() {
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0f64, 1.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![1, 1], vec![1.0f64, 1.0]).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 1], vec![5], vec![1.0f64]).is_err());
    }

    #[test]
    fn demote_preserves_structure() {
        let a = small();
        let low: CsrMatrix<f32> = a.demote().unwrap();
        assert_eq!(low.row_ptr(), a.row_ptr());
        assert_eq!(low.col_idx(), a.col_idx());
        assert_eq!(low.promote::<f64>(), a);
    }

    #[test]
    fn to_dense_round_trip() {
        let a = small();
        let d = a.to_dense();
        assert_eq!(d.get(0, 2), 2.0);
        assert_eq!(d.get(1, 1), 3.0);
        assert_eq!(d.get(1, 0), 0.0);
    }
}
