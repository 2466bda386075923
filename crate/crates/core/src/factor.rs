//! Low-precision dense factorizations: LU with partial pivoting and
//! Cholesky, plus their triangular solves.
//!
//! The kernels are unblocked and right-looking. They are generic over the
//! scalar so the same code serves as the fast low-precision path and, when
//! instantiated with the high precision, as the reference solver. The
//! factorization consumes its argument and overwrites it in place; the
//! refinement driver hands it a demoted copy and keeps the high-precision
//! original untouched.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::scalar::Real;
use crate::vector::Vector;

/// Packed LU factors: strictly-lower multipliers (unit diagonal implicit)
/// and U stored in one matrix, plus the row permutation.
#[derive(Debug, Clone)]
pub struct LuFactors<P: Real> {
    packed: DenseMatrix<P>,
    perm: Permutation,
}

impl<P: Real> LuFactors<P> {
    pub fn n(&self) -> usize {
        self.packed.rows()
    }

    pub fn packed(&self) -> &DenseMatrix<P> {
        &self.packed
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    /// Multiply the factors back together: returns `L * U`, which should
    /// reconstruct `P * A` up to roundoff.
    pub fn reconstruct(&self) -> DenseMatrix<P> {
        let n = self.n();
        DenseMatrix::from_fn(n, n, |i, j| {
            let mut acc = P::ZERO;
            // L has unit diagonal; L[i,k] is packed below the diagonal.
            let kmax = i.min(j);
            for k in 0..=kmax {
                let l = if k == i { P::ONE } else { self.packed.get(i, k) };
                let u = if k <= j { self.packed.get(k, j) } else { P::ZERO };
                acc += l * u;
            }
            acc
        })
    }

    pub fn bytes(&self) -> usize {
        self.packed.bytes()
    }
}

/// Gaussian elimination with partial pivoting. At column `k` the pivot is
/// the largest-magnitude entry on or below the diagonal; ties go to the
/// smallest row index. An exactly zero pivot is an error — callers fall back
/// to the high-precision solver rather than continuing with a perturbed one.
pub fn lu_factor<P: Real>(mut a: DenseMatrix<P>) -> Result<LuFactors<P>> {
    assert!(a.is_square(), "lu_factor requires a square matrix");
    let n = a.rows();
    assert!(n >= 1);
    let mut pivots = Vec::with_capacity(n);
    let mut flops: u64 = 0;

    for k in 0..n {
        let mut p = k;
        let mut best = a.get(k, k).abs();
        for i in (k + 1)..n {
            let v = a.get(i, k).abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if a.get(p, k) == P::ZERO {
            return Err(Error::SingularPivot(k));
        }
        pivots.push(p);
        if p != k {
            for j in 0..n {
                let tmp = a.get(k, j);
                a.set(k, j, a.get(p, j));
                a.set(p, j, tmp);
            }
        }

        let pivot = a.get(k, k);
        for i in (k + 1)..n {
            let m = a.get(i, k) / pivot;
            debug_assert!(m.abs() <= P::ONE, "multiplier above 1 after pivoting");
            a.set(i, k, m);
        }
        for j in (k + 1)..n {
            let (col_k, col_j) = a.cols_mut2(k, j);
            let akj = col_j[k];
            for i in (k + 1)..n {
                col_j[i] -= col_k[i] * akj;
            }
        }
        let r = (n - k - 1) as u64;
        flops += r + 2 * r * r;
    }
    P::record_flops(flops);

    Ok(LuFactors {
        packed: a,
        perm: Permutation::from_pivots(pivots),
    })
}

/// Forward- and back-substitute through the packed LU factors:
/// `L y = P b`, then `U x = y`.
pub fn lu_solve<P: Real>(f: &LuFactors<P>, b: &Vector<P>) -> Result<Vector<P>> {
    let n = f.n();
    Error::check_dims(n, b.len())?;
    let mut x = b.clone();
    f.perm.apply(x.as_mut_slice());

    // Ly = Pb with unit lower-triangular L, column-oriented.
    for j in 0..n {
        let xj = x[j];
        if xj != P::ZERO {
            let col = f.packed.col(j);
            for i in (j + 1)..n {
                x[i] -= col[i] * xj;
            }
        }
    }
    // Ux = y.
    for j in (0..n).rev() {
        let col = f.packed.col(j);
        x[j] /= col[j];
        let xj = x[j];
        if xj != P::ZERO {
            for i in 0..j {
                x[i] -= col[i] * xj;
            }
        }
    }
    P::record_flops(2 * (n * n) as u64);
    Ok(x)
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor<P: Real> {
    lower: DenseMatrix<P>,
}

impl<P: Real> CholeskyFactor<P> {
    pub fn n(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &DenseMatrix<P> {
        &self.lower
    }

    /// `L * L^T`, which should reconstruct the input up to roundoff.
    pub fn reconstruct(&self) -> DenseMatrix<P> {
        let n = self.n();
        DenseMatrix::from_fn(n, n, |i, j| {
            let mut acc = P::ZERO;
            for k in 0..=i.min(j) {
                acc += self.lower.get(i, k) * self.lower.get(j, k);
            }
            acc
        })
    }

    pub fn bytes(&self) -> usize {
        self.lower.bytes()
    }
}

/// Right-looking Cholesky. The input must be symmetric to working precision;
/// a nonpositive diagonal update at column `k` reports which column failed.
pub fn cholesky_factor<P: Real>(mut a: DenseMatrix<P>) -> Result<CholeskyFactor<P>> {
    assert!(a.is_square(), "cholesky_factor requires a square matrix");
    let n = a.rows();
    assert!(n >= 1);
    if !a.is_symmetric(10.0 * (n as f64) * P::UNIT_ROUNDOFF) {
        return Err(Error::NotSymmetric);
    }
    let mut flops: u64 = 0;

    for k in 0..n {
        let d = a.get(k, k);
        if d <= P::ZERO {
            return Err(Error::NotPositiveDefinite(k));
        }
        let l = d.sqrt();
        a.set(k, k, l);
        for i in (k + 1)..n {
            let v = a.get(i, k) / l;
            a.set(i, k, v);
        }
        for j in (k + 1)..n {
            let (col_k, col_j) = a.cols_mut2(k, j);
            let ljk = col_k[j];
            for i in j..n {
                col_j[i] -= col_k[i] * ljk;
            }
        }
        let r = (n - k - 1) as u64;
        flops += r + 1 + r * (r + 1);
    }
    P::record_flops(flops);

    // Zero the strictly upper part so the factor is cleanly triangular.
    for j in 1..n {
        for i in 0..j {
            a.set(i, j, P::ZERO);
        }
    }

    Ok(CholeskyFactor { lower: a })
}

/// Two triangular solves: `L y = b`, then `L^T x = y`.
pub fn cholesky_solve<P: Real>(f: &CholeskyFactor<P>, b: &Vector<P>) -> Result<Vector<P>> {
    let n = f.n();
    Error::check_dims(n, b.len())?;
    let mut x = b.clone();

    for j in 0..n {
        let col = f.lower.col(j);
        x[j] /= col[j];
        let xj = x[j];
        if xj != P::ZERO {
            for i in (j + 1)..n {
                x[i] -= col[i] * xj;
            }
        }
    }
    for j in (0..n).rev() {
        // (L^T)[i, j] = L[j, i]
        let mut acc = x[j];
        for i in (j + 1)..n {
            acc -= f.lower.get(i, j) * x[i];
        }
        x[j] = acc / f.lower.get(j, j);
    }
    P::record_flops(2 * (n * n) as u64);
    Ok(x)
}
