//! Operator abstraction over dense and sparse matrices, plus the
//! power-iteration spectral norm estimate shared by the stopping rules.

use crate::csr::CsrMatrix;
use crate::dense::DenseMatrix;
use crate::rng::Rng;
use crate::scalar::Real;
use crate::vector::Vector;

/// Anything that can act as the coefficient operator of a Krylov solve.
///
/// `apply` panics on a dimension mismatch; drivers validate shapes once at
/// entry and the inner loops rely on it.
pub trait Operator<P: Real>: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &Vector<P>) -> Vector<P>;

    /// `y = A^T x`.
    fn apply_transpose(&self, x: &Vector<P>) -> Vector<P>;

    /// Stored nonzeros (`rows * cols` for dense).
    fn nnz(&self) -> usize;

    /// Bytes of matrix storage, for the memory accounting.
    fn matrix_bytes(&self) -> usize;
}

impl<P: Real> Operator<P> for DenseMatrix<P> {
    fn rows(&self) -> usize {
        DenseMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        DenseMatrix::cols(self)
    }

    fn apply(&self, x: &Vector<P>) -> Vector<P> {
        self.matvec(x).expect("operator dimension mismatch")
    }

    fn apply_transpose(&self, x: &Vector<P>) -> Vector<P> {
        self.matvec_transpose(x).expect("operator dimension mismatch")
    }

    fn nnz(&self) -> usize {
        DenseMatrix::rows(self) * DenseMatrix::cols(self)
    }

    fn matrix_bytes(&self) -> usize {
        self.bytes()
    }
}

impl<P: Real> Operator<P> for CsrMatrix<P> {
    fn rows(&self) -> usize {
        CsrMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        CsrMatrix::cols(self)
    }

    fn apply(&self, x: &Vector<P>) -> Vector<P> {
        self.matvec(x).expect("operator dimension mismatch")
    }

    fn apply_transpose(&self, x: &Vector<P>) -> Vector<P> {
        self.matvec_transpose(x).expect("operator dimension mismatch")
    }

    fn nnz(&self) -> usize {
        CsrMatrix::nnz(self)
    }

    fn matrix_bytes(&self) -> usize {
        self.bytes()
    }
}

/// Power-iteration estimate of the spectral norm `||A||_2`, via products
/// with `A^T A`. The estimate is a lower bound that is nondecreasing in the
/// iteration count; 50 iterations with a fixed seed is plenty for its use as
/// a stopping-criterion scale factor.
pub fn spectral_norm_estimate<A>(a: &A, iters: usize, seed: u64) -> f64
where
    A: Operator<f64> + ?Sized,
{
    assert!(iters >= 1);
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let mut rng = Rng::new(seed);
    let mut v = Vector::from_raw((0..a.cols()).map(|_| rng.next_normal()).collect());
    let nv = v.norm2();
    if nv == 0.0 {
        return 0.0;
    }
    v.scale(1.0 / nv);

    let mut estimate = 0.0;
    for _ in 0..iters {
        let w = a.apply(&v);
        let s = w.norm2();
        if s == 0.0 {
            // v is (numerically) in the null space; for the zero matrix the
            // answer is exact, otherwise the estimate so far stands.
            return estimate;
        }
        estimate = s;
        let mut u = a.apply_transpose(&w);
        let nu = u.norm2();
        if nu == 0.0 {
            return estimate;
        }
        u.scale(1.0 / nu);
        v = u;
    }
    estimate
}

/// Default iteration count used when callers do not care to tune it.
pub const SPECTRAL_NORM_ITERS: usize = 50;

/// Default seed for the cached norm estimate inside the solvers.
pub const SPECTRAL_NORM_SEED: u64 = 0x005e_eda0;
