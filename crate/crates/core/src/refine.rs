//! Mixed-precision iterative refinement for direct solvers.
//!
//! The driver demotes the coefficient matrix, factors it in low precision,
//! and then repeats: high-precision residual, low-precision correction
//! solve, high-precision update. The factorization is the only O(n^3) step
//! and runs entirely in the low precision; everything the high precision
//! touches is O(n^2).
//!
//! Convergence requires `kappa(A) * eps_low < 1`. Past that boundary the
//! iteration diverges and the driver reports failure at the iteration cap;
//! on a hard factorization failure (exact zero pivot, indefinite matrix) it
//! returns [`Error::FallbackRequired`] so the caller can rerun with
//! [`solve_reference`].

use std::time::Instant;

use crate::audit;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::factor::{self, CholeskyFactor, LuFactors};
use crate::operator::{spectral_norm_estimate, SPECTRAL_NORM_ITERS, SPECTRAL_NORM_SEED};
use crate::report::SolveReport;
use crate::scalar::{PrecisionPair, Real};
use crate::vector::Vector;

/// Which low-precision factorization backs the refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Lu,
    Cholesky,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Lu => "lu",
            Backend::Cholesky => "cholesky",
        }
    }
}

/// When to declare the refined solution done.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// The normwise backward-error inequality
    /// `||b - Ax||_2 <= ||x||_2 * ||A||_2 * eps_d * sqrt(n)`.
    BackwardError,
    /// Stop once the iterate's backward error is within the given factor of
    /// the full high-precision solver's backward error on the same system.
    /// The reference solution is computed up front with the same backend.
    MatchReference(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrConfig {
    pub max_iters: usize,
    pub stop_rule: StopRule,
    pub backend: Backend,
}

impl Default for IrConfig {
    fn default() -> Self {
        Self {
            max_iters: 30,
            stop_rule: StopRule::BackwardError,
            backend: Backend::Lu,
        }
    }
}

impl IrConfig {
    pub fn with_backend(backend: Backend) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }
}

enum Factors<P: Real> {
    Lu(LuFactors<P>),
    Cholesky(CholeskyFactor<P>),
}

impl<P: Real> Factors<P> {
    fn compute(a: DenseMatrix<P>, backend: Backend) -> Result<Self> {
        match backend {
            Backend::Lu => factor::lu_factor(a).map(Factors::Lu),
            Backend::Cholesky => factor::cholesky_factor(a).map(Factors::Cholesky),
        }
    }

    fn solve(&self, b: &Vector<P>) -> Result<Vector<P>> {
        match self {
            Factors::Lu(f) => factor::lu_solve(f, b),
            Factors::Cholesky(f) => factor::cholesky_solve(f, b),
        }
    }

    fn bytes(&self) -> usize {
        match self {
            Factors::Lu(f) => f.bytes(),
            Factors::Cholesky(f) => f.bytes(),
        }
    }
}

/// `r = b - A x`, computed entirely in high precision against the original
/// matrix.
pub fn residual(
    a: &DenseMatrix<f64>,
    x: &Vector<f64>,
    b: &Vector<f64>,
) -> Result<Vector<f64>> {
    Error::check_dims(a.cols(), x.len())?;
    Error::check_dims(a.rows(), b.len())?;
    let ax = a.matvec(x)?;
    let mut r = b.clone();
    r.axpy(-1.0, &ax);
    Ok(r)
}

/// The backward-error stopping inequality:
/// `r_norm <= x_norm * a_norm * eps * sqrt(n)` (inclusive).
pub fn backward_stop(r_norm: f64, x_norm: f64, a_norm: f64, n: usize, eps: f64) -> bool {
    assert!(n >= 1);
    r_norm <= x_norm * a_norm * eps * (n as f64).sqrt()
}

/// Predicted refinement iteration count as a function of the condition
/// number, `ceil(ln(eps_d) / (ln(eps_s) + ln(kappa)))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DattaPrediction {
    Converges(usize),
    /// `kappa * eps_s >= 1`: the formula is out of its validity range and
    /// the method does not converge.
    Divergent,
}

pub fn datta_iterations(pp: &PrecisionPair, kappa: f64) -> DattaPrediction {
    assert!(kappa >= 1.0, "condition numbers are at least 1");
    let denom = pp.eps_s.ln() + kappa.ln();
    if denom >= 0.0 {
        return DattaPrediction::Divergent;
    }
    DattaPrediction::Converges((pp.eps_d.ln() / denom).ceil() as usize)
}

/// The same factorization kernels run entirely in one precision: the
/// accuracy baseline (P = f64) and the fallback path, and with P = f32 the
/// pure low-precision solver the benchmarks time.
pub fn solve_reference<P: Real>(
    a: &DenseMatrix<P>,
    b: &Vector<P>,
    backend: Backend,
) -> Result<Vector<P>> {
    assert!(a.is_square(), "solver requires a square matrix");
    Error::check_dims(a.rows(), b.len())?;
    let f = Factors::compute(a.clone(), backend)?;
    f.solve(b)
}

/// Backward error `||r|| / ||x||` with the convention that a zero iterate
/// has error 0 when the residual is also zero, and infinite otherwise.
fn residual_over_x(r_norm: f64, x_norm: f64) -> f64 {
    if x_norm == 0.0 {
        if r_norm == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        r_norm / x_norm
    }
}

enum StopTarget {
    Backward { eps: f64 },
    Reference { max_residual_over_x: f64 },
}

impl StopTarget {
    fn holds(&self, r_norm: f64, x_norm: f64, a_norm: f64, n: usize) -> bool {
        match self {
            StopTarget::Backward { eps } => backward_stop(r_norm, x_norm, a_norm, n, *eps),
            StopTarget::Reference { max_residual_over_x } => {
                residual_over_x(r_norm, x_norm) <= *max_residual_over_x
            }
        }
    }
}

/// Mixed-precision iterative refinement.
///
/// `L` is the low precision the factorization runs in; the matrix and
/// right-hand side stay in f64 and every residual and solution update is
/// carried out against them. Returns the refined high-precision solution
/// and the solve telemetry; non-convergence at the iteration cap is reported
/// through `SolveReport::converged`, not as an error.
pub fn ir_solve<L: Real>(
    a: &DenseMatrix<f64>,
    b: &Vector<f64>,
    cfg: &IrConfig,
) -> Result<(Vector<f64>, SolveReport)> {
    assert!(a.is_square(), "ir_solve requires a square matrix");
    assert!(cfg.max_iters >= 1);
    Error::check_dims(a.rows(), b.len())?;
    let n = a.rows();

    let t_total = Instant::now();
    let mut report = SolveReport::new(PrecisionPair::of::<L, f64>());
    report.high_bytes = a.bytes();

    // Steps 1-3: demote, factor, and produce x0, all in low precision.
    let t_factor = Instant::now();
    let a_low: DenseMatrix<L> = a.demote()?;
    report.low_bytes = a_low.bytes();
    let factors = match Factors::compute(a_low, cfg.backend) {
        Ok(f) => f,
        Err(
            e @ (Error::SingularPivot(_)
            | Error::NotPositiveDefinite(_)
            | Error::NotSymmetric),
        ) => return Err(Error::FallbackRequired(Box::new(e))),
        Err(e) => return Err(e),
    };
    let b_low: Vector<L> = b.demote()?;
    let x_low = factors.solve(&b_low)?;
    let mut x: Vector<f64> = x_low.promote();
    report.factor_seconds = t_factor.elapsed().as_secs_f64();

    let a_norm_est = spectral_norm_estimate(a, SPECTRAL_NORM_ITERS, SPECTRAL_NORM_SEED);
    report.a_norm_est = a_norm_est;

    let target = match cfg.stop_rule {
        StopRule::BackwardError => StopTarget::Backward {
            eps: f64::UNIT_ROUNDOFF,
        },
        StopRule::MatchReference(tolerance_factor) => {
            assert!(tolerance_factor >= 1.0);
            let x_ref = solve_reference(a, b, cfg.backend)?;
            let r_ref = residual(a, &x_ref, b)?;
            StopTarget::Reference {
                max_residual_over_x: tolerance_factor
                    * residual_over_x(r_ref.norm2(), x_ref.norm2()),
            }
        }
    };

    // Step 4 (and later 7) must not touch low-precision arithmetic; the
    // audit counters prove it.
    let mut low_in_high: u64 = 0;
    let snap = audit::snapshot();
    let mut r = residual(a, &x, b)?;
    let mut r_norm = r.norm2();
    low_in_high += audit::low_since(snap);
    report.residual_norms.push(r_norm);

    let mut converged = target.holds(r_norm, x.norm2(), a_norm_est, n);
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iters && r_norm.is_finite() {
        let t_iter = Instant::now();

        // Steps 5-6: correction solve in low precision. The residual is
        // scaled to unit max magnitude before demotion so it can neither
        // overflow the low range while diverging nor underflow it once the
        // residual is tiny; the scale is reapplied in high precision.
        let scale = r.norm_inf();
        if scale == 0.0 {
            converged = true;
            break;
        }
        let mut r_scaled = r.clone();
        r_scaled.scale(1.0 / scale);
        let r_low: Vector<L> = r_scaled.demote()?;
        let z_low = factors.solve(&r_low)?;
        let mut z: Vector<f64> = z_low.promote();
        z.scale(scale);

        // Step 7: solution update in high precision.
        let snap = audit::snapshot();
        x.axpy(1.0, &z);
        // Step 4: fresh residual in high precision.
        r = residual(a, &x, b)?;
        r_norm = r.norm2();
        low_in_high += audit::low_since(snap);

        report.residual_norms.push(r_norm);
        report.iter_seconds.push(t_iter.elapsed().as_secs_f64());
        iterations += 1;
        converged = r_norm.is_finite() && target.holds(r_norm, x.norm2(), a_norm_est, n);
    }

    debug_assert_eq!(low_in_high, 0, "low-precision flops leaked into steps 4/7");
    report.low_flops_in_high_phases = low_in_high;
    report.iterations = iterations;
    report.converged = converged;
    report.total_seconds = t_total.elapsed().as_secs_f64();
    let _ = factors.bytes(); // factors live for the whole solve
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn residual_examples() {
        let a = DenseMatrix::from_rows(&[&[2.0f64, 1.0], &[1.0, 3.0]]);
        let b = Vector::new(vec![3.0, 4.0]).unwrap();
        // x = 0 -> r = b
        let r = residual(&a, &Vector::zeros(2), &b).unwrap();
        assert_eq!(r, b);
        // A = I, x = b -> r = 0
        let i = DenseMatrix::<f64>::identity(2);
        let r = residual(&i, &b, &b).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 0.0]);
        // substitution: x = [1,1] solves exactly
        let x = Vector::new(vec![1.0, 1.0]).unwrap();
        let r = residual(&a, &x, &b).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_stop_examples() {
        // zero residual always passes
        assert!(backward_stop(0.0, 1.0, 2.0, 5, 1e-16));
        // violation by a factor of 2
        let n = 4;
        let (x, a, eps) = (3.0, 7.0, 1e-10);
        let bound = x * a * eps * (n as f64).sqrt();
        assert!(!backward_stop(2.0 * bound, x, a, n, eps));
        // the boundary is inclusive
        assert!(backward_stop(bound, x, a, n, eps));
    }

    #[test]
    fn datta_formula_examples() {
        // double/double special case
        let dd = PrecisionPair::new(2f64.powi(-53), 2f64.powi(-53));
        assert_eq!(datta_iterations(&dd, 10.0), DattaPrediction::Converges(2));
        // single/double at kappa = 1e4
        let sd = PrecisionPair::single_double();
        assert_eq!(datta_iterations(&sd, 1e4), DattaPrediction::Converges(5));
        // past the validity boundary
        assert_eq!(datta_iterations(&sd, 1e8), DattaPrediction::Divergent);
    }

    #[test]
    fn identity_converges_immediately() {
        let a = DenseMatrix::<f64>::identity(8);
        let b = Vector::from_fn(8, |i| (i as f64 + 1.0) * 0.37);
        let (x, report) = ir_solve::<f32>(&a, &b, &IrConfig::default()).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 1, "iterations {}", report.iterations);
        for (xi, bi) in x.iter().zip(b.iter()) {
            assert!((xi - bi).abs() <= 1e-13);
        }
    }

    #[test]
    fn random_system_refines_to_double_accuracy() {
        let mut rng = Rng::new(11);
        let n = 40;
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.next_normal());
        let x_true = Vector::from_fn(n, |_| rng.next_normal());
        let b = a.matvec(&x_true).unwrap();
        let (x, report) = ir_solve::<f32>(&a, &b, &IrConfig::default()).unwrap();
        assert!(report.converged, "no convergence: {:?}", report.residual_norms);
        assert_eq!(report.low_flops_in_high_phases, 0);
        let err: f64 = x
            .iter()
            .zip(x_true.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err / x_true.norm2() < 1e-10, "forward error {err}");
        // residual history must start with the initial iterate's residual
        assert_eq!(report.residual_norms.len(), report.iterations + 1);
    }

    #[test]
    fn memory_accounting_is_three_halves() {
        let mut rng = Rng::new(5);
        let n = 32;
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.next_normal());
        let b = Vector::from_fn(n, |_| rng.next_normal());
        let (_, report) = ir_solve::<f32>(&a, &b, &IrConfig::default()).unwrap();
        assert_eq!(report.high_bytes, n * n * 8);
        assert_eq!(report.low_bytes, n * n * 4);
        let ratio = report.matrix_bytes() as f64 / report.high_bytes as f64;
        assert!((ratio - 1.5).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_requests_fallback() {
        let a = DenseMatrix::from_rows(&[&[0.0f64, 1.0], &[0.0, 2.0]]);
        let b = Vector::new(vec![1.0, 2.0]).unwrap();
        match ir_solve::<f32>(&a, &b, &IrConfig::default()) {
            Err(Error::FallbackRequired(cause)) => {
                assert!(matches!(*cause, Error::SingularPivot(0)));
            }
            other => panic!("expected FallbackRequired, got {other:?}"),
        }
    }

    #[test]
    fn solve_reference_examples() {
        let i = DenseMatrix::<f64>::identity(3);
        let b = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(solve_reference(&i, &b, Backend::Lu).unwrap(), b);

        let a = DenseMatrix::from_rows(&[&[2.0f64, 1.0], &[1.0, 3.0]]);
        let b = Vector::new(vec![3.0, 4.0]).unwrap();
        let x = solve_reference(&a, &b, Backend::Lu).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn divergent_regime_reports_failure_at_cap() {
        // kappa * eps_s > 1: no convergence, capped iteration count, no error
        let a = crate::experiments::gen_prescribed_cond(100, 1e9, 8);
        let b = Vector::from_fn(100, |i| (i as f64).sin());
        let (_, report) = ir_solve::<f32>(&a, &b, &IrConfig::default()).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 30);
        assert_eq!(report.residual_norms.len(), 31);
    }

    #[test]
    fn match_reference_stop_rule_converges() {
        let mut rng = Rng::new(17);
        let n = 30;
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.next_normal());
        let b = Vector::from_fn(n, |_| rng.next_normal());
        let cfg = IrConfig {
            stop_rule: StopRule::MatchReference(2.0),
            ..IrConfig::default()
        };
        let (_, report) = ir_solve::<f32>(&a, &b, &cfg).unwrap();
        assert!(report.converged);
    }
}
