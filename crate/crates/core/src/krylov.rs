//! Restarted GMRES and the mixed-precision inner-outer FGMRES solver.
//!
//! The outer loop is flexible GMRES in high precision; the preconditioner it
//! applies at every step is one restart cycle of GMRES run on the demoted
//! operator in low precision, solving `A z = v` from a zero initial guess.
//! Right preconditioning keeps the outer residual the true residual of the
//! original system.
//!
//! Residual estimates come from the progressive Givens least-squares
//! recurrence; a solve is declared converged only after the estimate is
//! confirmed by one true high-precision residual, since estimates drift in
//! mixed precision.

use std::time::Instant;

use crate::audit;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::report::SolveReport;
use crate::scalar::{PrecisionPair, Real};
use crate::vector::Vector;

/// Restart sizes: `m_in` for the inner low-precision cycle, `m_out` for the
/// outer flexible method, `m` for the reference GMRES it is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestartConfig {
    pub m_in: usize,
    pub m_out: usize,
    pub m: usize,
}

impl RestartConfig {
    /// `m = 2 * m_out + m_in` equalizes vector memory between the inner-outer
    /// method and the reference GMRES.
    pub fn new(m_in: usize, m_out: usize) -> Self {
        assert!(m_in >= 1 && m_out >= 1);
        Self {
            m_in,
            m_out,
            m: 2 * m_out + m_in,
        }
    }
}

/// Convergence target for the Krylov drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// `||b - Ax||_2 <= value`.
    Absolute(f64),
    /// The backward-error inequality
    /// `||b - Ax||_2 <= ||x||_2 * a_norm * eps * sqrt(n)`, evaluated with the
    /// current iterate's norm.
    Backward { a_norm: f64, eps: f64 },
}

impl Tolerance {
    fn threshold(&self, x_norm: f64, n: usize) -> f64 {
        match self {
            Tolerance::Absolute(t) => *t,
            Tolerance::Backward { a_norm, eps } => x_norm * a_norm * eps * (n as f64).sqrt(),
        }
    }

    fn a_norm(&self) -> f64 {
        match self {
            Tolerance::Absolute(_) => 0.0,
            Tolerance::Backward { a_norm, .. } => *a_norm,
        }
    }
}

/// Progressive Givens QR of an upper-Hessenberg least-squares problem
/// `min || beta e_1 - H y ||_2`, one column at a time. The magnitude of the
/// last rotated right-hand-side entry is the residual estimate.
#[derive(Debug, Clone)]
struct GivensQr {
    /// Rotated (upper-triangular) columns; column j keeps j+1 entries.
    r_cols: Vec<Vec<f64>>,
    cs: Vec<f64>,
    sn: Vec<f64>,
    g: Vec<f64>,
}

impl GivensQr {
    fn new(beta: f64) -> Self {
        Self {
            r_cols: Vec::new(),
            cs: Vec::new(),
            sn: Vec::new(),
            g: vec![beta],
        }
    }

    fn columns(&self) -> usize {
        self.r_cols.len()
    }

    /// Feed Hessenberg column `j` (entries `h[0..=j+1]`); returns the new
    /// residual estimate.
    fn push_column(&mut self, mut col: Vec<f64>) -> f64 {
        let j = self.r_cols.len();
        debug_assert_eq!(col.len(), j + 2);
        for i in 0..j {
            let t = self.cs[i] * col[i] + self.sn[i] * col[i + 1];
            col[i + 1] = -self.sn[i] * col[i] + self.cs[i] * col[i + 1];
            col[i] = t;
        }
        let (h1, h2) = (col[j], col[j + 1]);
        let d = f64::hypot(h1, h2);
        let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (h1 / d, h2 / d) };
        col[j] = d;
        col.truncate(j + 1);
        self.cs.push(c);
        self.sn.push(s);
        self.g.push(-s * self.g[j]);
        self.g[j] *= c;
        self.r_cols.push(col);
        self.estimate()
    }

    fn estimate(&self) -> f64 {
        self.g.last().copied().unwrap_or(0.0).abs()
    }

    /// Back-substitute `R y = g`. A zero rotated diagonal reports which
    /// column is rank deficient.
    fn solve(&self) -> std::result::Result<Vec<f64>, usize> {
        self.solve_first(self.columns())
    }

    /// Back-substitute over the leading `k` columns only. Stored columns are
    /// final once pushed (later rotations touch only later rows), so the
    /// leading block can be solved on its own.
    fn solve_first(&self, k: usize) -> std::result::Result<Vec<f64>, usize> {
        debug_assert!(k <= self.columns());
        let mut y = vec![0.0f64; k];
        for i in (0..k).rev() {
            let mut acc = self.g[i];
            for l in (i + 1)..k {
                acc -= self.r_cols[l][i] * y[l];
            }
            let d = self.r_cols[i][i];
            if d == 0.0 {
                return Err(i);
            }
            y[i] = acc / d;
        }
        Ok(y)
    }

    /// Full solve with the rank-deficient fallback: on an exactly zero
    /// rotated diagonal at column `i`, solve the leading `i` x `i` block and
    /// zero the remaining coefficients.
    fn solve_lenient(&self) -> Vec<f64> {
        let k = self.columns();
        match self.solve() {
            Ok(y) => y,
            Err(i) => {
                let mut y = self.solve_first(i).unwrap_or_else(|_| vec![0.0; i]);
                y.resize(k, 0.0);
                y
            }
        }
    }
}

/// Solve the Hessenberg least-squares problem `min ||beta e_1 - H y||_2` by
/// progressive Givens rotations. `h` is (k+1) x k with zero entries below
/// the first subdiagonal. Returns the minimizer and the residual estimate
/// `|last rotated rhs entry|`.
pub fn hessenberg_lsq(h: &DenseMatrix<f64>, beta: f64) -> Result<(Vec<f64>, f64)> {
    let k = h.cols();
    assert!(k >= 1 && h.rows() == k + 1, "H must be (k+1) x k");
    for j in 0..k {
        for i in (j + 2)..(k + 1) {
            assert!(
                h.get(i, j) == 0.0,
                "H is not upper Hessenberg at ({i}, {j})"
            );
        }
    }
    let mut qr = GivensQr::new(beta);
    for j in 0..k {
        qr.push_column(h.col(j)[..=(j + 1)].to_vec());
    }
    let y = qr.solve().map_err(Error::RankDeficient)?;
    Ok((y, qr.estimate()))
}

/// Modified Gram-Schmidt against `basis`, in place, with one
/// reorthogonalization pass when the norm drops below 1/sqrt(2) of its
/// pre-orthogonalization value. Coefficients are appended to `h_col` in f64.
fn mgs_orthogonalize<P: Real>(w: &mut Vector<P>, basis: &[Vector<P>], h_col: &mut Vec<f64>) -> f64 {
    let pre_norm = w.norm2();
    for v in basis {
        let hij = w.dot(v);
        h_col.push(hij.to_f64());
        w.axpy(-hij, v);
    }
    let mut norm = w.norm2();
    if norm < pre_norm / std::f64::consts::SQRT_2 {
        for (v, h) in basis.iter().zip(h_col.iter_mut()) {
            let c = w.dot(v);
            *h += c.to_f64();
            w.axpy(-c, v);
        }
        norm = w.norm2();
    }
    norm
}

/// Arnoldi state left behind by a GMRES cycle, inspectable by tests and
/// diagnostics: the orthonormal basis, the raw Hessenberg columns, and the
/// Givens least-squares state.
#[derive(Debug)]
pub struct ArnoldiWorkspace<P: Real> {
    basis: Vec<Vector<P>>,
    hessenberg: Vec<Vec<f64>>,
    qr: GivensQr,
}

impl<P: Real> ArnoldiWorkspace<P> {
    /// The orthonormal vectors `v_1 .. v_{k+1}`.
    pub fn basis(&self) -> &[Vector<P>] {
        &self.basis
    }

    /// Raw Hessenberg column `j`: entries `h[0..=j+1]`.
    pub fn hessenberg(&self) -> &[Vec<f64>] {
        &self.hessenberg
    }

    /// Givens rotation coefficients applied so far.
    pub fn givens(&self) -> (&[f64], &[f64]) {
        (&self.qr.cs, &self.qr.sn)
    }

    pub fn residual_estimate(&self) -> f64 {
        self.qr.estimate()
    }
}

impl<P: Real> Drop for ArnoldiWorkspace<P> {
    fn drop(&mut self) {
        P::tally_basis(-(self.basis.len() as i64));
    }
}

/// One restart cycle of GMRES(m) with modified Gram-Schmidt Arnoldi and a
/// progressive Givens least-squares solve. Stops early on happy breakdown
/// (`h_{k+1,k} = 0`) or when the residual estimate reaches `tol`; stagnation
/// just returns the best iterate with its estimate.
pub fn gmres_cycle<P: Real, A: Operator<P> + ?Sized>(
    a: &A,
    b: &Vector<P>,
    x0: &Vector<P>,
    m: usize,
    tol: f64,
) -> (Vector<P>, f64, usize) {
    let (x, est, iters, _) = gmres_cycle_workspace(a, b, x0, m, tol);
    (x, est, iters)
}

/// As [`gmres_cycle`], additionally returning the Arnoldi workspace.
pub fn gmres_cycle_workspace<P: Real, A: Operator<P> + ?Sized>(
    a: &A,
    b: &Vector<P>,
    x0: &Vector<P>,
    m: usize,
    tol: f64,
) -> (Vector<P>, f64, usize, ArnoldiWorkspace<P>) {
    assert!(m >= 1);
    assert_eq!(a.rows(), a.cols(), "operator must be square");
    assert_eq!(a.cols(), x0.len());
    assert_eq!(a.rows(), b.len());

    let ax = a.apply(x0);
    let mut r = b.clone();
    r.axpy(-P::ONE, &ax);
    let beta = r.norm2();
    let mut ws = ArnoldiWorkspace {
        basis: Vec::new(),
        hessenberg: Vec::new(),
        qr: GivensQr::new(beta),
    };
    if beta == 0.0 || beta <= tol {
        return (x0.clone(), beta, 0, ws);
    }

    r.scale(P::from_f64(1.0 / beta));
    ws.basis.push(r);
    P::tally_basis(1);

    let mut k = 0;
    for j in 0..m {
        let mut w = a.apply(&ws.basis[j]);
        let mut h_col = Vec::with_capacity(j + 2);
        let h_next = mgs_orthogonalize(&mut w, &ws.basis, &mut h_col);
        h_col.push(h_next);
        ws.hessenberg.push(h_col.clone());
        let est = ws.qr.push_column(h_col);
        k = j + 1;
        if h_next == 0.0 {
            // Happy breakdown: the solution lies in the current subspace.
            break;
        }
        w.scale(P::from_f64(1.0 / h_next));
        ws.basis.push(w);
        P::tally_basis(1);
        if est <= tol {
            break;
        }
    }

    let y = ws.qr.solve_lenient();
    let mut x = x0.clone();
    for (yj, vj) in y.iter().zip(&ws.basis) {
        x.axpy(P::from_f64(*yj), vj);
    }
    (x, ws.qr.estimate(), k, ws)
}

/// Flexible GMRES with a caller-supplied inner solver. The inner closure
/// receives the outer basis vector `v_k` and returns an approximate solution
/// of `A z = v_k` together with the iteration count it spent. Used with an
/// exact solve it reproduces textbook right preconditioning; [`fgmres_mixed`]
/// wires in the low-precision GMRES cycle.
#[allow(clippy::too_many_arguments)]
pub fn fgmres_with_inner<A, F>(
    a: &A,
    b: &Vector<f64>,
    m_out: usize,
    tol: Tolerance,
    max_outer: usize,
    precision: PrecisionPair,
    low_matrix_bytes: usize,
    mut inner: F,
) -> Result<(Vector<f64>, SolveReport)>
where
    A: Operator<f64> + ?Sized,
    F: FnMut(&Vector<f64>) -> (Vector<f64>, usize),
{
    assert!(m_out >= 1 && max_outer >= 1);
    assert_eq!(a.rows(), a.cols(), "operator must be square");
    let n = a.rows();
    Error::check_dims(n, b.len())?;

    let t_total = Instant::now();
    audit::reset_basis_peaks();
    let mut report = SolveReport::new(precision);
    report.high_bytes = a.matrix_bytes();
    report.low_bytes = low_matrix_bytes;
    report.a_norm_est = tol.a_norm();

    let mut x = Vector::<f64>::zeros(n);
    let mut outer_steps = 0usize;

    loop {
        let t_cycle = Instant::now();
        // True residual at the restart boundary; this is also the
        // confirmation step for any converged estimate from the last cycle.
        let ax = a.apply(&x);
        let mut r = b.clone();
        r.axpy(-1.0, &ax);
        let beta = r.norm2();
        report.residual_norms.push(beta);

        let x_norm = x.norm2();
        if beta <= tol.threshold(x_norm, n) {
            report.converged = true;
            break;
        }
        if outer_steps >= max_outer {
            report.iterations = outer_steps;
            report.total_seconds = t_total.elapsed().as_secs_f64();
            finalize_basis_accounting(&mut report, n);
            let x = x.into_vec();
            return Err(Error::MaxIterationsExceeded {
                x,
                report: Box::new(report),
            });
        }

        // The stop threshold is frozen over the cycle: x only changes at the
        // end of it.
        let threshold = tol.threshold(x_norm, n);
        let mut qr = GivensQr::new(beta);
        r.scale(1.0 / beta);
        let mut v_basis: Vec<Vector<f64>> = vec![r];
        f64::tally_basis(1);
        let mut z_basis: Vec<Vector<f64>> = Vec::new();

        let mut k = 0;
        for j in 0..m_out {
            let (z, inner_iters) = inner(&v_basis[j]);
            report.inner_iterations += inner_iters;
            let mut w = a.apply(&z);
            z_basis.push(z);
            f64::tally_basis(1);

            let mut h_col = Vec::with_capacity(j + 2);
            let h_next = mgs_orthogonalize(&mut w, &v_basis, &mut h_col);
            h_col.push(h_next);
            let est = qr.push_column(h_col);
            k = j + 1;
            outer_steps += 1;

            if h_next == 0.0 {
                // Exact solution in the current space; solve and restart to
                // confirm with a true residual.
                break;
            }
            w.scale(1.0 / h_next);
            v_basis.push(w);
            f64::tally_basis(1);

            // Per-iteration convergence monitor on the outer recurrence.
            if est <= threshold || outer_steps >= max_outer {
                break;
            }
        }

        let y = qr.solve_lenient();
        debug_assert_eq!(y.len(), k);
        for (yj, zj) in y.iter().zip(&z_basis) {
            x.axpy(*yj, zj);
        }
        f64::tally_basis(-(v_basis.len() as i64 + z_basis.len() as i64));
        report.iter_seconds.push(t_cycle.elapsed().as_secs_f64());
    }

    report.iterations = outer_steps;
    report.total_seconds = t_total.elapsed().as_secs_f64();
    finalize_basis_accounting(&mut report, n);
    Ok((x, report))
}

fn finalize_basis_accounting(report: &mut SolveReport, n: usize) {
    let (low, high) = audit::basis_peaks();
    report.low_basis_vectors = low;
    report.high_basis_vectors = high;
    report.low_bytes += low * n * std::mem::size_of::<f32>();
    report.high_bytes += high * n * std::mem::size_of::<f64>();
}

/// Relative residual-estimate target for the inner cycle; spending inner
/// iterations past this does not help outer convergence.
pub const INNER_RELATIVE_TOL: f64 = 1e-4;

/// Mixed-precision inner-outer FGMRES(m_out) - GMRES(m_in): the outer
/// flexible method runs in high precision, and each preconditioner
/// application is one low-precision GMRES(m_in) cycle solving `A z = v` from
/// a zero initial guess. `a_low` must be the demotion of `a_high`.
pub fn fgmres_mixed<L, AH, AL>(
    a_high: &AH,
    a_low: &AL,
    b: &Vector<f64>,
    cfg: &RestartConfig,
    tol: Tolerance,
    max_outer: usize,
) -> Result<(Vector<f64>, SolveReport)>
where
    L: Real,
    AH: Operator<f64> + ?Sized,
    AL: Operator<L> + ?Sized,
{
    assert!(cfg.m_in >= 1 && cfg.m_out >= 1);
    assert_eq!(a_low.rows(), a_high.rows());
    assert_eq!(a_low.cols(), a_high.cols());
    let n = a_high.rows();

    fgmres_with_inner(
        a_high,
        b,
        cfg.m_out,
        tol,
        max_outer,
        PrecisionPair::of::<L, f64>(),
        a_low.matrix_bytes(),
        |v: &Vector<f64>| {
            // v is unit norm, so demotion cannot overflow.
            let v_low: Vector<L> = v.demote().expect("unit vector demotes");
            let z0 = Vector::<L>::zeros(n);
            let (z, _, iters) = gmres_cycle(a_low, &v_low, &z0, cfg.m_in, INNER_RELATIVE_TOL);
            (z.promote(), iters)
        },
    )
}

/// Plain restarted GMRES(m), wholly in high precision: the baseline the
/// speedup ratios are measured against. `report.iterations` counts total
/// Arnoldi steps.
pub fn gmres_reference<A>(
    a: &A,
    b: &Vector<f64>,
    m: usize,
    tol: Tolerance,
    max_restarts: usize,
) -> Result<(Vector<f64>, SolveReport)>
where
    A: Operator<f64> + ?Sized,
{
    assert!(m >= 1 && max_restarts >= 1);
    assert_eq!(a.rows(), a.cols(), "operator must be square");
    let n = a.rows();
    Error::check_dims(n, b.len())?;

    let t_total = Instant::now();
    audit::reset_basis_peaks();
    let mut report = SolveReport::new(PrecisionPair::of::<f64, f64>());
    report.high_bytes = a.matrix_bytes();
    report.a_norm_est = tol.a_norm();

    let mut x = Vector::<f64>::zeros(n);
    let mut restarts = 0usize;
    loop {
        let t_cycle = Instant::now();
        let ax = a.apply(&x);
        let mut r = b.clone();
        r.axpy(-1.0, &ax);
        let beta = r.norm2();
        report.residual_norms.push(beta);
        let threshold = tol.threshold(x.norm2(), n);
        if beta <= threshold {
            report.converged = true;
            break;
        }
        if restarts >= max_restarts {
            report.total_seconds = t_total.elapsed().as_secs_f64();
            finalize_basis_accounting(&mut report, n);
            let x = x.into_vec();
            return Err(Error::MaxIterationsExceeded {
                x,
                report: Box::new(report),
            });
        }
        let (x_next, _, iters) = gmres_cycle(a, b, &x, m, threshold);
        report.iterations += iters;
        report.iter_seconds.push(t_cycle.elapsed().as_secs_f64());
        restarts += 1;
        if iters == 0 {
            // The cycle made no progress (already at tolerance for the
            // frozen threshold); let the loop head re-check and exit.
            report.converged = beta <= threshold;
            break;
        }
        x = x_next;
    }
    report.total_seconds = t_total.elapsed().as_secs_f64();
    finalize_basis_accounting(&mut report, n);
    Ok((x, report))
}
