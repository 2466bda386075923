//! Per-solve telemetry shared by the refinement and Krylov drivers.

use crate::scalar::PrecisionPair;

/// What a solver did: iteration counts, the residual-norm history, memory
/// accounting, and per-phase wall times.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Refinement steps for the direct driver; outer Arnoldi steps for
    /// FGMRES; total Arnoldi steps for plain GMRES.
    pub iterations: usize,
    /// Inner (low-precision) iterations, when an inner solver exists.
    pub inner_iterations: usize,
    /// High-precision residual norms, starting with the initial iterate's.
    pub residual_norms: Vec<f64>,
    /// Whether the stop rule was satisfied within the iteration budget.
    pub converged: bool,
    /// Set by callers that rerouted the solve to the high-precision path
    /// after a low-precision factorization failure.
    pub fell_back_to_high: bool,
    /// Bytes of low-precision matrix storage held by the solve.
    pub low_bytes: usize,
    /// Bytes of high-precision matrix storage held by the solve.
    pub high_bytes: usize,
    /// Peak simultaneously-live high-precision basis vectors (Krylov only).
    pub high_basis_vectors: usize,
    /// Peak simultaneously-live low-precision basis vectors (Krylov only).
    pub low_basis_vectors: usize,
    /// Cached spectral norm estimate used by the backward-error stop rule.
    pub a_norm_est: f64,
    /// Seconds spent demoting and factoring (direct driver only).
    pub factor_seconds: f64,
    /// Seconds per refinement step / outer cycle.
    pub iter_seconds: Vec<f64>,
    /// End-to-end seconds.
    pub total_seconds: f64,
    /// Low-precision flops recorded during the phases that the algorithm
    /// requires to run in high precision. Must be zero.
    pub low_flops_in_high_phases: u64,
    /// The roundoff pair the solve ran under.
    pub precision: PrecisionPair,
}

impl SolveReport {
    pub(crate) fn new(precision: PrecisionPair) -> Self {
        Self {
            iterations: 0,
            inner_iterations: 0,
            residual_norms: Vec::new(),
            converged: false,
            fell_back_to_high: false,
            low_bytes: 0,
            high_bytes: 0,
            high_basis_vectors: 0,
            low_basis_vectors: 0,
            a_norm_est: 0.0,
            factor_seconds: 0.0,
            iter_seconds: Vec::new(),
            total_seconds: 0.0,
            low_flops_in_high_phases: 0,
            precision,
        }
    }

    /// Blank report for a caller that rerouted to the high-precision solver;
    /// the caller fills in what the fallback actually did.
    pub fn fallback_template() -> Self {
        Self::new(PrecisionPair::of::<f64, f64>())
    }

    /// Last recorded residual norm (infinite if none was recorded).
    pub fn final_residual(&self) -> f64 {
        self.residual_norms.last().copied().unwrap_or(f64::INFINITY)
    }

    /// Total matrix bytes across both precisions.
    pub fn matrix_bytes(&self) -> usize {
        self.low_bytes + self.high_bytes
    }
}
