#![allow(clippy::needless_range_loop)]

//! Mixed-precision linear solvers.
//!
//! The expensive part of solving `Ax = b` — the O(n^3) factorization for
//! direct methods, the inner Krylov sweeps for iterative ones — runs in a
//! fast low precision, and cheap high-precision refinement recovers a
//! solution accurate to the high precision's roundoff:
//!
//! * [`refine::ir_solve`] — iterative refinement over a low-precision LU or
//!   Cholesky factorization (dense systems);
//! * [`krylov::fgmres_mixed`] — inner-outer FGMRES with a low-precision GMRES
//!   cycle as the (flexible, right) preconditioner (dense or CSR operators);
//! * [`experiments`] — seeded generators and sweeps that reproduce the
//!   convergence-versus-condition-number study and the speedup measurements
//!   at desk scale.
//!
//! Refinement converges when `kappa(A) * eps_low < 1`; past that boundary
//! the drivers report non-convergence and callers fall back to a full
//! high-precision solve ([`refine::solve_reference`]).

pub mod audit;
pub mod csr;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod factor;
pub mod krylov;
pub mod operator;
pub mod perm;
pub mod refine;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod vector;

pub use csr::CsrMatrix;
pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use operator::{spectral_norm_estimate, Operator};
pub use perm::Permutation;
pub use report::SolveReport;
pub use scalar::{PrecisionPair, Real};
pub use vector::Vector;
