//! Error type shared by all solver modules.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible.
    DimensionMismatch { expected: usize, found: usize },
    /// A value's magnitude exceeds the largest finite value of the target
    /// precision.
    OverflowOnDemotion { index: usize, value: f64 },
    /// Construction input contains a NaN or infinity.
    NonFinite { index: usize },
    /// Sparse structure arrays violate the CSR invariants.
    InvalidCsr(String),
    /// Gaussian elimination found an exactly zero pivot at this column.
    SingularPivot(usize),
    /// The Cholesky diagonal update at this column was not positive.
    NotPositiveDefinite(usize),
    /// Cholesky input is not symmetric to working precision.
    NotSymmetric,
    /// The low-precision factorization failed; the caller should solve the
    /// system with a full high-precision solver instead.
    FallbackRequired(Box<Error>),
    /// An iterative solver hit its iteration budget; the best iterate and
    /// its report are attached.
    MaxIterationsExceeded {
        x: Vec<f64>,
        report: Box<crate::report::SolveReport>,
    },
    /// A rotated diagonal entry of the least-squares triangle is exactly zero.
    RankDeficient(usize),
    /// No such entry in the test-matrix registry.
    UnknownMatrixId(usize),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::OverflowOnDemotion { index, value } => {
                write!(f, "entry {index} ({value:e}) overflows the low precision")
            }
            Error::NonFinite { index } => write!(f, "entry {index} is not finite"),
            Error::InvalidCsr(why) => write!(f, "invalid CSR structure: {why}"),
            Error::SingularPivot(k) => write!(f, "exactly zero pivot at column {k}"),
            Error::NotPositiveDefinite(k) => {
                write!(f, "nonpositive diagonal update at column {k}")
            }
            Error::NotSymmetric => write!(f, "matrix is not symmetric to working precision"),
            Error::FallbackRequired(cause) => {
                write!(f, "low-precision factorization failed ({cause}); use the high-precision solver")
            }
            Error::MaxIterationsExceeded { report, .. } => write!(
                f,
                "iteration budget exhausted after {} iterations (residual {:e})",
                report.iterations,
                report.final_residual()
            ),
            Error::RankDeficient(k) => write!(f, "zero diagonal in rotated triangle at {k}"),
            Error::UnknownMatrixId(id) => write!(f, "no registry entry for matrix {id}"),
        }
    }
}

impl std::error::Error for Error {}

impl Error {
    pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
