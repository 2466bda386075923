//! Precision-tagged scalar arithmetic.
//!
//! Every matrix and vector type in this crate is generic over a [`Real`]
//! scalar. The two implementors are `f32` (the low precision, unit roundoff
//! 2^-24) and `f64` (the high precision, unit roundoff 2^-53). Solvers that
//! mix precisions carry the pair as type parameters; [`PrecisionPair`] is the
//! runtime view of the same information, used by the iteration-count formula
//! and by reports.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::audit;

/// A real scalar type usable as a working precision.
pub trait Real:
    Copy
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    const ZERO: Self;
    const ONE: Self;

    /// Unit roundoff: half the spacing between 1 and the next representable
    /// value (2^-24 for `f32`, 2^-53 for `f64`).
    const UNIT_ROUNDOFF: f64;

    /// Largest finite magnitude, as an `f64`.
    const MAX_FINITE: f64;

    /// Short tag used in reports and CSV output.
    const NAME: &'static str;

    /// Round an `f64` to the nearest representable value of this type.
    fn from_f64(x: f64) -> Self;

    /// Widen to `f64`. Exact for both implementors.
    fn to_f64(self) -> f64;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;

    /// Record `n` floating-point operations carried out in this precision
    /// with the thread-local audit counters.
    fn record_flops(n: u64);

    /// Register retained basis vectors of this precision with the
    /// allocation accountant (negative to release).
    fn tally_basis(delta: i64);
}

impl Real for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    // f32 has a 24-bit significand: u = 2^-24.
    const UNIT_ROUNDOFF: f64 = 5.960_464_477_539_063e-8;
    const MAX_FINITE: f64 = f32::MAX as f64;
    const NAME: &'static str = "f32";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn abs(self) -> Self {
        f32::abs(self)
    }

    #[inline]
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }

    #[inline]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }

    #[inline]
    fn record_flops(n: u64) {
        audit::add_low(n);
    }

    #[inline]
    fn tally_basis(delta: i64) {
        audit::tally_low_basis(delta);
    }
}

impl Real for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    // f64 has a 53-bit significand: u = 2^-53.
    const UNIT_ROUNDOFF: f64 = 1.110_223_024_625_156_5e-16;
    const MAX_FINITE: f64 = f64::MAX;
    const NAME: &'static str = "f64";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }

    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    #[inline]
    fn record_flops(n: u64) {
        audit::add_high(n);
    }

    #[inline]
    fn tally_basis(delta: i64) {
        audit::tally_high_basis(delta);
    }
}

/// The (eps_s, eps_d) unit-roundoff pair parameterizing a mixed algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionPair {
    /// Unit roundoff of the low (fast) precision.
    pub eps_s: f64,
    /// Unit roundoff of the high (target) precision.
    pub eps_d: f64,
}

impl PrecisionPair {
    /// Build a pair from explicit roundoffs. Requires `0 < eps_d <= eps_s < 1`.
    pub fn new(eps_s: f64, eps_d: f64) -> Self {
        assert!(
            0.0 < eps_d && eps_d <= eps_s && eps_s < 1.0,
            "invalid precision pair: eps_s={eps_s}, eps_d={eps_d}"
        );
        Self { eps_s, eps_d }
    }

    /// The pair implied by a (low, high) type instantiation.
    pub fn of<L: Real, H: Real>() -> Self {
        Self::new(L::UNIT_ROUNDOFF, H::UNIT_ROUNDOFF)
    }

    /// The single/double pair used throughout the experiments.
    pub fn single_double() -> Self {
        Self::of::<f32, f64>()
    }

    /// True when `kappa * eps_s < 1`, the regime where mixed refinement can
    /// converge at all.
    pub fn refinement_valid(&self, kappa: f64) -> bool {
        kappa * self.eps_s < 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_roundoffs_are_half_ulp_of_one() {
        assert_eq!(f32::UNIT_ROUNDOFF, (f32::EPSILON as f64) / 2.0);
        assert_eq!(f64::UNIT_ROUNDOFF, f64::EPSILON / 2.0);
        assert_eq!(f32::UNIT_ROUNDOFF, 2f64.powi(-24));
        assert_eq!(f64::UNIT_ROUNDOFF, 2f64.powi(-53));
    }

    #[test]
    fn pair_ordering_enforced() {
        let pp = PrecisionPair::single_double();
        assert!(pp.eps_d < pp.eps_s);
        assert!(pp.refinement_valid(1e4));
        assert!(!pp.refinement_valid(1e8));
    }

    #[test]
    #[should_panic]
    fn pair_rejects_inverted_order() {
        PrecisionPair::new(1e-16, 1e-8);
    }

    #[test]
    fn from_f64_rounds_to_nearest() {
        let x = 1.0 + f64::EPSILON;
        assert_eq!(<f32 as Real>::from_f64(x), 1.0f32);
    }
}
