//! Dense vectors in a chosen precision.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A contiguous vector of `P`-precision reals, finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<P: Real> {
    data: Vec<P>,
}

impl<P: Real> Vector<P> {
    /// Validating constructor: rejects NaN and infinities.
    pub fn new(data: Vec<P>) -> Result<Self> {
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(Self { data })
    }

    /// Construction without the finiteness scan, for values produced by the
    /// solvers themselves (which may legitimately overflow while diverging).
    pub fn from_raw(data: Vec<P>) -> Self {
        Self { data }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: vec![P::ZERO; n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> P) -> Self {
        Self {
            data: (0..n).map(&mut f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[P] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [P] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<P> {
        self.data
    }

    pub fn bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<P>()
    }

    /// Round every entry to the low precision `L`. Errors if any magnitude
    /// exceeds the largest finite `L` value.
    pub fn demote<L: Real>(&self) -> Result<Vector<L>> {
        let mut out = Vec::with_capacity(self.len());
        for (i, v) in self.data.iter().enumerate() {
            let w = v.to_f64();
            if w.abs() > L::MAX_FINITE {
                return Err(Error::OverflowOnDemotion { index: i, value: w });
            }
            out.push(L::from_f64(w));
        }
        Ok(Vector { data: out })
    }

    /// Widen every entry to precision `H`. Exact when `H` is wider.
    pub fn promote<H: Real>(&self) -> Vector<H> {
        Vector {
            data: self.data.iter().map(|v| H::from_f64(v.to_f64())).collect(),
        }
    }

    /// Euclidean norm with scaled accumulation, so neither huge nor tiny
    /// entries overflow or underflow the sum of squares. Accumulation is
    /// always done in f64, whatever `P` is, to keep stopping decisions
    /// trustworthy.
    pub fn norm2(&self) -> f64 {
        let mut scale = 0.0f64;
        let mut ssq = 1.0f64;
        for v in &self.data {
            let ax = v.to_f64().abs();
            if ax == 0.0 {
                continue;
            }
            if ax > scale {
                let ratio = scale / ax;
                ssq = 1.0 + ssq * ratio * ratio;
                scale = ax;
            } else {
                let ratio = ax / scale;
                ssq += ratio * ratio;
            }
        }
        f64::record_flops(3 * self.data.len() as u64);
        scale * ssq.sqrt()
    }

    /// Max-magnitude entry, in f64.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.to_f64().abs()))
    }

    /// Dot product accumulated in the vector's own precision.
    pub fn dot(&self, other: &Self) -> P {
        debug_assert_eq!(self.len(), other.len());
        let mut acc = P::ZERO;
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += *a * *b;
        }
        P::record_flops(2 * self.data.len() as u64);
        acc
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: P, other: &Self) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * *b;
        }
        P::record_flops(2 * self.data.len() as u64);
    }

    /// `self *= alpha`.
    pub fn scale(&mut self, alpha: P) {
        for a in &mut self.data {
            *a *= alpha;
        }
        P::record_flops(self.data.len() as u64);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, P> {
        self.data.iter()
    }
}

impl<P: Real> Deref for Vector<P> {
    type Target = [P];

    fn deref(&self) -> &[P] {
        &self.data
    }
}

impl<P: Real> DerefMut for Vector<P> {
    fn deref_mut(&mut self) -> &mut [P] {
        &mut self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rejects_non_finite() {
        assert!(Vector::new(vec![1.0f64, f64::NAN]).is_err());
        assert!(Vector::new(vec![1.0f64, f64::INFINITY]).is_err());
        assert!(Vector::new(vec![0.0f64, 1.0, -2.0]).is_ok());
    }

    #[test]
    fn norm2_pythagorean() {
        let v = Vector::new(vec![3.0f64, 4.0]).unwrap();
        assert_eq!(v.norm2(), 5.0);
        assert_eq!(Vector::<f64>::zeros(4).norm2(), 0.0);
    }

    #[test]
    fn norm2_does_not_overflow() {
        let v = Vector::new(vec![1e200f64, 1e200]).unwrap();
        let expected = 1e200 * 2f64.sqrt();
        assert!((v.norm2() - expected).abs() <= 1e185);
        assert!(v.norm2().is_finite());
    }

    #[test]
    fn norm2_does_not_underflow() {
        let v = Vector::new(vec![1e-200f64, 1e-200]).unwrap();
        let expected = 1e-200 * 2f64.sqrt();
        assert!((v.norm2() - expected).abs() <= 1e-215);
    }

    #[test]
    fn demote_exact_values_roundtrip() {
        let v = Vector::new(vec![0.0f64, 1.0, -2.0]).unwrap();
        let low: Vector<f32> = v.demote().unwrap();
        assert_eq!(low.as_slice(), &[0.0f32, 1.0, -2.0]);
        assert_eq!(low.promote::<f64>(), v);
    }

    #[test]
    fn demote_below_resolution_rounds_to_one() {
        let v = Vector::new(vec![1.0 + f64::EPSILON]).unwrap();
        let low: Vector<f32> = v.demote().unwrap();
        assert_eq!(low.as_slice(), &[1.0f32]);
    }

    #[test]
    fn demote_overflow_detected() {
        let v = Vector::new(vec![1e39f64]).unwrap();
        match v.demote::<f32>() {
            Err(Error::OverflowOnDemotion { index: 0, .. }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
    }
}
