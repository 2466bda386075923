#![allow(dead_code)] // each integration-test binary uses a different subset

//! Shared independent oracles for the integration tests. Everything here is
//! deliberately written from first principles (bit manipulation, Jacobi
//! rotations, two-pass summation) so it shares no code path with the
//! implementations it checks.

use mixprec::dense::DenseMatrix;
use mixprec::rng::Rng;
use mixprec::vector::Vector;

/// Round an f64 to the nearest f32 by integer bit manipulation
/// (round-to-nearest, ties-to-even), independent of any float cast.
pub fn round_to_f32_bits(x: f64) -> f32 {
    if x == 0.0 {
        return if x.is_sign_negative() { -0.0 } else { 0.0 };
    }
    let bits = x.to_bits();
    let sign = ((bits >> 63) as u32) << 31;
    let exp = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let frac = bits & ((1u64 << 52) - 1);

    // Normal f32 range only; the tests stay inside it.
    assert!((-126..=127).contains(&exp), "oracle only covers normal f32 range");

    // 53-bit significand (with implicit leading one) down to 24 bits:
    // shift out 29 bits with round-to-nearest-even.
    let sig53 = (1u64 << 52) | frac;
    let shift = 29;
    let kept = sig53 >> shift;
    let dropped = sig53 & ((1u64 << shift) - 1);
    let half = 1u64 << (shift - 1);
    let mut sig24 = kept;
    if dropped > half || (dropped == half && (kept & 1) == 1) {
        sig24 += 1;
    }
    let (sig24, exp) = if sig24 == (1u64 << 24) {
        (1u64 << 23, exp + 1)
    } else {
        (sig24, exp)
    };
    assert!(exp <= 127);
    let out = sign | (((exp + 127) as u32) << 23) | ((sig24 & ((1 << 23) - 1)) as u32);
    f32::from_bits(out)
}

/// Two-pass scaled Euclidean norm: find the max magnitude, then sum squares
/// of scaled entries.
pub fn two_pass_norm(x: &[f64]) -> f64 {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let ssq: f64 = x.iter().map(|v| (v / m) * (v / m)).sum();
    m * ssq.sqrt()
}

/// Singular values by one-sided Jacobi: rotate column pairs of a working
/// copy until all pairs are orthogonal; the singular values are the final
/// column norms. Returns them sorted descending.
pub fn jacobi_singular_values(a: &DenseMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut u: Vec<Vec<f64>> = (0..cols).map(|j| a.col(j).to_vec()).collect();

    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let tol = 1e-14;
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let (ci, cj) = if i < j {
                    let (lo, hi) = u.split_at_mut(j);
                    (&mut lo[i], &mut hi[0])
                } else {
                    unreachable!()
                };
                let aa = dot(ci, ci);
                let bb = dot(cj, cj);
                let ab = dot(ci, cj);
                if ab.abs() <= tol * (aa * bb).sqrt() {
                    continue;
                }
                rotated = true;
                // Classic Jacobi rotation zeroing the off-diagonal of the
                // 2x2 Gram block.
                let zeta = (bb - aa) / (2.0 * ab);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let vi = ci[k];
                    let vj = cj[k];
                    ci[k] = c * vi - s * vj;
                    cj[k] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = u.iter().map(|col| dot(col, col).sqrt()).collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sigma
}

pub fn random_matrix(n: usize, rng: &mut Rng) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(n, n, |_, _| rng.next_normal())
}

pub fn random_vector(n: usize, rng: &mut Rng) -> Vector<f64> {
    Vector::from_fn(n, |_| rng.next_normal())
}

pub fn forward_error(x: &Vector<f64>, x_true: &Vector<f64>) -> f64 {
    x.iter()
        .zip(x_true.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn residual_norm(a: &DenseMatrix<f64>, x: &Vector<f64>, b: &Vector<f64>) -> f64 {
    let ax = a.matvec(x).unwrap();
    let mut r = b.clone();
    r.axpy(-1.0, &ax);
    r.norm2()
}
