#![allow(clippy::needless_range_loop)]

//! Derived-value checks against independent oracles: bit-level rounding,
//! two-pass norms, Jacobi SVD, and dense normal equations.

mod common;

use common::{jacobi_singular_values, random_matrix, two_pass_norm};
use mixprec::dense::DenseMatrix;
use mixprec::experiments::gen_prescribed_cond;
use mixprec::factor::{lu_factor, lu_solve};
use mixprec::krylov::hessenberg_lsq;
use mixprec::operator::spectral_norm_estimate;
use mixprec::rng::Rng;
use mixprec::scalar::Real;
use mixprec::vector::Vector;

#[test]
fn demote_pi_matches_bit_level_rounding_oracle() {
    let values = [
        std::f64::consts::PI,
        -std::f64::consts::E,
        1.0 / 3.0,
        6.02214076e23,
        -2.2250738585072014e-30,
        123456.789012345,
    ];
    for &v in &values {
        let demoted: Vector<f32> = Vector::new(vec![v]).unwrap().demote().unwrap();
        let oracle = common::round_to_f32_bits(v);
        assert_eq!(demoted[0].to_bits(), oracle.to_bits(), "value {v}");
        let err = (demoted[0] as f64 - v).abs();
        assert!(err <= f32::UNIT_ROUNDOFF * v.abs(), "rounding error too big for {v}");
    }
}

#[test]
fn norm2_matches_two_pass_oracle_at_extreme_scales() {
    let cases: Vec<Vec<f64>> = vec![
        vec![1e200, 1e200],
        vec![3e-300, 4e-300],
        vec![1e308, 1e308, 1e308],
        vec![0.0, 0.0],
        vec![-5e150, 2e-150, 7.0],
    ];
    for data in cases {
        let v = Vector::new(data.clone()).unwrap();
        let got = v.norm2();
        let want = two_pass_norm(&data);
        if want == 0.0 {
            assert_eq!(got, 0.0);
        } else {
            assert!(
                ((got - want) / want).abs() < 1e-14,
                "{data:?}: got {got:e}, want {want:e}"
            );
        }
        assert!(got.is_finite());
    }

    let mut rng = Rng::new(12);
    for _ in 0..50 {
        let data: Vec<f64> = (0..40).map(|_| rng.next_normal() * 1e100).collect();
        let v = Vector::new(data.clone()).unwrap();
        let want = two_pass_norm(&data);
        assert!(((v.norm2() - want) / want).abs() < 1e-13);
    }
}

#[test]
fn spectral_norm_estimate_matches_jacobi_svd_oracle() {
    let mut rng = Rng::new(1234);
    for trial in 0..5 {
        let a = random_matrix(10, &mut rng);
        let est = spectral_norm_estimate(&a, 100, 55 + trial);
        let sigma = jacobi_singular_values(&a);
        let truth = sigma[0];
        assert!(
            ((est - truth) / truth).abs() < 0.01,
            "trial {trial}: est {est}, svd {truth}"
        );
        // power iteration never overshoots
        assert!(est <= truth * (1.0 + 1e-10));
    }
}

#[test]
fn prescribed_condition_number_matches_svd_oracle() {
    let a = gen_prescribed_cond(50, 1e3, 99);
    let sigma = jacobi_singular_values(&a);
    let kappa = sigma[0] / sigma[sigma.len() - 1];
    assert!(
        ((kappa - 1e3) / 1e3).abs() < 0.01,
        "measured condition number {kappa}"
    );
    assert!((sigma[0] - 1.0).abs() < 1e-10, "largest sigma {}", sigma[0]);
}

#[test]
fn hessenberg_lsq_matches_normal_equations_oracle() {
    let mut rng = Rng::new(77);
    for _ in 0..10 {
        // random 6x5 Hessenberg
        let k = 5;
        let h = DenseMatrix::from_fn(k + 1, k, |i, j| {
            if i > j + 1 {
                0.0
            } else {
                rng.next_normal()
            }
        });
        let beta = 1.0 + rng.next_f64();
        let (y, est) = hessenberg_lsq(&h, beta).unwrap();

        // oracle: solve (H^T H) y = beta * H^T e1 densely
        let mut hth = DenseMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let mut acc = 0.0;
                for l in 0..(k + 1) {
                    acc += h.get(l, i) * h.get(l, j);
                }
                hth.set(i, j, acc);
            }
        }
        let rhs = Vector::from_fn(k, |j| beta * h.get(0, j));
        let f = lu_factor(hth).unwrap();
        let y_oracle = lu_solve(&f, &rhs).unwrap();
        for (a, b) in y.iter().zip(y_oracle.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }

        // the estimate is the true residual of the least-squares problem
        let mut r = vec![0.0f64; k + 1];
        r[0] = beta;
        for j in 0..k {
            for i in 0..(k + 1) {
                r[i] -= h.get(i, j) * y[j];
            }
        }
        let true_res = two_pass_norm(&r);
        assert!((est - true_res).abs() < 1e-10, "est {est}, true {true_res}");
    }
}
