//! Reproduction harness: prescribed-condition-number generators, the
//! convergence-versus-condition-number sweep, the tuned restart table for
//! the sparse test set, and wall-clock speedup measurements.

use std::time::Instant;

use crate::csr::CsrMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::krylov::RestartConfig;
use crate::refine::{self, datta_iterations, DattaPrediction, IrConfig};
use crate::rng::Rng;
use crate::scalar::PrecisionPair;
use crate::vector::Vector;

/// Parameters of the condition-number sweep.
#[derive(Debug, Clone)]
pub struct CondSweepSpec {
    pub n: usize,
    pub trials: usize,
    pub kappas: Vec<f64>,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for CondSweepSpec {
    fn default() -> Self {
        Self {
            n: 200,
            trials: 200,
            kappas: vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
            max_iters: 30,
            seed: 2006,
        }
    }
}

/// One row of the sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct CondSweepRow {
    pub kappa: f64,
    pub n: usize,
    pub trials: usize,
    /// Mean refinement iterations, with capped failures counted at the cap.
    pub mean_iters: f64,
    pub failure_rate: f64,
    pub predicted: DattaPrediction,
}

/// Metadata of the SuiteSparse matrices the tuned restart table refers
/// to (not bundled; the harness generates synthetic stand-ins at desk
/// scale).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRegistryEntry {
    pub id: usize,
    pub name: &'static str,
    pub size: usize,
    pub nonzeroes: usize,
    pub symmetric: bool,
    pub pos_def: bool,
    /// Order of magnitude of the condition number.
    pub cond_magnitude: f64,
}

pub fn registry() -> Vec<MatrixRegistryEntry> {
    vec![
        MatrixRegistryEntry { id: 1, name: "SiO", size: 33401, nonzeroes: 1_317_655, symmetric: true, pos_def: false, cond_magnitude: 1e3 },
        MatrixRegistryEntry { id: 2, name: "Lin", size: 25600, nonzeroes: 1_766_400, symmetric: true, pos_def: false, cond_magnitude: 1e5 },
        MatrixRegistryEntry { id: 3, name: "c-71", size: 76638, nonzeroes: 859_554, symmetric: true, pos_def: false, cond_magnitude: 1e1 },
        MatrixRegistryEntry { id: 4, name: "cage-11", size: 39082, nonzeroes: 559_722, symmetric: false, pos_def: false, cond_magnitude: 1e0 },
        MatrixRegistryEntry { id: 5, name: "raefsky3", size: 21200, nonzeroes: 1_488_768, symmetric: false, pos_def: false, cond_magnitude: 1e1 },
        MatrixRegistryEntry { id: 6, name: "poisson3Db", size: 85623, nonzeroes: 2_374_949, symmetric: false, pos_def: false, cond_magnitude: 1e3 },
    ]
}

/// The tuned restart triple for each registry matrix. For most rows
/// `m = 2 * m_out + m_in` (equal memory for the two methods); matrices 1, 3
/// and 5 carry the additionally increased reference restart.
pub fn restart_defaults(matrix_id: usize) -> Result<RestartConfig> {
    let (m_in, m_out, m) = match matrix_id {
        1 => (30, 20, 150),
        2 => (20, 10, 40),
        3 => (100, 9, 300),
        4 => (10, 4, 18),
        5 => (20, 20, 300),
        6 => (20, 10, 50),
        _ => return Err(Error::UnknownMatrixId(matrix_id)),
    };
    Ok(RestartConfig { m_in, m_out, m })
}

/// One wall-clock comparison row: the same seeded system solved three ways.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub dp_seconds: f64,
    pub sp_seconds: f64,
    pub mixed_seconds: f64,
    pub iterations: usize,
}

impl BenchRow {
    /// Speedup of the mixed solve over the full high-precision one.
    /// Computed, never stored.
    pub fn speedup_mixed(&self) -> f64 {
        self.dp_seconds / self.mixed_seconds
    }

    /// Upper bound on any mixed speedup: the pure low-precision ratio.
    pub fn sp_over_dp_speedup(&self) -> f64 {
        self.dp_seconds / self.sp_seconds
    }
}

/// Haar-ish random orthogonal matrix: Householder QR of a Gaussian matrix,
/// with the R-diagonal signs folded into Q.
fn random_orthogonal(n: usize, rng: &mut Rng) -> DenseMatrix<f64> {
    let mut a = DenseMatrix::from_fn(n, n, |_, _| rng.next_normal());
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);
    let mut diag_signs = Vec::with_capacity(n);

    for k in 0..n {
        let col = &a.col(k)[k..];
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push((vec![0.0; n - k], 0.0));
            diag_signs.push(1.0);
            continue;
        }
        let alpha = if col[0] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = col.to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        let beta = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };
        for j in k..n {
            let cj = &mut a.col_mut(j)[k..];
            let dot: f64 = v.iter().zip(cj.iter()).map(|(x, y)| x * y).sum();
            let s = beta * dot;
            for (ci, vi) in cj.iter_mut().zip(&v) {
                *ci -= s * vi;
            }
        }
        diag_signs.push(if alpha >= 0.0 { 1.0 } else { -1.0 });
        reflectors.push((v, beta));
    }

    // Accumulate Q = H_0 .. H_{n-1} applied to I, then fix column signs so
    // the implicit R has a positive diagonal (Haar correctness).
    let mut q = DenseMatrix::<f64>::identity(n);
    for k in (0..n).rev() {
        let (v, beta) = &reflectors[k];
        if *beta == 0.0 {
            continue;
        }
        for j in 0..n {
            let cj = &mut q.col_mut(j)[k..];
            let dot: f64 = v.iter().zip(cj.iter()).map(|(x, y)| x * y).sum();
            let s = beta * dot;
            for (ci, vi) in cj.iter_mut().zip(v) {
                *ci -= s * vi;
            }
        }
    }
    for k in 0..n {
        if diag_signs[k] < 0.0 {
            for v in q.col_mut(k) {
                *v = -*v;
            }
        }
    }
    q
}

/// Singular values log-spaced from 1 down to 1/kappa.
fn log_spaced_singular_values(n: usize, kappa: f64) -> Vec<f64> {
    assert!(n >= 2 && kappa >= 1.0);
    (0..n)
        .map(|i| kappa.powf(-(i as f64) / (n as f64 - 1.0)))
        .collect()
}

/// Random dense matrix with condition number exactly `kappa` (in exact
/// arithmetic): `A = U diag(sigma) V^T` with `U`, `V` random orthogonal and
/// log-spaced singular values. Deterministic in `(n, kappa, seed)`.
pub fn gen_prescribed_cond(n: usize, kappa: f64, seed: u64) -> DenseMatrix<f64> {
    assert!(n >= 2 && kappa >= 1.0);
    let mut rng = Rng::new(seed);
    let u = random_orthogonal(n, &mut rng);
    let v = random_orthogonal(n, &mut rng);
    let sigma = log_spaced_singular_values(n, kappa);

    // A = (U * diag(sigma)) * V^T
    let mut us = u;
    for (k, s) in sigma.iter().enumerate() {
        for e in us.col_mut(k) {
            *e *= s;
        }
    }
    matmul_nt(&us, &v)
}

/// Symmetric positive definite variant: `A = U diag(sigma) U^T`, same
/// log-spaced spectrum.
pub fn gen_prescribed_cond_spd(n: usize, kappa: f64, seed: u64) -> DenseMatrix<f64> {
    assert!(n >= 2 && kappa >= 1.0);
    let mut rng = Rng::new(seed);
    let u = random_orthogonal(n, &mut rng);
    let sigma = log_spaced_singular_values(n, kappa);
    let mut us = u.clone();
    for (k, s) in sigma.iter().enumerate() {
        for e in us.col_mut(k) {
            *e *= s;
        }
    }
    let a = matmul_nt(&us, &u);
    // Symmetrize away the last-bit roundoff so the Cholesky symmetry check
    // never trips.
    DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)))
}

/// `C = A * B^T` (both n x n).
fn matmul_nt(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    let n = a.rows();
    let mut c = DenseMatrix::zeros(n, n);
    // Column j of C is A * (row j of B^T) = A * (column-j entries of B).
    for j in 0..n {
        for k in 0..n {
            let bjk = b.get(j, k);
            if bjk == 0.0 {
                continue;
            }
            let ak = a.col(k);
            let cj = c.col_mut(j);
            for i in 0..n {
                cj[i] += ak[i] * bjk;
            }
        }
    }
    c
}

/// 1-D Poisson stencil: tridiagonal (-1, 2, -1), the synthetic SPD stand-in
/// for large sparse test matrices.
pub fn poisson1d(n: usize) -> CsrMatrix<f64> {
    assert!(n >= 2);
    let mut triplets = Vec::with_capacity(3 * n - 2);
    for i in 0..n {
        if i > 0 {
            triplets.push((i, i - 1, -1.0));
        }
        triplets.push((i, i, 2.0));
        if i + 1 < n {
            triplets.push((i, i + 1, -1.0));
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets).expect("stencil is valid CSR")
}

/// Run independent trials across threads, preserving per-index determinism.
fn parallel_trials<T: Send>(count: usize, run: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(count.max(1));
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    if threads <= 1 {
        for (i, slot) in slots.iter_mut().enumerate() {
            *slot = Some(run(i));
        }
    } else {
        let run = &run;
        let slot_ptrs: Vec<_> = slots.iter_mut().collect();
        std::thread::scope(|scope| {
            // Interleave statically; trial cost is uniform enough.
            let mut chunks: Vec<Vec<&mut Option<T>>> = (0..threads).map(|_| Vec::new()).collect();
            for (i, slot) in slot_ptrs.into_iter().enumerate() {
                chunks[i % threads].push(slot);
            }
            for (t, chunk) in chunks.into_iter().enumerate() {
                scope.spawn(move || {
                    for (offset, slot) in chunk.into_iter().enumerate() {
                        let index = offset * threads + t;
                        *slot = Some(run(index));
                    }
                });
            }
        });
    }
    slots.into_iter().map(|s| s.expect("trial ran")).collect()
}

/// The convergence-versus-condition-number study: for each target kappa,
/// `trials` random systems are refined with the LU backend in f32/f64, and
/// the mean iteration count is reported with capped non-convergent runs
/// counted at the cap.
pub fn condition_sweep(spec: &CondSweepSpec) -> Vec<CondSweepRow> {
    assert!(spec.trials >= 1);
    let pp = PrecisionPair::single_double();
    let base = Rng::new(spec.seed);

    spec.kappas
        .iter()
        .enumerate()
        .map(|(ki, &kappa)| {
            assert!(kappa >= 1.0);
            let cfg = IrConfig {
                max_iters: spec.max_iters,
                ..IrConfig::default()
            };
            let outcomes = parallel_trials(spec.trials, |trial| {
                let mut rng = base.fork(((ki as u64) << 32) | trial as u64);
                let gen_seed = rng.next_u64();
                let a = gen_prescribed_cond(spec.n, kappa, gen_seed);
                let b = Vector::from_fn(spec.n, |_| rng.next_normal());
                match refine::ir_solve::<f32>(&a, &b, &cfg) {
                    Ok((_, report)) if report.converged => (report.iterations, false),
                    // Non-convergence at the cap and hard factorization
                    // failures both count as the cap.
                    Ok(_) | Err(_) => (spec.max_iters, true),
                }
            });
            let failures = outcomes.iter().filter(|(_, failed)| *failed).count();
            let mean_iters =
                outcomes.iter().map(|(it, _)| *it as f64).sum::<f64>() / spec.trials as f64;
            CondSweepRow {
                kappa,
                n: spec.n,
                trials: spec.trials,
                mean_iters,
                failure_rate: failures as f64 / spec.trials as f64,
                predicted: datta_iterations(&pp, kappa),
            }
        })
        .collect()
}

/// Wall-clock comparison of the three dense solvers on one seeded system per
/// size: full high precision, pure low precision, and mixed refinement.
/// Median of `repeats` timed runs after one discarded warm-up; hardware
/// dependent and informational.
pub fn timing_bench(sizes: &[usize], repeats: usize, seed: u64) -> Vec<BenchRow> {
    assert!(repeats >= 3, "need at least 3 repeats for a median");
    sizes
        .iter()
        .map(|&n| {
            let mut rng = Rng::new(seed ^ (n as u64).wrapping_mul(0x9e37_79b9));
            let a = DenseMatrix::from_fn(n, n, |_, _| rng.next_normal());
            let b = Vector::from_fn(n, |_| rng.next_normal());
            let cfg = IrConfig::default();

            let dp = || {
                refine::solve_reference(&a, &b, cfg.backend).expect("dp solve");
            };
            let sp = || {
                let a_low: DenseMatrix<f32> = a.demote().expect("demote");
                let b_low: Vector<f32> = b.demote().expect("demote");
                let x = refine::solve_reference(&a_low, &b_low, cfg.backend).expect("sp solve");
                let _ = x.promote::<f64>();
            };
            let mut iterations = 0usize;
            let mut mixed = || {
                let (_, report) = refine::ir_solve::<f32>(&a, &b, &cfg).expect("mixed solve");
                iterations = report.iterations;
            };

            let dp_seconds = median_time(repeats, dp);
            let sp_seconds = median_time(repeats, sp);
            let mixed_seconds = median_time(repeats, &mut mixed);
            BenchRow {
                n,
                dp_seconds,
                sp_seconds,
                mixed_seconds,
                iterations,
            }
        })
        .collect()
}

fn median_time(repeats: usize, mut f: impl FnMut()) -> f64 {
    f(); // warm-up, discarded
    let mut times: Vec<f64> = (0..repeats)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[times.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::spectral_norm_estimate;

    #[test]
    fn orthogonal_factor_is_orthogonal() {
        let mut rng = Rng::new(3);
        let q = random_orthogonal(12, &mut rng);
        let qtq = matmul_nt(&q, &q); // A * B^T with A = B = Q, i.e. Q Q^T
        for i in 0..12 {
            for j in 0..12 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (qtq.get(i, j) - expect).abs() < 1e-12,
                    "QQ^T[{i},{j}] = {}",
                    qtq.get(i, j)
                );
            }
        }
    }

    #[test]
    fn kappa_one_gives_orthogonal_matrix() {
        let a = gen_prescribed_cond(10, 1.0, 7);
        let aat = matmul_nt(&a, &a);
        for i in 0..10 {
            for j in 0..10 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((aat.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = gen_prescribed_cond(16, 1e3, 42);
        let b = gen_prescribed_cond(16, 1e3, 42);
        assert_eq!(a, b);
        let c = gen_prescribed_cond(16, 1e3, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn largest_singular_value_is_one() {
        let a = gen_prescribed_cond(24, 1e4, 5);
        let est = spectral_norm_estimate(&a, 200, 1);
        assert!((0.99..=1.01).contains(&est), "norm estimate {est}");
    }

    #[test]
    fn spd_generator_is_spd() {
        let a = gen_prescribed_cond_spd(16, 1e3, 9);
        assert!(a.is_symmetric(1e-14));
        let f = crate::factor::cholesky_factor(a);
        assert!(f.is_ok());
    }

    #[test]
    fn restart_table_rows() {
        let r2 = restart_defaults(2).unwrap();
        assert_eq!((r2.m_in, r2.m_out, r2.m), (20, 10, 40));
        let r4 = restart_defaults(4).unwrap();
        assert_eq!((r4.m_in, r4.m_out, r4.m), (10, 4, 18));
        assert_eq!(r4.m, 2 * r4.m_out + r4.m_in);
        let r3 = restart_defaults(3).unwrap();
        assert_eq!((r3.m_in, r3.m_out, r3.m), (100, 9, 300));
        assert!(r3.m > 2 * r3.m_out + r3.m_in);
        assert!(matches!(restart_defaults(7), Err(Error::UnknownMatrixId(7))));
    }

    #[test]
    fn poisson_stencil_structure() {
        let a = poisson1d(5);
        assert_eq!(a.nnz(), 13);
        let x = Vector::new(vec![1.0; 5]).unwrap();
        let y = a.matvec(&x).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn small_sweep_matches_formula_band() {
        let spec = CondSweepSpec {
            n: 50,
            trials: 8,
            kappas: vec![1e2],
            max_iters: 30,
            seed: 77,
        };
        let rows = condition_sweep(&spec);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].failure_rate == 0.0);
        assert!(rows[0].mean_iters >= 1.0 && rows[0].mean_iters <= 8.0);
    }

    #[test]
    fn bench_is_deterministic_in_iterations() {
        let rows_a = timing_bench(&[48], 3, 9);
        let rows_b = timing_bench(&[48], 3, 9);
        assert_eq!(rows_a[0].iterations, rows_b[0].iterations);
        assert!(rows_a[0].dp_seconds > 0.0);
    }
}
