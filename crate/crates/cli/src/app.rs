//! Command-line surface: `solve-dense`, `solve-iterative`, `cond-sweep`,
//! and `bench`.
//!
//! Exit codes: 0 = converged / success, 2 = non-convergence (the report is
//! still written), 1 = usage or I/O error. All randomness is seeded through
//! `--seed`, so the non-timing CSV columns are byte-identical across runs.

use std::fs;
use std::io::Write;

use mixprec::experiments::{
    condition_sweep, gen_prescribed_cond, gen_prescribed_cond_spd, poisson1d, timing_bench,
    CondSweepSpec,
};
use mixprec::krylov::{fgmres_mixed, gmres_reference, RestartConfig, Tolerance};
use mixprec::operator::{spectral_norm_estimate, Operator, SPECTRAL_NORM_ITERS, SPECTRAL_NORM_SEED};
use mixprec::refine::{ir_solve, solve_reference, Backend, DattaPrediction, IrConfig, StopRule};
use mixprec::rng::Rng;
use mixprec::scalar::Real;
use mixprec::vector::Vector;
use mixprec::{CsrMatrix, DenseMatrix, Error, SolveReport};

use crate::csv::{self, Field, BENCH_SCHEMA, COND_SWEEP_SCHEMA, SOLVE_SCHEMA};
use crate::mm::{parse_matrix_market, MmMatrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

const SYNOPSIS: &str = "\
mixprec <command> [flags]

commands:
  solve-dense      --matrix FILE | --random N [--kappa K] [--backend lu|cholesky]
                   [--mode mixed|double|single] [--max-iters N] [--stop backward|match-ref]
                   [--seed S] [--out CSV]
  solve-iterative  --matrix FILE | --stencil poisson1d:N [--m-in N] [--m-out N] [--m N]
                   [--mode mixed|double-inner|plain-gmres] [--tol T] [--max-outer N]
                   [--seed S] [--out CSV]
  cond-sweep       [--n N] [--trials T] [--kappas K1,K2,...] [--max-iters N]
                   [--seed S] [--out CSV]
  bench            [--sizes N1,N2,...] [--repeats R] [--seed S] [--out CSV]

exit codes: 0 converged/success, 2 non-convergence (CSV still written), 1 usage or I/O error
";

enum CliError {
    Usage(String),
    Io(String),
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Flag parser: every flag takes exactly one value.
struct Flags {
    pairs: Vec<(String, String)>,
}

impl Flags {
    fn parse(args: &[String], allowed: &[&str]) -> CliResult<Self> {
        let mut pairs = Vec::new();
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let name = arg
                .strip_prefix("--")
                .ok_or_else(|| usage(format!("unexpected argument \"{arg}\"")))?;
            if !allowed.contains(&name) {
                return Err(usage(format!("unknown flag \"--{name}\"")));
            }
            let value = it
                .next()
                .ok_or_else(|| usage(format!("flag \"--{name}\" needs a value")))?;
            pairs.push((name.to_string(), value.clone()));
        }
        Ok(Self { pairs })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    fn num<T: std::str::FromStr>(&self, name: &str, default: T) -> CliResult<T> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| usage(format!("cannot parse --{name} value \"{v}\""))),
        }
    }

    fn list<T: std::str::FromStr + Clone>(&self, name: &str, default: &[T]) -> CliResult<Vec<T>> {
        match self.get(name) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse()
                        .map_err(|_| usage(format!("cannot parse --{name} item \"{tok}\"")))
                })
                .collect(),
        }
    }
}

fn emit(out: Option<&str>, text: &str) -> CliResult<()> {
    match out {
        None => {
            print!("{text}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::Io(e.to_string()))
        }
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))
        }
    }
}

fn load_matrix(path: &str) -> CliResult<MmMatrix> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
    parse_matrix_market(&text).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

fn random_rhs(n: usize, seed: u64) -> Vector<f64> {
    let mut rng = Rng::new(seed ^ 0xb_5eed);
    Vector::from_fn(n, |_| rng.next_normal())
}

fn residual_norm(a: &dyn Operator<f64>, x: &Vector<f64>, b: &Vector<f64>) -> f64 {
    let ax = a.apply(x);
    let mut r = b.clone();
    r.axpy(-1.0, &ax);
    r.norm2()
}

/// `solve-dense`: one dense system, three solver modes.
fn solve_dense(flags: &Flags) -> CliResult<i32> {
    let backend = match flags.get("backend").unwrap_or("lu") {
        "lu" => Backend::Lu,
        "cholesky" => Backend::Cholesky,
        other => return Err(usage(format!("unknown backend \"{other}\""))),
    };
    let seed: u64 = flags.num("seed", 0)?;
    let kappa: f64 = flags.num("kappa", 1e2)?;

    let a: DenseMatrix<f64> = match (flags.get("matrix"), flags.get("random")) {
        (Some(path), None) => match load_matrix(path)? {
            MmMatrix::Dense(a) => a,
            MmMatrix::Sparse(m) => m.to_dense(),
        },
        (None, Some(n_str)) => {
            let n: usize = n_str
                .parse()
                .map_err(|_| usage(format!("cannot parse --random value \"{n_str}\"")))?;
            if n < 2 {
                return Err(usage("--random needs n >= 2"));
            }
            if kappa < 1.0 {
                return Err(usage("--kappa must be >= 1"));
            }
            match backend {
                Backend::Lu => gen_prescribed_cond(n, kappa, seed),
                Backend::Cholesky => gen_prescribed_cond_spd(n, kappa, seed),
            }
        }
        _ => return Err(usage("solve-dense needs exactly one of --matrix or --random")),
    };
    if !a.is_square() {
        return Err(CliError::Io(format!(
            "matrix is {}x{}, solve-dense needs a square system",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let b = random_rhs(n, seed);

    let stop_rule = match flags.get("stop").unwrap_or("backward") {
        "backward" => StopRule::BackwardError,
        // The accuracy-parity factor from the reference-matching protocol.
        "match-ref" => StopRule::MatchReference(2.0),
        other => return Err(usage(format!("unknown stop rule \"{other}\""))),
    };
    let cfg = IrConfig {
        max_iters: flags.num("max-iters", 30)?,
        stop_rule,
        backend,
    };

    let mode = flags.get("mode").unwrap_or("mixed").to_string();
    let mut exit = EXIT_OK;
    let row: Vec<Field> = match mode.as_str() {
        "mixed" => match ir_solve::<f32>(&a, &b, &cfg) {
            Ok((_, report)) => {
                if !report.converged {
                    exit = EXIT_NOT_CONVERGED;
                }
                solve_row(&mode, n, n * n, backend, &report)
            }
            Err(Error::FallbackRequired(cause)) => {
                eprintln!("mixed solve unavailable ({cause}); falling back to the high-precision solver");
                let t = std::time::Instant::now();
                let x = solve_reference(&a, &b, backend)
                    .map_err(|e| CliError::Io(format!("fallback solve failed: {e}")))?;
                let report = SolveReport {
                    fell_back_to_high: true,
                    residual_norms: vec![residual_norm(&a, &x, &b)],
                    converged: true,
                    high_bytes: a.bytes(),
                    a_norm_est: spectral_norm_estimate(&a, SPECTRAL_NORM_ITERS, SPECTRAL_NORM_SEED),
                    total_seconds: t.elapsed().as_secs_f64(),
                    ..SolveReport::fallback_template()
                };
                solve_row(&mode, n, n * n, backend, &report)
            }
            Err(e) => return Err(CliError::Io(format!("solve failed: {e}"))),
        },
        "double" | "single" => {
            let t = std::time::Instant::now();
            let x = if mode == "double" {
                solve_reference(&a, &b, backend)
            } else {
                let a_low: Result<DenseMatrix<f32>, _> = a.demote();
                let step = a_low.and_then(|al| {
                    b.demote::<f32>()
                        .and_then(|bl| solve_reference(&al, &bl, backend))
                });
                step.map(|xl| xl.promote::<f64>())
            }
            .map_err(|e| CliError::Io(format!("solve failed: {e}")))?;
            let total = t.elapsed().as_secs_f64();
            let final_residual = residual_norm(&a, &x, &b);
            let a_norm = spectral_norm_estimate(&a, SPECTRAL_NORM_ITERS, SPECTRAL_NORM_SEED);
            vec![
                Field::Str(mode.clone()),
                Field::Int(n as i64),
                Field::Int((n * n) as i64),
                Field::Str(backend.name().into()),
                Field::Int(0),
                Field::Bool(true),
                Field::Float(final_residual),
                Field::Float(a_norm),
                Field::Float(0.0),
                Field::Float(total),
            ]
        }
        other => return Err(usage(format!("unknown mode \"{other}\""))),
    };

    let text = csv::write_csv(&[row], &SOLVE_SCHEMA).map_err(|e| CliError::Io(e.to_string()))?;
    emit(flags.get("out"), &text)?;
    Ok(exit)
}

fn solve_row(
    mode: &str,
    n: usize,
    nnz: usize,
    backend: Backend,
    report: &SolveReport,
) -> Vec<Field> {
    vec![
        Field::Str(mode.into()),
        Field::Int(n as i64),
        Field::Int(nnz as i64),
        Field::Str(backend.name().into()),
        Field::Int(report.iterations as i64),
        Field::Bool(report.converged),
        Field::Float(report.final_residual()),
        Field::Float(report.a_norm_est),
        Field::Float(report.factor_seconds),
        Field::Float(report.total_seconds),
    ]
}

enum IterativeOperator {
    Sparse(CsrMatrix<f64>),
    Dense(DenseMatrix<f64>),
}

/// `solve-iterative`: FGMRES-GMRES in three flavors on a CSR or dense
/// operator.
fn solve_iterative(flags: &Flags) -> CliResult<i32> {
    let op = match (flags.get("matrix"), flags.get("stencil")) {
        (Some(path), None) => match load_matrix(path)? {
            MmMatrix::Sparse(m) => IterativeOperator::Sparse(m),
            MmMatrix::Dense(a) => IterativeOperator::Dense(a),
        },
        (None, Some(spec)) => {
            let n = spec
                .strip_prefix("poisson1d:")
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| usage(format!("bad --stencil \"{spec}\" (want poisson1d:N)")))?;
            if n < 2 {
                return Err(usage("--stencil poisson1d needs n >= 2"));
            }
            IterativeOperator::Sparse(poisson1d(n))
        }
        _ => return Err(usage("solve-iterative needs exactly one of --matrix or --stencil")),
    };

    let m_in: usize = flags.num("m-in", 20)?;
    let m_out: usize = flags.num("m-out", 10)?;
    if m_in < 1 || m_out < 1 {
        return Err(usage("--m-in and --m-out must be >= 1"));
    }
    let cfg = RestartConfig {
        m_in,
        m_out,
        m: flags.num("m", 2 * m_out + m_in)?,
    };
    let max_outer: usize = flags.num("max-outer", 50_000)?;
    let seed: u64 = flags.num("seed", 0)?;
    let mode = flags.get("mode").unwrap_or("mixed").to_string();

    match op {
        IterativeOperator::Sparse(m) => {
            let nnz = m.nnz();
            run_iterative(&m, nnz, flags, &mode, &cfg, max_outer, seed)
        }
        IterativeOperator::Dense(a) => {
            let nnz = a.rows() * a.cols();
            run_iterative(&a, nnz, flags, &mode, &cfg, max_outer, seed)
        }
    }
}

trait DemotableOperator: Operator<f64> {
    type Low: Operator<f32>;
    fn demote_operator(&self) -> Result<Self::Low, Error>;
}

impl DemotableOperator for CsrMatrix<f64> {
    type Low = CsrMatrix<f32>;
    fn demote_operator(&self) -> Result<Self::Low, Error> {
        self.demote()
    }
}

impl DemotableOperator for DenseMatrix<f64> {
    type Low = DenseMatrix<f32>;
    fn demote_operator(&self) -> Result<Self::Low, Error> {
        self.demote()
    }
}

fn run_iterative<A: DemotableOperator>(
    a: &A,
    nnz: usize,
    flags: &Flags,
    mode: &str,
    cfg: &RestartConfig,
    max_outer: usize,
    seed: u64,
) -> CliResult<i32> {
    if a.rows() != a.cols() {
        return Err(CliError::Io(format!(
            "matrix is {}x{}, solve-iterative needs a square system",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let b = random_rhs(n, seed);
    let a_norm = spectral_norm_estimate(a, SPECTRAL_NORM_ITERS, SPECTRAL_NORM_SEED);
    let tol = match flags.get("tol") {
        Some(v) => Tolerance::Absolute(
            v.parse()
                .map_err(|_| usage(format!("cannot parse --tol value \"{v}\"")))?,
        ),
        None => Tolerance::Backward {
            a_norm,
            eps: f64::UNIT_ROUNDOFF,
        },
    };

    let (outcome, backend_name) = match mode {
        "mixed" => {
            let a_low = a
                .demote_operator()
                .map_err(|e| CliError::Io(format!("cannot demote matrix: {e}")))?;
            (
                fgmres_mixed::<f32, _, _>(a, &a_low, &b, cfg, tol, max_outer),
                "fgmres-gmres_sp",
            )
        }
        "double-inner" => (
            fgmres_mixed::<f64, _, _>(a, a, &b, cfg, tol, max_outer),
            "fgmres-gmres_dp",
        ),
        "plain-gmres" => {
            let max_restarts = (max_outer / cfg.m).max(1);
            (
                gmres_reference(a, &b, cfg.m, tol, max_restarts),
                "gmres",
            )
        }
        other => return Err(usage(format!("unknown mode \"{other}\""))),
    };

    let (exit, report) = match outcome {
        Ok((_, report)) => (EXIT_OK, report),
        Err(Error::MaxIterationsExceeded { report, .. }) => (EXIT_NOT_CONVERGED, *report),
        Err(e) => return Err(CliError::Io(format!("solve failed: {e}"))),
    };

    let mut row = solve_row(mode, n, nnz, Backend::Lu, &report);
    row[3] = Field::Str(backend_name.into());
    row[7] = Field::Float(a_norm);
    let text = csv::write_csv(&[row], &SOLVE_SCHEMA).map_err(|e| CliError::Io(e.to_string()))?;
    emit(flags.get("out"), &text)?;
    Ok(exit)
}

/// `cond-sweep`: the iteration-count-versus-kappa study.
fn cond_sweep(flags: &Flags) -> CliResult<i32> {
    let spec = CondSweepSpec {
        n: flags.num("n", 200)?,
        trials: flags.num("trials", 200)?,
        kappas: flags.list("kappas", &[1e1, 1e2, 1e3, 1e4, 1e5, 1e6])?,
        max_iters: flags.num("max-iters", 30)?,
        seed: flags.num("seed", 2006)?,
    };
    if spec.n < 2 || spec.trials < 1 || spec.kappas.is_empty() {
        return Err(usage("cond-sweep needs n >= 2, trials >= 1 and a nonempty kappa list"));
    }
    if spec.kappas.iter().any(|&k| k < 1.0) {
        return Err(usage("condition numbers must be >= 1"));
    }

    let rows = condition_sweep(&spec);
    let mut any_dominant_failure = false;
    let csv_rows: Vec<Vec<Field>> = rows
        .iter()
        .map(|r| {
            any_dominant_failure |= r.failure_rate > 0.5;
            let predicted = match r.predicted {
                DattaPrediction::Converges(k) => k as i64,
                DattaPrediction::Divergent => 0,
            };
            vec![
                Field::Float(r.kappa),
                Field::Int(r.n as i64),
                Field::Int(r.trials as i64),
                Field::Float(r.mean_iters),
                Field::Float(r.failure_rate),
                Field::Int(predicted),
            ]
        })
        .collect();
    let text =
        csv::write_csv(&csv_rows, &COND_SWEEP_SCHEMA).map_err(|e| CliError::Io(e.to_string()))?;
    emit(flags.get("out"), &text)?;
    Ok(if any_dominant_failure {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    })
}

/// `bench`: wall-clock dp/sp/mixed comparison.
fn bench(flags: &Flags) -> CliResult<i32> {
    let sizes: Vec<usize> = flags.list("sizes", &[256, 512, 1024])?;
    let repeats: usize = flags.num("repeats", 5)?;
    let seed: u64 = flags.num("seed", 42)?;
    if sizes.iter().any(|&n| n < 2) || repeats < 3 {
        return Err(usage("bench needs sizes >= 2 and repeats >= 3"));
    }

    let rows = timing_bench(&sizes, repeats, seed);
    let csv_rows: Vec<Vec<Field>> = rows
        .iter()
        .map(|r| {
            vec![
                Field::Int(r.n as i64),
                Field::Float(r.dp_seconds),
                Field::Float(r.sp_seconds),
                Field::Float(r.mixed_seconds),
                Field::Float(r.speedup_mixed()),
                Field::Int(r.iterations as i64),
            ]
        })
        .collect();
    let text = csv::write_csv(&csv_rows, &BENCH_SCHEMA).map_err(|e| CliError::Io(e.to_string()))?;
    emit(flags.get("out"), &text)?;
    Ok(EXIT_OK)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn cli_main(argv: &[String]) -> i32 {
    let result = match argv.first().map(String::as_str) {
        Some("solve-dense") => Flags::parse(
            &argv[1..],
            &[
                "matrix", "random", "kappa", "backend", "mode", "max-iters", "stop", "seed", "out",
            ],
        )
        .and_then(|f| solve_dense(&f)),
        Some("solve-iterative") => Flags::parse(
            &argv[1..],
            &[
                "matrix", "stencil", "m-in", "m-out", "m", "mode", "tol", "max-outer", "seed",
                "out",
            ],
        )
        .and_then(|f| solve_iterative(&f)),
        Some("cond-sweep") => Flags::parse(
            &argv[1..],
            &["n", "trials", "kappas", "max-iters", "seed", "out"],
        )
        .and_then(|f| cond_sweep(&f)),
        Some("bench") => {
            Flags::parse(&argv[1..], &["sizes", "repeats", "seed", "out"]).and_then(|f| bench(&f))
        }
        Some(other) => Err(usage(format!("unknown command \"{other}\""))),
        None => Err(usage("missing command")),
    };

    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{SYNOPSIS}");
            EXIT_USAGE
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}
