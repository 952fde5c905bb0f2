//! Speedup measurements on Ristretto255: verification time against the
//! optimized and naive MSM at `n = 2^e`.
//!
//! `t_verify` covers decoding the 64-byte response plus [`client_verify`].
//! `t_setup` is reported but never enters a speedup.

use std::fmt::Write as _;
use std::hint::black_box;
use std::io;
use std::path::Path;
use std::time::{Duration, Instant};

use curve25519_dalek::traits::VartimeMultiscalarMul;
use curve25519_dalek::RistrettoPoint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::group::{PrimeGroup, Ristretto255};
use crate::msm::{msm_bucketed, msm_bucketed_par, msm_naive};
use crate::protocol::{client_verify, server_respond, setup};
use crate::wire::{decode_response, encode_response};

pub const DEFAULT_ITERATIONS: usize = 20;
pub const DEFAULT_WARMUP: usize = 3;
pub const MIN_ITERATIONS: usize = 10;
/// From this size on the naive MSM runs fewer iterations.
pub const NAIVE_REDUCTION_THRESHOLD: usize = 1 << 16;
pub const MIN_NAIVE_ITERATIONS: usize = 3;

pub const CSV_HEADER: &str = "n,t_msm_optimized,t_msm_naive,t_verify,t_setup,speedup_opt,speedup_naive,\
threads,iterations,naive_iterations,warmup,t_msm_library";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub exponents: Vec<u32>,
    pub iterations: usize,
    pub warmup: usize,
    pub seed: u64,
    /// 1 runs the sequential engine; more uses the parallel engine on a pool
    /// of this size.
    pub threads: usize,
    /// Also time the curve library's own variable-time MSM.
    pub library_column: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            exponents: (10..=18).collect(),
            iterations: DEFAULT_ITERATIONS,
            warmup: DEFAULT_WARMUP,
            seed: 0,
            threads: 1,
            library_column: false,
        }
    }
}

/// Mean seconds per operation at one size.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub n: usize,
    pub t_msm_optimized: f64,
    pub t_msm_naive: f64,
    pub t_verify: f64,
    pub t_setup: f64,
    pub speedup_opt: f64,
    pub speedup_naive: f64,
    pub threads: usize,
    pub iterations: usize,
    pub naive_iterations: usize,
    pub warmup: usize,
    pub t_msm_library: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedSize {
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub skipped: Vec<SkippedSize>,
}

/// Mean wall-clock seconds of `f` over `iterations` runs after `warmup` runs.
fn time_mean<T>(warmup: usize, iterations: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    for _ in 0..warmup {
        black_box(f()?);
    }
    let mut total = Duration::ZERO;
    for _ in 0..iterations {
        let start = Instant::now();
        black_box(f()?);
        total += start.elapsed();
    }
    Ok(total.as_secs_f64() / iterations as f64)
}

fn alloc<T>(n: usize) -> std::result::Result<Vec<T>, String> {
    let mut v = Vec::new();
    v.try_reserve_exact(n).map_err(|e| format!("cannot allocate {n} elements: {e}"))?;
    Ok(v)
}

fn naive_iterations(n: usize, iterations: usize) -> usize {
    if n >= NAIVE_REDUCTION_THRESHOLD {
        (iterations / 4).max(MIN_NAIVE_ITERATIONS)
    } else {
        iterations
    }
}

/// Measures each `n = 2^e`. Sizes whose vectors cannot be allocated are
/// skipped with a reason.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchOutcome> {
    if config.iterations < MIN_ITERATIONS {
        return Err(Error::InvalidArgument(format!("at least {MIN_ITERATIONS} iterations are required")));
    }
    if config.exponents.is_empty() {
        return Err(Error::EmptyInput);
    }
    if config.threads == 0 {
        return Err(Error::InvalidArgument("threads must be positive".into()));
    }
    if let Some(e) = config.exponents.iter().find(|&&e| e >= usize::BITS - 8) {
        return Err(Error::InvalidArgument(format!("exponent {e} is too large")));
    }
    let pool = (config.threads > 1)
        .then(|| rayon::ThreadPoolBuilder::new().num_threads(config.threads).build())
        .transpose()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

    let mut outcome = BenchOutcome::default();
    for &e in &config.exponents {
        let n = 1usize << e;
        match measure(config, n, pool.as_ref()) {
            Ok(Ok(record)) => {
                log::info!("n=2^{e}: speedup_opt={:.1} speedup_naive={:.1}", record.speedup_opt, record.speedup_naive);
                outcome.records.push(record);
            }
            Ok(Err(reason)) => {
                log::warn!("skipping n=2^{e}: {reason}");
                outcome.skipped.push(SkippedSize { n, reason });
            }
            Err(err) => return Err(err),
        }
    }
    Ok(outcome)
}

/// Inner `Err(String)` is a skip; outer `Err` is a failure.
fn measure(
    config: &BenchConfig,
    n: usize,
    pool: Option<&rayon::ThreadPool>,
) -> Result<std::result::Result<BenchRecord, String>> {
    let g = Ristretto255;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ (n as u64).rotate_left(32));

    let (mut bases, mut x) = match (alloc(n), alloc(n)) {
        (Ok(b), Ok(x)) => (b, x),
        (Err(reason), _) | (_, Err(reason)) => return Ok(Err(reason)),
    };
    bases.extend((0..n).map(|_| g.random_element(&mut rng)));
    x.extend((0..n).map(|_| g.sample_scalar(&mut rng)));
    if let Err(reason) = alloc::<RistrettoPoint>(2 * n) {
        return Ok(Err(reason));
    }

    let start = Instant::now();
    let (key, state) = setup(&g, bases, &mut rng)?;
    let t_setup = start.elapsed().as_secs_f64();

    let optimized = |bases: &[RistrettoPoint], x: &[_]| match pool {
        Some(pool) => pool.install(|| msm_bucketed_par(&g, bases, x)),
        None => msm_bucketed(&g, bases, x),
    };
    let t_msm_optimized = time_mean(config.warmup, config.iterations, || optimized(&state.bases, &x))?;

    let naive_iters = naive_iterations(n, config.iterations);
    let naive_warmup = if naive_iters < config.iterations { 1 } else { config.warmup };
    let t_msm_naive = time_mean(naive_warmup, naive_iters, || msm_naive(&g, &state.bases, &x))?;

    let t_msm_library = config
        .library_column
        .then(|| {
            time_mean(config.warmup, config.iterations, || {
                Ok(RistrettoPoint::vartime_multiscalar_mul(x.iter(), state.bases.iter()))
            })
        })
        .transpose()?;

    let response = encode_response(&g, &server_respond(&g, &state.bases, &state.merged, &x)?);
    let t_verify = time_mean(config.warmup, config.iterations, || {
        let resp = decode_response(&g, &response).map_err(|_| Error::InvalidElement)?;
        match client_verify(&g, &key, &x, &resp)?.verdict.is_accept() {
            true => Ok(()),
            false => Err(Error::HonestRejected),
        }
    })?;

    Ok(Ok(BenchRecord {
        n,
        t_msm_optimized,
        t_msm_naive,
        t_verify,
        t_setup,
        speedup_opt: t_msm_optimized / t_verify,
        speedup_naive: t_msm_naive / t_verify,
        threads: config.threads,
        iterations: config.iterations,
        naive_iterations: naive_iters,
        warmup: config.warmup,
        t_msm_library,
    }))
}

/// Whether each speedup is at least `1 - tolerance` times the previous one.
pub fn is_non_decreasing_within(values: &[f64], tolerance: f64) -> bool {
    values.windows(2).all(|w| w[1] >= (1.0 - tolerance) * w[0])
}

pub fn to_csv(records: &[BenchRecord]) -> io::Result<String> {
    if records.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "no benchmark records"));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let library = r.t_msm_library.map(|t| format!("{t:.9}")).unwrap_or_default();
        writeln!(
            out,
            "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{},{},{},{},{}",
            r.n,
            r.t_msm_optimized,
            r.t_msm_naive,
            r.t_verify,
            r.t_setup,
            r.speedup_opt,
            r.speedup_naive,
            r.threads,
            r.iterations,
            r.naive_iterations,
            r.warmup,
            library
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn emit_csv(records: &[BenchRecord], path: &Path) -> io::Result<()> {
    std::fs::write(path, to_csv(records)?)
}

pub fn parse_csv(text: &str) -> io::Result<Vec<BenchRecord>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad("unexpected CSV header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(bad(format!("expected 12 fields: `{line}`")));
            }
            let float = |i: usize| f[i].parse::<f64>().map_err(|_| bad(format!("bad number `{}`", f[i])));
            let int = |i: usize| f[i].parse::<usize>().map_err(|_| bad(format!("bad integer `{}`", f[i])));
            Ok(BenchRecord {
                n: int(0)?,
                t_msm_optimized: float(1)?,
                t_msm_naive: float(2)?,
                t_verify: float(3)?,
                t_setup: float(4)?,
                speedup_opt: float(5)?,
                speedup_naive: float(6)?,
                threads: int(7)?,
                iterations: int(8)?,
                naive_iterations: int(9)?,
                warmup: int(10)?,
                t_msm_library: if f[11].is_empty() { None } else { Some(float(11)?) },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(exponents: Vec<u32>) -> BenchConfig {
        BenchConfig { exponents, iterations: 10, warmup: 1, seed: 5, threads: 1, library_column: true }
    }

    #[test]
    fn small_run_produces_consistent_records() {
        let out = run_benchmark(&quick(vec![2, 4])).unwrap();
        assert!(out.skipped.is_empty());
        assert_eq!(out.records.len(), 2);
        for r in &out.records {
            assert!(r.t_verify > 0.0 && r.t_msm_optimized > 0.0 && r.t_msm_naive > 0.0);
            assert_eq!(r.speedup_opt, r.t_msm_optimized / r.t_verify);
            assert_eq!(r.speedup_naive, r.t_msm_naive / r.t_verify);
            assert!(r.t_msm_library.is_some());
        }
        assert_eq!(out.records[1].n, 16);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = quick(vec![2]);
        c.iterations = 9;
        assert!(run_benchmark(&c).is_err());
        assert!(run_benchmark(&quick(vec![])).is_err());
        let mut c = quick(vec![2]);
        c.threads = 0;
        assert!(run_benchmark(&c).is_err());
        assert!(run_benchmark(&quick(vec![60])).is_err());
    }

    #[test]
    fn parallel_engine_runs() {
        let mut c = quick(vec![5]);
        c.threads = 2;
        c.library_column = false;
        let out = run_benchmark(&c).unwrap();
        assert_eq!(out.records[0].threads, 2);
        assert_eq!(out.records[0].t_msm_library, None);
    }

    #[test]
    fn naive_schedule() {
        assert_eq!(naive_iterations(1 << 15, 20), 20);
        assert_eq!(naive_iterations(1 << 16, 20), 5);
        assert_eq!(naive_iterations(1 << 18, 10), 3);
    }

    #[test]
    fn library_msm_agrees_with_ours() {
        let g = Ristretto255;
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let p: Vec<_> = (0..300).map(|_| g.random_element(&mut rng)).collect();
        let x: Vec<_> = (0..300).map(|_| g.sample_scalar(&mut rng)).collect();
        assert_eq!(RistrettoPoint::vartime_multiscalar_mul(x.iter(), p.iter()), msm_bucketed(&g, &p, &x).unwrap());
    }

    fn record(n: usize, lib: Option<f64>) -> BenchRecord {
        BenchRecord {
            n,
            t_msm_optimized: 0.123456789,
            t_msm_naive: 1.5,
            t_verify: 0.000123456,
            t_setup: 2.25,
            speedup_opt: 0.123456789 / 0.000123456,
            speedup_naive: 1.5 / 0.000123456,
            threads: 1,
            iterations: 20,
            naive_iterations: 5,
            warmup: 3,
            t_msm_library: lib,
        }
    }

    #[test]
    fn csv_round_trip() {
        let records: Vec<_> = (10..=18).map(|e| record(1 << e, (e % 2 == 0).then_some(0.5))).collect();
        let csv = to_csv(&records).unwrap();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("n,t_msm_optimized,t_msm_naive,t_verify,t_setup,speedup_opt,speedup_naive"));
        let parsed = parse_csv(&csv).unwrap();
        assert_eq!(parsed.len(), 9);
        for (a, b) in parsed.iter().zip(&records) {
            assert_eq!(a.n, b.n);
            assert_eq!(a.t_msm_library, b.t_msm_library);
            assert!((a.t_msm_optimized - b.t_msm_optimized).abs() < 1e-9);
            assert!((a.t_verify - b.t_verify).abs() < 1e-9);
            assert!((a.speedup_opt - b.speedup_opt).abs() < 1e-6);
        }
        assert!(to_csv(&[]).is_err());
        assert!(parse_csv("n,x\n").is_err());
    }

    #[test]
    fn emit_to_unwritable_path_fails() {
        let dir = std::env::temp_dir().join("twog2t-no-such-dir-for-bench").join("x.csv");
        assert!(emit_csv(&[record(4, None)], &dir).is_err());
    }

    #[test]
    fn curve_shape() {
        assert!(is_non_decreasing_within(&[10.0, 20.0, 30.0, 27.0, 28.0], 0.2));
        assert!(!is_non_decreasing_within(&[10.0, 20.0, 15.0], 0.2));
        assert!(is_non_decreasing_within(&[], 0.2));
    }
}
