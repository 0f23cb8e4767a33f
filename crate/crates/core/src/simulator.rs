//! Seeded Monte Carlo of partial sums `S_n` and the statistic
//! `r_n = (ln|S_n| - ln(n)/α) / LL(n)` on a geometric checkpoint grid.
//!
//! Each path owns a ChaCha8 stream seeded by [`derive_path_seed`], so a run is
//! bit-identical however many worker threads execute it. Sums are kept in
//! native doubles with Neumaier compensation until a draw or a partial sum
//! leaves double range; from then on the path accumulates in the signed log
//! domain (or fails, under [`OverflowPolicy::Error`]).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::distributions::{DistributionError, DistributionSpec, Draw, Sampler};
use crate::numeric::{ll_of_count, slv_add, ExtendedReal, SignedLogValue};
use crate::sequence::{chover_exponent_limsup, ScaledSequence, SequenceError};

pub const DEFAULT_CHECKPOINT_RATIO: f64 = 1.1;
pub const DEFAULT_N0: u64 = 16;
/// Smallest admissible first checkpoint; `LL(16) > 1`.
pub const MIN_N0: u64 = 16;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("partial sum left double range on path {path} at n = {n}")]
    Overflow { path: u64, n: u64 },
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("traces have different checkpoint grids (path {path})")]
    MismatchedGrids { path: u64 },
    #[error("no traces to aggregate")]
    NoTraces,
    #[error("cannot build worker pool: {0}")]
    ThreadPool(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, SimulationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowPolicy {
    Error,
    SwitchToLog,
}

impl fmt::Display for OverflowPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OverflowPolicy::Error => "error",
            OverflowPolicy::SwitchToLog => "switch_to_log",
        })
    }
}

impl FromStr for OverflowPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "error" => Ok(OverflowPolicy::Error),
            "switch_to_log" | "switch-to-log" => Ok(OverflowPolicy::SwitchToLog),
            other => Err(format!(
                "unknown overflow policy '{other}' (expected error or switch_to_log)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub spec: DistributionSpec,
    /// Normalisation exponent in `n^{1/α}`; need not match the spec's own α.
    pub alpha: f64,
    pub n_max: u64,
    pub checkpoint_ratio: f64,
    pub n0: u64,
    pub paths: u64,
    pub master_seed: u64,
    pub overflow_policy: OverflowPolicy,
    /// Negate every draw. Used to check sign-flip invariance.
    pub mirror: bool,
}

impl SimulationConfig {
    pub fn new(spec: DistributionSpec, alpha: f64, n_max: u64, paths: u64, master_seed: u64) -> Self {
        Self {
            spec,
            alpha,
            n_max,
            checkpoint_ratio: DEFAULT_CHECKPOINT_RATIO,
            n0: DEFAULT_N0,
            paths,
            master_seed,
            overflow_policy: OverflowPolicy::SwitchToLog,
            mirror: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimulationError::InvalidConfig(m));
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return bad(format!("alpha = {} outside (0, 2]", self.alpha));
        }
        if self.n0 < MIN_N0 {
            return bad(format!("n0 = {} below {MIN_N0}", self.n0));
        }
        if self.n_max < self.n0 {
            return bad(format!("n_max = {} below n0 = {}", self.n_max, self.n0));
        }
        if !(self.checkpoint_ratio > 1.0 && self.checkpoint_ratio.is_finite()) {
            return bad(format!("checkpoint ratio = {} must exceed 1", self.checkpoint_ratio));
        }
        if self.paths == 0 {
            return bad("paths must be at least 1".into());
        }
        self.spec.validate()?;
        Ok(())
    }

    /// `⌈n0·ratio^k⌉` up to `n_max`, deduplicated, with `n_max` appended.
    pub fn checkpoints(&self) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        let mut k = 0i32;
        loop {
            let x = (self.n0 as f64 * self.checkpoint_ratio.powi(k)).ceil();
            if x > self.n_max as f64 {
                break;
            }
            let n = x as u64;
            if out.last() != Some(&n) {
                out.push(n);
            }
            k += 1;
        }
        if out.last() != Some(&self.n_max) {
            out.push(self.n_max);
        }
        out
    }
}

/// SplitMix64 finaliser applied to `master + (index + 1)·φ`, with φ the odd
/// 64-bit golden-ratio constant.
///
/// Both the finaliser and multiplication by an odd constant are bijections
/// of `u64`, so distinct indices under one master seed (and distinct master
/// seeds at one index) always yield distinct path seeds.
pub fn derive_path_seed(master_seed: u64, path_index: u64) -> u64 {
    const PHI: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = master_seed.wrapping_add(path_index.wrapping_add(1).wrapping_mul(PHI));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub n: u64,
    pub s: SignedLogValue,
    /// `(ln|S_n| - ln(n)/α) / LL(n)`; `-inf` when `S_n = 0`.
    pub r_log: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    pub path_index: u64,
    pub alpha: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Draws or additions that did not fit in a double.
    pub overflow_events: u64,
    /// First `n` accumulated in the log domain, if any.
    pub log_mode_from: Option<u64>,
}

pub fn r_log(s: SignedLogValue, n: u64, alpha: f64) -> f64 {
    if s.is_zero() {
        return f64::NEG_INFINITY;
    }
    (s.log_mag() - (n as f64).ln() / alpha) / ll_of_count(n)
}

enum Accumulator {
    Native { sum: f64, comp: f64 },
    Log(SignedLogValue),
}

impl Accumulator {
    fn value(&self) -> SignedLogValue {
        match *self {
            Accumulator::Native { sum, comp } => {
                let v = sum + comp;
                if v.is_finite() {
                    SignedLogValue::from_f64(v)
                } else {
                    slv_add(SignedLogValue::from_f64(sum), SignedLogValue::from_f64(comp))
                }
            }
            Accumulator::Log(v) => v,
        }
    }
}

pub fn run_path(config: &SimulationConfig, path_index: u64) -> Result<PathTrace> {
    config.validate()?;
    let sampler = Sampler::new(&config.spec)?;
    run_path_with(config, &sampler, &config.checkpoints(), path_index)
}

fn run_path_with(config: &SimulationConfig, sampler: &Sampler, grid: &[u64], path_index: u64) -> Result<PathTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_path_seed(config.master_seed, path_index));
    let mut acc = Accumulator::Native { sum: 0.0, comp: 0.0 };
    let mut overflow_events = 0u64;
    let mut log_mode_from = None;
    let mut checkpoints = Vec::with_capacity(grid.len());
    let mut next = 0usize;

    for n in 1..=config.n_max {
        let mut d = sampler.draw(&mut rng);
        if config.mirror {
            d = match d {
                Draw::Native(x) => Draw::Native(-x),
                Draw::Log(v) => Draw::Log(-v),
            };
        }
        acc = match (acc, d) {
            (Accumulator::Native { sum, comp }, Draw::Native(x)) => {
                let t = sum + x;
                if t.is_finite() {
                    let comp = if sum.abs() >= x.abs() {
                        comp + ((sum - t) + x)
                    } else {
                        comp + ((x - t) + sum)
                    };
                    Accumulator::Native { sum: t, comp }
                } else {
                    overflow_events += 1;
                    if config.overflow_policy == OverflowPolicy::Error {
                        return Err(SimulationError::Overflow { path: path_index, n });
                    }
                    log_mode_from.get_or_insert(n);
                    let s = slv_add(SignedLogValue::from_f64(sum), SignedLogValue::from_f64(comp));
                    Accumulator::Log(slv_add(s, SignedLogValue::from_f64(x)))
                }
            }
            (Accumulator::Native { sum, comp }, Draw::Log(v)) => {
                overflow_events += 1;
                if config.overflow_policy == OverflowPolicy::Error {
                    return Err(SimulationError::Overflow { path: path_index, n });
                }
                log_mode_from.get_or_insert(n);
                let s = slv_add(SignedLogValue::from_f64(sum), SignedLogValue::from_f64(comp));
                Accumulator::Log(slv_add(s, v))
            }
            (Accumulator::Log(s), d) => {
                if matches!(d, Draw::Log(_)) {
                    overflow_events += 1;
                }
                Accumulator::Log(slv_add(s, d.to_log()))
            }
        };
        if next < grid.len() && grid[next] == n {
            let s = acc.value();
            checkpoints.push(Checkpoint {
                n,
                s,
                r_log: r_log(s, n, config.alpha),
            });
            next += 1;
        }
    }

    Ok(PathTrace {
        path_index,
        alpha: config.alpha,
        checkpoints,
        overflow_events,
        log_mode_from,
    })
}

/// Runs every path of `config`, in parallel on `threads` workers (`0` means
/// rayon's default). Output is ordered by path index; on failure the error
/// of the lowest failing path is returned.
pub fn run_paths(config: &SimulationConfig, threads: usize) -> Result<Vec<PathTrace>> {
    config.validate()?;
    let sampler = Sampler::new(&config.spec)?;
    let grid = config.checkpoints();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimulationError::ThreadPool(e.to_string()))?;
    let results: Vec<Result<PathTrace>> = pool.install(|| {
        (0..config.paths)
            .into_par_iter()
            .map(|i| run_path_with(config, &sampler, &grid, i))
            .collect()
    });
    results.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointQuantiles {
    pub checkpoint_n: u64,
    pub q10: ExtendedReal,
    pub q50: ExtendedReal,
    pub q90: ExtendedReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathEstimate {
    pub path: u64,
    pub exponent_estimate: ExtendedReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentBand {
    pub paths: usize,
    pub min: ExtendedReal,
    pub q10: ExtendedReal,
    pub median: ExtendedReal,
    pub q90: ExtendedReal,
    pub max: ExtendedReal,
}

impl ExponentBand {
    pub fn contains(&self, x: f64) -> bool {
        self.q10 <= ExtendedReal::from(x) && ExtendedReal::from(x) <= self.q90
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub checkpoints: Vec<CheckpointQuantiles>,
    pub estimates: Vec<PathEstimate>,
    pub band: ExponentBand,
}

/// Inverse empirical CDF: the `⌈q·len⌉`-th smallest value (1-based).
pub fn quantile(sorted: &[ExtendedReal], q: f64) -> ExtendedReal {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn path_estimate(trace: &PathTrace, tail_fraction: f64) -> Result<ExtendedReal> {
    let log_abs: Vec<f64> = trace
        .checkpoints
        .iter()
        .map(|c| c.s.log_mag() - (c.n as f64).ln() / trace.alpha)
        .collect();
    let c: Vec<f64> = trace.checkpoints.iter().map(|c| ll_of_count(c.n)).collect();
    if log_abs.len() == 1 {
        return Ok(ExtendedReal::from(log_abs[0] / c[0]));
    }
    let seq = ScaledSequence::from_log_magnitudes(log_abs, c, tail_fraction)?;
    Ok(chover_exponent_limsup(&seq))
}

pub fn aggregate(traces: &[PathTrace], tail_fraction: f64) -> Result<SimulationSummary> {
    let first = traces.first().ok_or(SimulationError::NoTraces)?;
    let grid: Vec<u64> = first.checkpoints.iter().map(|c| c.n).collect();
    for t in traces {
        if t.checkpoints.len() != grid.len() || t.checkpoints.iter().zip(&grid).any(|(c, &n)| c.n != n) {
            return Err(SimulationError::MismatchedGrids { path: t.path_index });
        }
    }

    let checkpoints = grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut col: Vec<ExtendedReal> = traces
                .iter()
                .map(|t| ExtendedReal::from(t.checkpoints[k].r_log))
                .collect();
            col.sort();
            CheckpointQuantiles {
                checkpoint_n: n,
                q10: quantile(&col, 0.1),
                q50: quantile(&col, 0.5),
                q90: quantile(&col, 0.9),
            }
        })
        .collect();

    let estimates = traces
        .iter()
        .map(|t| {
            Ok(PathEstimate {
                path: t.path_index,
                exponent_estimate: path_estimate(t, tail_fraction)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sorted: Vec<ExtendedReal> = estimates.iter().map(|e| e.exponent_estimate).collect();
    sorted.sort();
    let band = ExponentBand {
        paths: sorted.len(),
        min: sorted[0],
        q10: quantile(&sorted, 0.1),
        median: quantile(&sorted, 0.5),
        q90: quantile(&sorted, 0.9),
        max: sorted[sorted.len() - 1],
    };

    Ok(SimulationSummary {
        checkpoints,
        estimates,
        band,
    })
}

/// Writes `path,n,sign,log_abs_s,r_log`, one row per checkpoint, in path order.
pub fn write_trace_csv<W: Write>(out: W, traces: &[PathTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path", "n", "sign", "log_abs_s", "r_log"])?;
    for t in traces {
        for c in &t.checkpoints {
            w.write_record([
                t.path_index.to_string(),
                c.n.to_string(),
                c.s.sign().as_i8().to_string(),
                c.s.log_mag().to_string(),
                c.r_log.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// JSON-lines: checkpoint quantiles, then per-path estimates, then the band.
pub fn write_summary_jsonl<W: Write>(mut out: W, summary: &SimulationSummary) -> Result<()> {
    for q in &summary.checkpoints {
        serde_json::to_writer(&mut out, q)?;
        out.write_all(b"\n")?;
    }
    for e in &summary.estimates {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut out, &summary.band)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
