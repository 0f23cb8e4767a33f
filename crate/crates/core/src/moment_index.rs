//! The moment functional `M(b) = E[|X|^α / (L|X|)^{bα}]`, its index
//! `inf{b : M(b) < ∞}`, and the truncated second moment `H(x) = E[X² 1{|X| <= x}]`.
//!
//! The analytic index uses the all-real-`b` convention, so a Gaussian has
//! index `-∞`; [`MomentIndexResult::positive_b_index`] gives the `b > 0`
//! variant used at `α = 2`.

use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::distributions::{
    lattice_log_series, stable_asymptotic_log_threshold, stable_tail_constant, DistributionError, DistributionSpec,
    LogWeibullSampler, Sampler,
};
use crate::numeric::{log_add_exp, log_sum_exp, ExtendedReal};
use crate::quadrature::{log_integrate, log_integrate_upper, QuadOptions, QuadratureError};

/// Octaves `[2^k, 2^{k+1}]` of `u = ln x` fitted by the numeric index test.
pub const OCTAVE_FIRST: u32 = 15;
pub const OCTAVE_LAST: u32 = 34;
/// Per-octave slope band (natural log) treated as indeterminate.
pub const SLOPE_MARGIN: f64 = 0.05;

const MC_DRAWS: usize = 200_000;
const MC_SEED: u64 = 0x6d6f_6d65_6e74;

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("alpha = {0} outside (0, 2]")]
    AlphaOutOfRange(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("tail evaluation failed at ln x = {log_x}: {message}")]
    TailFailure { log_x: f64, message: String },
    #[error("index not resolvable at this resolution: {0}")]
    Unresolvable(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

type Result<T> = std::result::Result<T, MomentError>;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(MomentError::AlphaOutOfRange(alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMethod {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum ProbeVerdict {
    Finite { value: Option<f64> },
    Infinite,
    Indeterminate,
}

impl ProbeVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self, ProbeVerdict::Finite { .. })
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ProbeVerdict::Infinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub b: f64,
    #[serde(flatten)]
    pub verdict: ProbeVerdict,
    /// Fitted per-octave slope of `ln I_k` (numeric probes only).
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentIndexResult {
    pub index: ExtendedReal,
    pub method: IndexMethod,
    /// Probes in increasing `b`.
    pub probes: Vec<Probe>,
    pub alpha: f64,
    /// Bracket `[largest b known infinite, smallest b known finite]`.
    pub interval: (ExtendedReal, ExtendedReal),
    pub evidence: String,
}

impl MomentIndexResult {
    /// `max(index, 0)`: the index when only `b > 0` is admitted.
    pub fn positive_b_index(&self) -> ExtendedReal {
        self.index.max(ExtendedReal::Finite(0.0))
    }

    /// No probe reported infinite above a probe that reported finite.
    pub fn is_monotone(&self) -> bool {
        let mut seen_finite = false;
        for p in &self.probes {
            if p.verdict.is_finite() {
                seen_finite = true;
            } else if p.verdict.is_infinite() && seen_finite {
                return false;
            }
        }
        true
    }

    /// The bracket contains `target` and the point estimate is within `tol`.
    pub fn brackets(&self, target: f64, tol: f64) -> bool {
        let t = ExtendedReal::Finite(target);
        let inside = self.interval.0 <= t && t <= self.interval.1;
        let close = match self.index {
            ExtendedReal::Finite(v) => (v - target).abs() <= tol,
            _ => false,
        };
        inside && close
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinitenessCertificate {
    pub b: f64,
    /// The value when finite, `+∞` when the functional diverges.
    pub value_or_divergence: ExtendedReal,
    pub evidence: String,
    /// Set when the value (not the verdict) rests on asymptotics or sampling.
    pub approximate: bool,
}

impl FinitenessCertificate {
    pub fn is_finite(&self) -> bool {
        self.value_or_divergence.is_finite()
    }
}

impl fmt::Display for FinitenessCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M({}) = {} [{}]", self.b, self.value_or_divergence, self.evidence)
    }
}

/// Finiteness of `M(b)` from the tail class alone.
fn finiteness(core: &DistributionSpec, alpha: f64, b: f64) -> (bool, String) {
    let cmp = |natural: f64| alpha.partial_cmp(&natural).expect("finite exponents");
    use std::cmp::Ordering::*;
    match *core {
        DistributionSpec::SymmetricStable { alpha: a } => match cmp(a) {
            Less => (true, format!("tail exponent {a} exceeds alpha")),
            Greater => (false, format!("tail exponent {a} below alpha")),
            Equal => (
                b > 1.0 / alpha,
                format!("tail integral of u^(-{}) on [ln x0, ∞)", b * alpha),
            ),
        },
        DistributionSpec::GaussianUnitVariance => (true, "all moments finite".into()),
        DistributionSpec::LatticeExp2 { alpha: a, lambda } => match cmp(a) {
            Less => (true, format!("series terms decay like exp(-{} 2^n)", a - alpha)),
            Greater => (false, format!("series terms grow like exp({} 2^n)", alpha - a)),
            Equal => {
                let ratio = 2f64.powf(lambda - b * alpha);
                (ratio < 1.0, format!("geometric ratio 2^(λ-bα) = {ratio}"))
            }
        },
        DistributionSpec::LogWeibullTail { alpha: a, p, .. } => match cmp(a) {
            Less => (true, format!("tail exponent {a} exceeds alpha")),
            Greater => (false, format!("tail exponent {a} below alpha")),
            Equal => (p < 0.0, format!("integrand carries exp(p u^γ) with p = {p}")),
        },
        DistributionSpec::Degenerate { .. } => (true, "point mass".into()),
        DistributionSpec::Shifted { .. } => unreachable!("core() strips shifts"),
    }
}

/// `ln ψ(x)` for `ψ(x) = x^α L(x)^{-bα}` given `ln x`.
#[inline]
fn log_psi(log_x: f64, alpha: f64, b: f64) -> f64 {
    if log_x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    alpha * log_x - b * alpha * log_x.max(1.0).ln()
}

/// `ln E[ψ(|X|) 1{|X| <= bound}]` by a fixed-seed Monte Carlo average.
fn monte_carlo_log_mean<F: Fn(f64) -> f64>(spec: &DistributionSpec, log_f: F, log_bound: f64) -> Result<f64> {
    let sampler = Sampler::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(MC_SEED);
    let mut terms = Vec::with_capacity(MC_DRAWS);
    for _ in 0..MC_DRAWS {
        let lm = sampler.draw_log(&mut rng).log_mag();
        if lm <= log_bound {
            terms.push(log_f(lm));
        }
    }
    Ok(log_sum_exp(&terms) - (MC_DRAWS as f64).ln())
}

/// Evaluates `M(b)` for `spec` at exponent `alpha`.
pub fn moment_functional(spec: &DistributionSpec, alpha: f64, b: f64) -> Result<FinitenessCertificate> {
    check_alpha(alpha)?;
    spec.validate()?;
    let (core, shift) = spec.core();
    let mut note = String::new();
    if let Some(a) = spec.natural_alpha() {
        if a != alpha {
            note = format!("alpha {alpha} differs from family exponent {a}; ");
        }
    }
    let cert = |value: f64, evidence: String, approximate: bool| FinitenessCertificate {
        b,
        value_or_divergence: ExtendedReal::Finite(value),
        evidence: format!("{note}{evidence}"),
        approximate,
    };
    if let DistributionSpec::Degenerate { value } = *core {
        let v = (value + shift).abs();
        return Ok(cert(
            log_psi(v.ln(), alpha, b).exp(),
            "closed form at the atom".into(),
            false,
        ));
    }
    let (finite, why) = finiteness(core, alpha, b);
    if !finite {
        return Ok(FinitenessCertificate {
            b,
            value_or_divergence: ExtendedReal::PosInfinity,
            evidence: format!("{note}{why}"),
            approximate: false,
        });
    }
    if shift != 0.0 {
        let lv = monte_carlo_log_mean(spec, |lm| log_psi(lm, alpha, b), f64::INFINITY)?;
        return Ok(cert(
            lv.exp(),
            format!("{why}; value by Monte Carlo over the shifted law"),
            true,
        ));
    }
    let opts = QuadOptions::default();
    match *core {
        DistributionSpec::SymmetricStable { alpha: a } => {
            let log_x0 = stable_asymptotic_log_threshold(a);
            let body = monte_carlo_log_mean(core, |lm| log_psi(lm, alpha, b), log_x0)?;
            // ∫_{x0}^∞ ψ(x) a C x^{-a-1} dx in u = ln x
            let log_ac = (a * stable_tail_constant(a)).ln();
            let tail = log_integrate_upper(
                move |u: f64| log_ac + (alpha - a) * u - b * alpha * u.max(1.0).ln(),
                log_x0,
                1.0,
                opts,
            )?
            .log_value;
            Ok(cert(
                log_add_exp(body, tail).exp(),
                format!("{why}; body by Monte Carlo, tail from the asymptotic density"),
                true,
            ))
        }
        DistributionSpec::GaussianUnitVariance => {
            let log_norm = 2f64.ln() - 0.5 * (2.0 * PI).ln();
            let f = move |x: f64| log_norm + log_psi(x.ln(), alpha, b) - 0.5 * x * x;
            let parts = [
                log_integrate(f, 0.0, 1.0, opts)?.log_value,
                log_integrate(f, 1.0, std::f64::consts::E, opts)?.log_value,
                log_integrate(f, std::f64::consts::E, 40.0, opts)?.log_value,
            ];
            Ok(cert(
                log_sum_exp(&parts).exp(),
                "quadrature against the normal density".into(),
                false,
            ))
        }
        DistributionSpec::LatticeExp2 { alpha: a, lambda } => {
            if a == alpha {
                let r = 2f64.powf(lambda - b * alpha);
                let c = (-lattice_log_series(a, lambda)).exp();
                return Ok(cert(c * r / (1.0 - r), why, false));
            }
            let log_c = -lattice_log_series(a, lambda);
            let term = |n: u32| {
                let d = 2f64.powi(n as i32);
                log_c + n as f64 * (lambda - b * alpha) * LN_2 + (alpha - a) * d
            };
            let mut acc = f64::NEG_INFINITY;
            let mut n = 1;
            loop {
                let t = term(n);
                acc = log_add_exp(acc, t);
                if (term(n + 1) < t && term(n + 1) < acc - 45.0) || n > 1100 {
                    break;
                }
                n += 1;
            }
            Ok(cert(acc.exp(), format!("{why}; series summed in log form"), false))
        }
        DistributionSpec::LogWeibullTail { alpha: a, p, gamma } => {
            let s = LogWeibullSampler::new(a, p, gamma)?;
            let f = move |u: f64| (alpha - a) * u + p * u.powf(gamma) - b * alpha * u.ln();
            let v = log_integrate_upper(f, 1.0, 1.0, opts)?.log_value - s.log_normalizer();
            Ok(cert(v.exp(), format!("{why}; quadrature in u = ln x"), false))
        }
        DistributionSpec::Degenerate { .. } | DistributionSpec::Shifted { .. } => unreachable!(),
    }
}

/// The index from the family's closed-form tail class.
pub fn moment_index_analytic(spec: &DistributionSpec, alpha: f64) -> Result<MomentIndexResult> {
    check_alpha(alpha)?;
    spec.validate()?;
    let (core, _) = spec.core();
    use std::cmp::Ordering::*;
    let by_exponent = |natural: f64, equal: ExtendedReal| match alpha.partial_cmp(&natural).expect("finite") {
        Less => ExtendedReal::NegInfinity,
        Greater => ExtendedReal::PosInfinity,
        Equal => equal,
    };
    let (index, evidence) = match *core {
        DistributionSpec::SymmetricStable { alpha: a } => (
            by_exponent(a, ExtendedReal::Finite(1.0 / alpha)),
            "stable tail C x^(-α)",
        ),
        DistributionSpec::GaussianUnitVariance => (
            ExtendedReal::NegInfinity,
            "every real b finite; 0 when only b > 0 is admitted",
        ),
        DistributionSpec::LatticeExp2 { alpha: a, lambda } => (
            by_exponent(a, ExtendedReal::Finite(lambda / alpha)),
            "geometric series in 2^(λ-bα)",
        ),
        DistributionSpec::LogWeibullTail { alpha: a, p, .. } => {
            let eq = if p < 0.0 {
                ExtendedReal::NegInfinity
            } else {
                ExtendedReal::PosInfinity
            };
            (by_exponent(a, eq), "exp(p (ln x)^γ) factor decides for every b")
        }
        DistributionSpec::Degenerate { .. } => (ExtendedReal::NegInfinity, "bounded variable"),
        DistributionSpec::Shifted { .. } => unreachable!(),
    };
    let probe_bs: Vec<f64> = match index {
        ExtendedReal::Finite(i) => vec![i - 0.25, i + 0.25],
        _ => vec![-1.0, 0.0, 1.0],
    };
    let probes = probe_bs
        .into_iter()
        .map(|b| {
            let (fin, _) = match core {
                DistributionSpec::Degenerate { .. } => (true, String::new()),
                c => finiteness(c, alpha, b),
            };
            Probe {
                b,
                verdict: if fin {
                    ProbeVerdict::Finite { value: None }
                } else {
                    ProbeVerdict::Infinite
                },
                slope: None,
            }
        })
        .collect();
    Ok(MomentIndexResult {
        index,
        method: IndexMethod::Analytic,
        probes,
        alpha,
        interval: (index, index),
        evidence: evidence.into(),
    })
}

fn fit_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// One dyadic-increment probe: `ln I_k` over the octaves, slope, verdict.
fn numeric_probe<F, E>(tail_log: &F, alpha: f64, b: f64) -> Result<Probe>
where
    F: Fn(f64) -> std::result::Result<f64, E> + Sync,
    E: fmt::Display,
{
    // αu and ln P cancel to a few ulp of 2^35 here, so ~1e-6 is the noise floor
    let opts = QuadOptions {
        rel_tol: 1e-4,
        max_panels: 4000,
    };
    let log_alpha = alpha.ln();
    let increments: Vec<Result<f64>> = (OCTAVE_FIRST..=OCTAVE_LAST)
        .into_par_iter()
        .map(|k| {
            let failure: RefCell<Option<(f64, String)>> = RefCell::new(None);
            let integrand = |u: f64| match tail_log(u) {
                Ok(t) => log_alpha + alpha * u - b * alpha * u.ln() + t,
                Err(e) => {
                    failure.borrow_mut().get_or_insert((u, e.to_string()));
                    f64::NAN
                }
            };
            let lo = 2f64.powi(k as i32);
            let r = log_integrate(integrand, lo, 2.0 * lo, opts);
            if let Some((log_x, message)) = failure.into_inner() {
                return Err(MomentError::TailFailure { log_x, message });
            }
            Ok(r?.log_value)
        })
        .collect();
    let ys = increments.into_iter().collect::<Result<Vec<f64>>>()?;
    let slope = if ys.contains(&f64::INFINITY) {
        f64::INFINITY
    } else if ys.contains(&f64::NEG_INFINITY) {
        // the tail vanishes identically from some octave on
        f64::NEG_INFINITY
    } else {
        fit_slope(&ys)
    };
    let verdict = if slope < -SLOPE_MARGIN {
        ProbeVerdict::Finite { value: None }
    } else if slope > SLOPE_MARGIN {
        ProbeVerdict::Infinite
    } else {
        ProbeVerdict::Indeterminate
    };
    Ok(Probe {
        b,
        verdict,
        slope: Some(slope),
    })
}

/// Bisection for the index of a tail given as `ln x ↦ ln P(|X| > x)`.
///
/// Each probe fits the per-octave growth of
/// `I_k = ∫ α x^{α-1} (Lx)^{-bα} P(|X| > x) dx` over `ln x ∈ [2^k, 2^{k+1}]`.
/// Probes inside the slope margin are indeterminate; both edges of that
/// band are then located separately and the returned interval spans it.
pub fn moment_index_numeric<F, E>(tail_log: F, alpha: f64, b_lo: f64, b_hi: f64, tol: f64) -> Result<MomentIndexResult>
where
    F: Fn(f64) -> std::result::Result<f64, E> + Sync,
    E: fmt::Display,
{
    check_alpha(alpha)?;
    if !(b_lo < b_hi) || !(tol > 0.0) {
        return Err(MomentError::InvalidArgument(format!(
            "need b_lo < b_hi and tol > 0, got [{b_lo}, {b_hi}], tol {tol}"
        )));
    }
    let mut probes = Vec::new();
    let mut probe = |b: f64| -> Result<ProbeVerdict> {
        let p = numeric_probe(&tail_log, alpha, b)?;
        probes.push(p);
        Ok(p.verdict)
    };
    let lo_v = probe(b_lo)?;
    let hi_v = probe(b_hi)?;
    let finish = |mut probes: Vec<Probe>, index, interval, evidence: String| {
        probes.sort_by(|a, b| a.b.total_cmp(&b.b));
        Ok(MomentIndexResult {
            index,
            method: IndexMethod::Numeric,
            probes,
            alpha,
            interval,
            evidence,
        })
    };
    if lo_v.is_finite() {
        return finish(
            probes,
            ExtendedReal::NegInfinity,
            (ExtendedReal::NegInfinity, ExtendedReal::Finite(b_lo)),
            format!("all probes finite down to b_lo = {b_lo}"),
        );
    }
    if hi_v.is_infinite() {
        return finish(
            probes,
            ExtendedReal::PosInfinity,
            (ExtendedReal::Finite(b_hi), ExtendedReal::PosInfinity),
            format!("all probes infinite up to b_hi = {b_hi}"),
        );
    }
    let (mut a, mut z) = (b_lo, b_hi);
    let mut band: Option<f64> = None;
    while z - a > tol {
        let mid = 0.5 * (a + z);
        match probe(mid)? {
            ProbeVerdict::Finite { .. } => z = mid,
            ProbeVerdict::Infinite => a = mid,
            ProbeVerdict::Indeterminate => {
                band = Some(mid);
                break;
            }
        }
    }
    if let Some(m) = band {
        let (mut left_hi, mut right_lo) = (m, m);
        while left_hi - a > tol / 2.0 {
            let mid = 0.5 * (a + left_hi);
            if probe(mid)?.is_infinite() {
                a = mid;
            } else {
                left_hi = mid;
            }
        }
        while z - right_lo > tol / 2.0 {
            let mid = 0.5 * (right_lo + z);
            if probe(mid)?.is_finite() {
                z = mid;
            } else {
                right_lo = mid;
            }
        }
    }
    let determinate = probes.iter().any(|p| !matches!(p.verdict, ProbeVerdict::Indeterminate));
    if !determinate {
        return Err(MomentError::Unresolvable(format!(
            "every probe in [{b_lo}, {b_hi}] fell inside the slope margin"
        )));
    }
    let evidence = match (band.is_some(), lo_v.is_infinite(), hi_v.is_finite()) {
        (false, true, true) => format!("bisection to width {}", z - a),
        (true, _, _) => format!("indeterminate band resolved to [{a}, {z}]"),
        _ => format!("end probes not both determinate; interval [{a}, {z}] is open-ended"),
    };
    finish(
        probes,
        ExtendedReal::Finite(0.5 * (a + z)),
        (ExtendedReal::Finite(a), ExtendedReal::Finite(z)),
        evidence,
    )
}

/// [`moment_index_numeric`] on a distribution's own tail.
pub fn moment_index_numeric_for(
    spec: &DistributionSpec,
    alpha: f64,
    b_lo: f64,
    b_hi: f64,
    tol: f64,
) -> Result<MomentIndexResult> {
    spec.validate()?;
    moment_index_numeric(
        |log_x: f64| crate::distributions::tail_prob_log_at(spec, log_x).map(|t| t.log_p),
        alpha,
        b_lo,
        b_hi,
        tol,
    )
}

/// `ln H(x)` for `H(x) = E[X² 1{|X| <= x}]`, given `ln x`.
pub fn truncated_second_moment_log(spec: &DistributionSpec, log_x: f64) -> Result<f64> {
    if log_x.is_nan() {
        return Err(MomentError::InvalidArgument("ln x is NaN".into()));
    }
    spec.validate()?;
    let (core, shift) = spec.core();
    let opts = QuadOptions::default();
    let mc = |spec: &DistributionSpec| monte_carlo_log_mean(spec, |lm| 2.0 * lm, log_x);
    match *core {
        DistributionSpec::Degenerate { value } => {
            let v = (value + shift).abs();
            Ok(if v.ln() <= log_x {
                2.0 * v.ln()
            } else {
                f64::NEG_INFINITY
            })
        }
        DistributionSpec::GaussianUnitVariance => {
            if log_x == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            let x = log_x.exp().min(60.0);
            if shift == 0.0 {
                let phi = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
                let h = libm::erf(x / std::f64::consts::SQRT_2) - 2.0 * x * phi;
                if h > 1e-3 {
                    return Ok(h.ln());
                }
            }
            // (z + s)^2 φ(z) over z ∈ [-x - s, x - s]
            let f = move |z: f64| 2.0 * (z + shift).abs().ln() - 0.5 * z * z - 0.5 * (2.0 * PI).ln();
            let (lo, hi) = (-x - shift, x - shift);
            let mut parts = Vec::new();
            if lo < -shift && -shift < hi {
                parts.push(log_integrate(f, lo, -shift, opts)?.log_value);
                parts.push(log_integrate(f, -shift, hi, opts)?.log_value);
            } else {
                parts.push(log_integrate(f, lo, hi, opts)?.log_value);
            }
            Ok(log_sum_exp(&parts))
        }
        DistributionSpec::LatticeExp2 { alpha, lambda } => {
            let log_c = -lattice_log_series(alpha, lambda);
            // atoms sit at ln x = 2^n exactly; absorb rounding in a caller's ln(exp(2^n))
            let within = |log_v: f64| log_v <= log_x + 4.0 * f64::EPSILON * log_x.abs().max(1.0);
            let mut terms = Vec::new();
            for n in 1..=1100u32 {
                let d = 2f64.powi(n as i32);
                let mass = log_c + n as f64 * lambda * LN_2 - alpha * d - LN_2;
                if d <= 700.0 && shift != 0.0 {
                    let dn = d.exp();
                    for v in [dn + shift, -dn + shift] {
                        if within(v.abs().ln()) {
                            terms.push(mass + 2.0 * v.abs().ln());
                        }
                    }
                } else if within(d) {
                    terms.push(mass + LN_2 + 2.0 * d);
                } else {
                    break;
                }
            }
            Ok(log_sum_exp(&terms))
        }
        DistributionSpec::LogWeibullTail { alpha, p, gamma } => {
            if shift != 0.0 {
                return mc(spec);
            }
            if log_x <= 1.0 {
                return Ok(f64::NEG_INFINITY);
            }
            let s = LogWeibullSampler::new(alpha, p, gamma)?;
            let f = move |u: f64| (2.0 - alpha) * u + p * u.powf(gamma);
            Ok(log_integrate(f, 1.0, log_x, opts)?.log_value - s.log_normalizer())
        }
        DistributionSpec::SymmetricStable { alpha } => {
            let log_x0 = stable_asymptotic_log_threshold(alpha);
            let body = monte_carlo_log_mean(spec, |lm| 2.0 * lm, log_x.min(log_x0))?;
            if log_x <= log_x0 {
                return Ok(body);
            }
            // ∫_{x0}^{x} t^2 α C t^{-α-1} dt in u = ln t
            let log_ac = (alpha * stable_tail_constant(alpha)).ln();
            let tail = log_integrate(move |u: f64| log_ac + (2.0 - alpha) * u, log_x0, log_x, opts)?.log_value;
            Ok(log_add_exp(body, tail))
        }
        DistributionSpec::Shifted { .. } => unreachable!(),
    }
}

/// `H(x) = E[X² 1{|X| <= x}]`.
pub fn truncated_second_moment(spec: &DistributionSpec, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(MomentError::InvalidArgument(format!("x = {x} must be nonnegative")));
    }
    Ok(truncated_second_moment_log(spec, x.ln())?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionVerdict {
    Holds,
    Fails,
    Indeterminate,
}

impl fmt::Display for ConditionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionVerdict::Holds => "holds",
            ConditionVerdict::Fails => "fails",
            ConditionVerdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub verdict: ConditionVerdict,
    /// `ln g(x_j)` at `x_j = exp(2^j)`, `j = 1..=9`.
    pub log_g: Vec<f64>,
}

/// Finite-grid check of `LL(x) / L(x)^{2b} · H(x) → 0`.
///
/// `g` is evaluated at `x = exp(2^j)`, `j = 1..=9`. Holds when the last
/// value is at least 10× below the peak and the last four values strictly
/// decrease; fails when the last four strictly increase.
pub fn einmahl_li_condition(spec: &DistributionSpec, b: f64) -> Result<ConditionReport> {
    if !(b > 0.0) {
        return Err(MomentError::InvalidArgument(format!("b = {b} must be positive")));
    }
    let mut log_g = Vec::with_capacity(9);
    for j in 1..=9 {
        let log_l = 2f64.powi(j);
        let ll = log_l.ln().max(1.0);
        let h = truncated_second_moment_log(spec, log_l)?;
        log_g.push(ll.ln() - 2.0 * b * log_l.ln() + h);
    }
    let tail = &log_g[log_g.len() - 4..];
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    let peak = log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = *log_g.last().expect("nine grid points");
    let verdict = if peak == f64::NEG_INFINITY || (decreasing && peak - last >= 10f64.ln()) {
        ConditionVerdict::Holds
    } else if increasing {
        ConditionVerdict::Fails
    } else {
        ConditionVerdict::Indeterminate
    };
    Ok(ConditionReport { verdict, log_g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::lattice_constant;

    fn lattice(a: f64, l: f64) -> DistributionSpec {
        DistributionSpec::lattice(a, l).unwrap()
    }

    #[test]
    fn lattice_functional_examples() {
        let s = lattice(1.0, 2.0);
        assert!(!moment_functional(&s, 1.0, 1.0).unwrap().is_finite());
        let c = lattice_constant(1.0, 2.0).unwrap();
        let m = moment_functional(&s, 1.0, 3.0).unwrap();
        // c Σ 2^{-n} = c
        assert!((m.value_or_divergence.to_f64() - c).abs() < 1e-12 * c);
        assert!(!m.approximate);
    }

    #[test]
    fn lattice_functional_mismatch_sums_series() {
        // alpha below the family exponent: direct brute series
        let (a, l, alpha, b) = (1.5, 1.0, 1.0, 0.5);
        let c = lattice_constant(a, l).unwrap();
        let want: f64 = (1..40)
            .map(|n| {
                let d = 2f64.powi(n);
                c * 2f64.powf(n as f64 * (l - b * alpha)) * ((alpha - a) * d).exp()
            })
            .sum();
        let got = moment_functional(&lattice(a, l), alpha, b).unwrap();
        assert!((got.value_or_divergence.to_f64() - want).abs() < 1e-12 * want);
        assert!(got.evidence.contains("differs"));
        assert!(!moment_functional(&lattice(a, l), 1.8, 100.0).unwrap().is_finite());
    }

    #[test]
    fn log_weibull_functional() {
        let s = DistributionSpec::log_weibull(1.0, -1.0, 0.5).unwrap();
        assert!(moment_functional(&s, 1.0, -5.0).unwrap().is_finite());
        let s = DistributionSpec::log_weibull(1.0, 1.0, 0.5).unwrap();
        assert!(!moment_functional(&s, 1.0, 50.0).unwrap().is_finite());
    }

    #[test]
    fn gaussian_and_degenerate_functional() {
        let g = DistributionSpec::gaussian();
        // α = 2, b = 0: E X^2 = 1
        let m = moment_functional(&g, 2.0, 0.0).unwrap();
        assert!((m.value_or_divergence.to_f64() - 1.0).abs() < 1e-9);
        let d = DistributionSpec::degenerate(-3.0).unwrap();
        let m = moment_functional(&d, 2.0, 1.0).unwrap();
        // 9 / (ln 3)^2
        assert!((m.value_or_divergence.to_f64() - 9.0 / 3f64.ln().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn stable_functional_verdict_is_exact_and_value_flagged() {
        let s = DistributionSpec::symmetric_stable(1.5).unwrap();
        assert!(!moment_functional(&s, 1.5, 0.6).unwrap().is_finite());
        let m = moment_functional(&s, 1.5, 1.0).unwrap();
        assert!(m.is_finite() && m.approximate);
    }

    #[test]
    fn analytic_indices() {
        let st = |a| DistributionSpec::symmetric_stable(a).unwrap();
        assert_eq!(
            moment_index_analytic(&st(0.5), 0.5).unwrap().index,
            ExtendedReal::Finite(2.0)
        );
        assert_eq!(
            moment_index_analytic(&lattice(2.0, 1.0), 2.0).unwrap().index,
            ExtendedReal::Finite(0.5)
        );
        let lw = DistributionSpec::log_weibull(1.0, 1.0, 0.5).unwrap();
        assert_eq!(
            moment_index_analytic(&lw, 1.0).unwrap().index,
            ExtendedReal::PosInfinity
        );
        let g = moment_index_analytic(&DistributionSpec::gaussian(), 2.0).unwrap();
        assert_eq!(g.index, ExtendedReal::NegInfinity);
        assert_eq!(g.positive_b_index(), ExtendedReal::Finite(0.0));
        let sh = DistributionSpec::shifted(lattice(1.0, -1.0), 5.0).unwrap();
        assert_eq!(
            moment_index_analytic(&sh, 1.0).unwrap().index,
            ExtendedReal::Finite(-1.0)
        );
        assert!(moment_index_analytic(&st(1.0), 2.5).is_err());
    }

    #[test]
    fn numeric_pareto_tail() {
        let r = moment_index_numeric(|u: f64| Ok::<f64, String>(-u), 1.0, -2.0, 4.0, 0.1).unwrap();
        assert!(r.brackets(1.0, 0.1), "{r:?}");
        assert!(r.is_monotone());
    }

    #[test]
    fn numeric_exponential_tail_is_all_finite() {
        let r = moment_index_numeric(|u: f64| Ok::<f64, String>(-u.exp()), 2.0, -3.0, 3.0, 0.1).unwrap();
        assert_eq!(r.index, ExtendedReal::NegInfinity);
        assert_eq!(r.interval.1, ExtendedReal::Finite(-3.0));
        assert!(r.evidence.contains("all probes finite"));
    }

    #[test]
    fn numeric_stable_matches_analytic() {
        let s = DistributionSpec::symmetric_stable(1.5).unwrap();
        let r = moment_index_numeric_for(&s, 1.5, -3.0, 5.0, 0.1).unwrap();
        assert!(r.brackets(2.0 / 3.0, 0.1), "{r:?}");
    }

    #[test]
    fn numeric_reports_tail_failure() {
        let r = moment_index_numeric(|_u: f64| Err::<f64, &str>("boom"), 1.0, 0.0, 2.0, 0.1);
        assert!(matches!(r, Err(MomentError::TailFailure { .. })));
    }

    #[test]
    fn truncated_second_moment_examples() {
        let z = DistributionSpec::degenerate(0.0).unwrap();
        assert_eq!(truncated_second_moment(&z, 5.0).unwrap(), 0.0);
        let s = lattice(2.0, 1.0);
        let c = lattice_constant(2.0, 1.0).unwrap();
        let h = truncated_second_moment(&s, 8f64.exp()).unwrap();
        assert!((h - 14.0 * c).abs() < 1e-10 * c, "{h} vs {}", 14.0 * c);
        assert!(truncated_second_moment(&s, -1.0).is_err());
        let g = DistributionSpec::gaussian();
        assert!((truncated_second_moment(&g, 50.0).unwrap() - 1.0).abs() < 1e-12);
        // E Z^2 1{|Z| <= 1} = erf(1/√2) - 2 φ(1)
        let want = 0.682_689_492_137_085_9 - 2.0 * (-0.5f64).exp() / (2.0 * PI).sqrt();
        assert!((truncated_second_moment(&g, 1.0).unwrap() - want).abs() < 1e-14);
        // shifted normal at large x: E (Z + 2)^2 = 5
        let sg = DistributionSpec::shifted(g, 2.0).unwrap();
        assert!((truncated_second_moment(&sg, 40.0).unwrap() - 5.0).abs() < 1e-8);
    }

    #[test]
    fn truncated_second_moment_log_weibull_against_direct_quadrature() {
        let (a, p, g) = (1.5, -1.0, 0.5);
        let s = DistributionSpec::log_weibull(a, p, g).unwrap();
        let z = LogWeibullSampler::new(a, p, g).unwrap().log_normalizer().exp();
        // plain-space midpoint rule over u ∈ [1, 5]
        let m = 200_000;
        let du = 4.0 / m as f64;
        let direct: f64 = (0..m)
            .map(|i| {
                let u = 1.0 + (i as f64 + 0.5) * du;
                ((2.0 - a) * u + p * u.sqrt()).exp() * du
            })
            .sum::<f64>()
            / z;
        let h = truncated_second_moment(&s, 5f64.exp()).unwrap();
        assert!((h - direct).abs() < 1e-8 * direct);
    }

    #[test]
    fn einmahl_li_examples() {
        let g = DistributionSpec::gaussian();
        assert_eq!(einmahl_li_condition(&g, 1.0).unwrap().verdict, ConditionVerdict::Holds);
        let s = lattice(2.0, 1.0);
        assert_eq!(einmahl_li_condition(&s, 0.25).unwrap().verdict, ConditionVerdict::Fails);
        assert_eq!(einmahl_li_condition(&s, 1.0).unwrap().verdict, ConditionVerdict::Holds);
        assert_eq!(einmahl_li_condition(&s, 0.5).unwrap().verdict, ConditionVerdict::Fails);
        let z = DistributionSpec::degenerate(0.0).unwrap();
        assert_eq!(einmahl_li_condition(&z, 0.3).unwrap().verdict, ConditionVerdict::Holds);
        assert!(einmahl_li_condition(&g, 0.0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn finite_at(spec: &DistributionSpec, alpha: f64, b: f64) -> bool {
            let (core, _) = spec.core();
            finiteness(core, alpha, b).0
        }

        proptest! {
            #[test]
            fn lattice_finiteness_is_monotone_and_midpoint_closed(
                alpha in 0.1f64..=2.0, lambda in -3.0f64..3.0, b0 in -4.0f64..4.0, step in 0.0f64..3.0,
            ) {
                let s = DistributionSpec::lattice(alpha, lambda).unwrap();
                if finite_at(&s, alpha, b0) {
                    prop_assert!(finite_at(&s, alpha, b0 + step));
                }
                let idx = moment_index_analytic(&s, alpha).unwrap();
                prop_assert!(idx.is_monotone());
                let i = idx.index.finite().unwrap();
                let b = i + step + 1e-9;
                prop_assert!(finite_at(&s, alpha, b));
                prop_assert!(finite_at(&s, alpha, 0.5 * (b + i)));
            }

            #[test]
            fn truncated_second_moment_nondecreasing(x in 0.0f64..30.0, dx in 0.0f64..30.0, lambda in -2.0f64..2.0) {
                for spec in [DistributionSpec::gaussian(), DistributionSpec::lattice(2.0, lambda).unwrap()] {
                    let lo = truncated_second_moment_log(&spec, x.ln()).unwrap();
                    let hi = truncated_second_moment_log(&spec, (x + dx).ln()).unwrap();
                    prop_assert!(hi >= lo - 1e-12);
                }
            }
        }
    }
}
