//! Distribution descriptors, samplers, tails and mean facts.
//!
//! Families:
//! * symmetric stable with characteristic function `exp(-|t|^α)`, `0 < α < 2`;
//! * the unit-variance Gaussian (the `α = 2` member of the stable family);
//! * a symmetric lattice on `±d_n`, `d_n = exp(2^n)`, with
//!   `P(X = ±d_n) = (c/2) 2^{nλ} / d_n^α`;
//! * a symmetric density `c |x|^{-α-1} exp(p (ln|x|)^γ)` on `|x| >= e`;
//! * point masses, and shifts of any of the above.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::numeric::{log_add_exp, log_sum_exp, Sign, SignedLogValue};
use crate::quadrature::{log_integrate, log_integrate_upper, QuadOptions, QuadratureError};

/// Lattice atoms with `α 2^n` above this are folded into the last kept atom.
pub const LATTICE_TRUNCATION_EXPONENT: f64 = 800.0;

/// Largest log-magnitude that is drawn as a plain double.
pub const LOG_NATIVE_MAX: f64 = 709.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("invalid parameter {name} = {value} for {family}: {reason}")]
    InvalidParameter {
        family: &'static str,
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("stable tail asymptotic not applicable at x = {x} (needs x >= {threshold})")]
    AsymptoticNotApplicable { x: f64, threshold: f64 },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("rejection envelope constant is not finite")]
    Envelope,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("cannot parse distribution spec: {0}")]
    Parse(String),
}

type Result<T> = std::result::Result<T, DistributionError>;

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    SymmetricStable { alpha: f64 },
    GaussianUnitVariance,
    LatticeExp2 { alpha: f64, lambda: f64 },
    LogWeibullTail { alpha: f64, p: f64, gamma: f64 },
    Degenerate { value: f64 },
    Shifted { base: Box<DistributionSpec>, shift: f64 },
}

fn invalid(family: &'static str, name: &'static str, value: f64, reason: &'static str) -> DistributionError {
    DistributionError::InvalidParameter {
        family,
        name,
        value,
        reason,
    }
}

impl DistributionSpec {
    pub fn symmetric_stable(alpha: f64) -> Result<Self> {
        let s = DistributionSpec::SymmetricStable { alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian() -> Self {
        DistributionSpec::GaussianUnitVariance
    }

    pub fn lattice(alpha: f64, lambda: f64) -> Result<Self> {
        let s = DistributionSpec::LatticeExp2 { alpha, lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn log_weibull(alpha: f64, p: f64, gamma: f64) -> Result<Self> {
        let s = DistributionSpec::LogWeibullTail { alpha, p, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        let s = DistributionSpec::Degenerate { value };
        s.validate()?;
        Ok(s)
    }

    pub fn shifted(base: DistributionSpec, shift: f64) -> Result<Self> {
        let s = DistributionSpec::Shifted {
            base: Box::new(base),
            shift,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks the parameter ranges of every family, including the log-Weibull
    /// envelope construction.
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::SymmetricStable { alpha } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return Err(invalid(
                        "stable",
                        "alpha",
                        alpha,
                        "must lie in (0, 2); use the Gaussian for 2",
                    ));
                }
            }
            DistributionSpec::GaussianUnitVariance => {}
            DistributionSpec::LatticeExp2 { alpha, lambda } => {
                if !(alpha > 0.0 && alpha <= 2.0) {
                    return Err(invalid("lattice", "alpha", alpha, "must lie in (0, 2]"));
                }
                if !lambda.is_finite() {
                    return Err(invalid("lattice", "lambda", lambda, "must be finite"));
                }
            }
            DistributionSpec::LogWeibullTail { alpha, p, gamma } => {
                if !(alpha > 0.0 && alpha <= 2.0) {
                    return Err(invalid("logweibull", "alpha", alpha, "must lie in (0, 2]"));
                }
                if p == 0.0 || !p.is_finite() {
                    return Err(invalid("logweibull", "p", p, "must be finite and nonzero"));
                }
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(invalid("logweibull", "gamma", gamma, "must lie in (0, 1)"));
                }
                LogWeibullSampler::new(alpha, p, gamma)?;
            }
            DistributionSpec::Degenerate { value } => {
                if !value.is_finite() {
                    return Err(invalid("degenerate", "value", value, "must be finite"));
                }
            }
            DistributionSpec::Shifted { ref base, shift } => {
                if !shift.is_finite() {
                    return Err(invalid("shifted", "shift", shift, "must be finite"));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// The exponent `α` whose moments sit on the boundary for this family.
    pub fn natural_alpha(&self) -> Option<f64> {
        match self {
            DistributionSpec::SymmetricStable { alpha }
            | DistributionSpec::LatticeExp2 { alpha, .. }
            | DistributionSpec::LogWeibullTail { alpha, .. } => Some(*alpha),
            DistributionSpec::GaussianUnitVariance => Some(2.0),
            DistributionSpec::Degenerate { .. } => None,
            DistributionSpec::Shifted { base, .. } => base.natural_alpha(),
        }
    }

    /// Strips nested shifts: returns the unshifted family and the total shift.
    pub fn core(&self) -> (&DistributionSpec, f64) {
        match self {
            DistributionSpec::Shifted { base, shift } => {
                let (c, s) = base.core();
                (c, s + shift)
            }
            other => (other, 0.0),
        }
    }

    /// `true` when the law of `X` equals the law of `-X`.
    pub fn is_symmetric(&self) -> bool {
        let (core, shift) = self.core();
        match core {
            DistributionSpec::Degenerate { value } => value + shift == 0.0,
            _ => shift == 0.0,
        }
    }

    /// `true` when `X = 0` almost surely.
    pub fn is_degenerate_zero(&self) -> bool {
        matches!(self.core(), (DistributionSpec::Degenerate { value }, s) if value + s == 0.0)
    }

    fn family_name(&self) -> &'static str {
        match self {
            DistributionSpec::SymmetricStable { .. } => "stable",
            DistributionSpec::GaussianUnitVariance => "gaussian",
            DistributionSpec::LatticeExp2 { .. } => "lattice",
            DistributionSpec::LogWeibullTail { .. } => "logweibull",
            DistributionSpec::Degenerate { .. } => "degenerate",
            DistributionSpec::Shifted { base, .. } => base.family_name(),
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (core, shift) = self.core();
        write!(f, "family={}", core.family_name())?;
        match *core {
            DistributionSpec::SymmetricStable { alpha } => write!(f, ";alpha={alpha}")?,
            DistributionSpec::GaussianUnitVariance => {}
            DistributionSpec::LatticeExp2 { alpha, lambda } => write!(f, ";alpha={alpha};lambda={lambda}")?,
            DistributionSpec::LogWeibullTail { alpha, p, gamma } => write!(f, ";alpha={alpha};p={p};gamma={gamma}")?,
            DistributionSpec::Degenerate { value } => write!(f, ";value={value}")?,
            DistributionSpec::Shifted { .. } => unreachable!("core() strips shifts"),
        }
        if matches!(self, DistributionSpec::Shifted { .. }) {
            write!(f, ";shift={shift}")?;
        }
        Ok(())
    }
}

/// Parses `family=<name>;alpha=<r>[;lambda=<r>][;p=<r>][;gamma=<r>][;value=<r>][;shift=<r>]`.
///
/// Keys a family does not use are rejected, as are duplicates. `alpha` may
/// be omitted for `gaussian` (it is 2) and `degenerate` (no exponent).
impl FromStr for DistributionSpec {
    type Err = DistributionError;

    fn from_str(s: &str) -> Result<Self> {
        let perr = |m: String| DistributionError::Parse(m);
        let mut family: Option<String> = None;
        let mut nums: Vec<(&str, f64)> = Vec::new();
        for raw in s.split(';') {
            let item = raw.trim();
            if item.is_empty() {
                continue;
            }
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| perr(format!("expected key=value, got '{item}'")))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "family" {
                if family.replace(v.to_ascii_lowercase()).is_some() {
                    return Err(perr("duplicate key 'family'".into()));
                }
                continue;
            }
            let key = match k {
                "alpha" => "alpha",
                "lambda" => "lambda",
                "p" => "p",
                "gamma" => "gamma",
                "value" => "value",
                "shift" => "shift",
                other => return Err(perr(format!("unknown key '{other}'"))),
            };
            if nums.iter().any(|(n, _)| *n == key) {
                return Err(perr(format!("duplicate key '{key}'")));
            }
            let x: f64 = v
                .parse()
                .map_err(|_| perr(format!("'{v}' is not a number for key '{key}'")))?;
            nums.push((key, x));
        }
        let family = family.ok_or_else(|| perr("missing key 'family'".into()))?;
        let get = |k: &str| nums.iter().find(|(n, _)| *n == k).map(|(_, v)| *v);
        let need = |k: &'static str| get(k).ok_or_else(|| perr(format!("family '{family}' requires '{k}'")));
        let allowed: &[&str] = match family.as_str() {
            "stable" => &["alpha", "shift"],
            "gaussian" | "normal" => &["alpha", "shift"],
            "lattice" => &["alpha", "lambda", "shift"],
            "logweibull" => &["alpha", "p", "gamma", "shift"],
            "degenerate" => &["alpha", "value", "shift"],
            other => return Err(perr(format!("unknown family '{other}'"))),
        };
        if let Some((k, _)) = nums.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(perr(format!("key '{k}' does not apply to family '{family}'")));
        }
        let base = match family.as_str() {
            "stable" => DistributionSpec::symmetric_stable(need("alpha")?)?,
            "gaussian" | "normal" => {
                if let Some(a) = get("alpha") {
                    if a != 2.0 {
                        return Err(perr(format!("gaussian has alpha = 2, got {a}")));
                    }
                }
                DistributionSpec::gaussian()
            }
            "lattice" => DistributionSpec::lattice(need("alpha")?, need("lambda")?)?,
            "logweibull" => DistributionSpec::log_weibull(need("alpha")?, need("p")?, need("gamma")?)?,
            "degenerate" => DistributionSpec::degenerate(need("value")?)?,
            _ => unreachable!(),
        };
        match get("shift") {
            Some(s) => DistributionSpec::shifted(base, s),
            None => Ok(base),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanStatus {
    ZeroMean,
    NonzeroFinite { mu: f64 },
    UndefinedOrInfinite,
}

pub fn mean_status(spec: &DistributionSpec) -> MeanStatus {
    match *spec {
        DistributionSpec::SymmetricStable { alpha } => {
            if alpha > 1.0 {
                MeanStatus::ZeroMean
            } else {
                MeanStatus::UndefinedOrInfinite
            }
        }
        DistributionSpec::GaussianUnitVariance => MeanStatus::ZeroMean,
        DistributionSpec::LatticeExp2 { alpha, lambda } => {
            if alpha > 1.0 || (alpha == 1.0 && lambda < 0.0) {
                MeanStatus::ZeroMean
            } else {
                MeanStatus::UndefinedOrInfinite
            }
        }
        DistributionSpec::LogWeibullTail { alpha, p, .. } => {
            if alpha > 1.0 || (alpha == 1.0 && p < 0.0) {
                MeanStatus::ZeroMean
            } else {
                MeanStatus::UndefinedOrInfinite
            }
        }
        DistributionSpec::Degenerate { value } => {
            if value == 0.0 {
                MeanStatus::ZeroMean
            } else {
                MeanStatus::NonzeroFinite { mu: value }
            }
        }
        DistributionSpec::Shifted { ref base, shift } => {
            let mu = match mean_status(base) {
                MeanStatus::ZeroMean => 0.0,
                MeanStatus::NonzeroFinite { mu } => mu,
                MeanStatus::UndefinedOrInfinite => return MeanStatus::UndefinedOrInfinite,
            } + shift;
            if mu == 0.0 {
                MeanStatus::ZeroMean
            } else {
                MeanStatus::NonzeroFinite { mu }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Symmetric stable

/// `sin(πα/2) Γ(α) / π`, the constant in `P(|X| > x) ~ C x^{-α}`.
pub fn stable_tail_constant(alpha: f64) -> f64 {
    (PI * alpha / 2.0).sin() * gamma(alpha) / PI
}

/// `ln x` above which the stable tail asymptotic is used: the point where it
/// predicts a 1% two-sided tail.
pub fn stable_asymptotic_log_threshold(alpha: f64) -> f64 {
    (100.0 * stable_tail_constant(alpha)).ln() / alpha
}

/// Symmetric stable variate from `u` uniform on `(-π/2, π/2)` and `e`
/// standard exponential.
pub fn stable_sample(alpha: f64, u: f64, e: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(
            "stable",
            "alpha",
            alpha,
            "must lie in (0, 2); use the Gaussian for 2",
        ));
    }
    if !(u > -PI / 2.0 && u < PI / 2.0) {
        return Err(DistributionError::OutOfRange(format!("u = {u} outside (-π/2, π/2)")));
    }
    if !(e > 0.0) {
        return Err(DistributionError::OutOfRange(format!("e = {e} must be positive")));
    }
    Ok(StableSampler::new(alpha).transform(u, e))
}

#[derive(Debug, Clone, Copy)]
struct StableSampler {
    alpha: f64,
    inv_alpha: f64,
    outer: f64,
}

impl StableSampler {
    fn new(alpha: f64) -> Self {
        Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            outer: (1.0 - alpha) / alpha,
        }
    }

    #[inline]
    fn transform(&self, u: f64, e: f64) -> f64 {
        if self.alpha == 1.0 {
            return u.tan();
        }
        let a = self.alpha;
        (a * u).sin() / u.cos().powf(self.inv_alpha) * (((1.0 - a) * u).cos() / e).powf(self.outer)
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v: f64 = rng.sample(Open01);
        let u = PI * (v - 0.5);
        if self.alpha == 1.0 {
            return u.tan();
        }
        let e: f64 = rng.sample(Exp1);
        self.transform(u, e)
    }
}

// ---------------------------------------------------------------------------
// Lattice on ±exp(2^n)

#[inline]
fn lattice_log_term(alpha: f64, lambda: f64, n: u32) -> f64 {
    n as f64 * lambda * LN_2 - alpha * 2f64.powi(n as i32)
}

/// `ln Σ_{n>=1} 2^{nλ} e^{-α 2^n}`, truncated once past the peak the next
/// term falls below `1e-18` of the partial sum.
pub fn lattice_log_series(alpha: f64, lambda: f64) -> f64 {
    let stop = 1e-18f64.ln();
    let mut acc = f64::NEG_INFINITY;
    let mut n = 1u32;
    loop {
        let t = lattice_log_term(alpha, lambda, n);
        acc = log_add_exp(acc, t);
        let next = lattice_log_term(alpha, lambda, n + 1);
        if (next < t && next < acc + stop) || n > 1100 {
            return acc;
        }
        n += 1;
    }
}

/// The normalizer `c(α, λ) = (Σ_{n>=1} 2^{nλ} / d_n^α)^{-1}`.
pub fn lattice_constant(alpha: f64, lambda: f64) -> Result<f64> {
    DistributionSpec::lattice(alpha, lambda)?;
    Ok((-lattice_log_series(alpha, lambda)).exp())
}

/// `ln P(|X| = d_n)` without truncation.
pub fn lattice_log_atom_mass(alpha: f64, lambda: f64, n: u32) -> f64 {
    -lattice_log_series(alpha, lambda) + lattice_log_term(alpha, lambda, n)
}

/// Largest `n` with `α 2^n <= 800` (at least 1).
pub fn lattice_truncation_index(alpha: f64) -> u32 {
    let mut n = 1u32;
    while alpha * 2f64.powi(n as i32 + 1) <= LATTICE_TRUNCATION_EXPONENT {
        n += 1;
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeAtom {
    pub sign: Sign,
    pub n: u32,
    pub prob: f64,
}

impl LatticeAtom {
    /// `±d_n` in log form; the log-magnitude is exactly `2^n`.
    pub fn value(&self) -> SignedLogValue {
        SignedLogValue::new(self.sign, 2f64.powi(self.n as i32))
    }
}

/// Inverse-CDF table over the kept atoms, ordered `-d_1, +d_1, -d_2, +d_2, …`.
#[derive(Debug, Clone)]
pub struct LatticeTable {
    atoms: Vec<LatticeAtom>,
    cdf: Vec<f64>,
    // mass of atoms i.. (inclusive), accumulated from the deep end
    tail_from: Vec<f64>,
    log_c: f64,
}

impl LatticeTable {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        DistributionSpec::lattice(alpha, lambda)?;
        let log_series = lattice_log_series(alpha, lambda);
        let n_trunc = lattice_truncation_index(alpha);
        let mut log_masses: Vec<f64> = (1..=n_trunc)
            .map(|n| lattice_log_term(alpha, lambda, n) - log_series)
            .collect();
        // fold everything beyond n_trunc into the last kept atom
        let mut folded = f64::NEG_INFINITY;
        let mut n = n_trunc + 1;
        loop {
            let t = lattice_log_term(alpha, lambda, n) - log_series;
            let before = folded;
            folded = log_add_exp(folded, t);
            if folded == before || n > 1100 {
                break;
            }
            n += 1;
        }
        let last = log_masses.len() - 1;
        log_masses[last] = log_add_exp(log_masses[last], folded);

        let mut atoms = Vec::with_capacity(2 * log_masses.len());
        for (i, lm) in log_masses.iter().enumerate() {
            let half = (lm - LN_2).exp();
            let n = i as u32 + 1;
            atoms.push(LatticeAtom {
                sign: Sign::Negative,
                n,
                prob: half,
            });
            atoms.push(LatticeAtom {
                sign: Sign::Positive,
                n,
                prob: half,
            });
        }
        let mut cdf = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.prob;
            cdf.push(acc);
        }
        let mut tail_from = vec![0.0; atoms.len()];
        let mut acc = 0.0;
        for i in (0..atoms.len()).rev() {
            acc += atoms[i].prob;
            tail_from[i] = acc;
        }
        Ok(Self {
            atoms,
            cdf,
            tail_from,
            log_c: -log_series,
        })
    }

    pub fn atoms(&self) -> &[LatticeAtom] {
        &self.atoms
    }

    pub fn constant(&self) -> f64 {
        self.log_c.exp()
    }

    /// Index of the atom selected by `u` in `(0, 1)`.
    pub fn index_for(&self, u: f64) -> usize {
        if u < 0.5 {
            self.cdf.iter().position(|&c| u < c).unwrap_or(self.atoms.len() - 1)
        } else {
            // 1 - u is exact for u >= 1/2
            self.index_for_complement(1.0 - u)
        }
    }

    /// Index of the atom selected by `u = 1 - eps`, resolving masses far
    /// below the spacing of doubles near 1.
    pub fn index_for_complement(&self, eps: f64) -> usize {
        (0..self.atoms.len())
            .rev()
            .find(|&i| eps <= self.tail_from[i])
            .unwrap_or(0)
    }

    pub fn sample_from_uniform(&self, u: f64) -> SignedLogValue {
        self.atoms[self.index_for(u)].value()
    }
}

/// Inverse-CDF lattice draw for a single uniform `u`.
pub fn lattice_sample(alpha: f64, lambda: f64, u: f64) -> Result<SignedLogValue> {
    if !(u > 0.0 && u < 1.0) {
        return Err(DistributionError::OutOfRange(format!("u = {u} outside (0, 1)")));
    }
    Ok(LatticeTable::new(alpha, lambda)?.sample_from_uniform(u))
}

// ---------------------------------------------------------------------------
// Log-Weibull-type tail: density ∝ |x|^{-α-1} exp(p (ln|x|)^γ), |x| >= e

/// One linear piece of the log-envelope on `[lo, hi)`.
#[derive(Debug, Clone, Copy)]
struct HullPiece {
    lo: f64,
    hi: f64,
    log_at_lo: f64,
    slope: f64,
}

impl HullPiece {
    fn log_mass(&self) -> f64 {
        if self.hi.is_infinite() {
            self.log_at_lo - (-self.slope).ln()
        } else if self.slope == 0.0 {
            self.log_at_lo + (self.hi - self.lo).ln()
        } else {
            self.log_at_lo + ((self.slope * (self.hi - self.lo)).exp_m1() / self.slope).ln()
        }
    }

    fn log_envelope(&self, u: f64) -> f64 {
        self.log_at_lo + self.slope * (u - self.lo)
    }

    fn sample(&self, v: f64) -> f64 {
        let u = if self.hi.is_infinite() {
            self.lo - v.ln() / (-self.slope)
        } else if self.slope == 0.0 {
            self.lo + v * (self.hi - self.lo)
        } else {
            let w = self.hi - self.lo;
            self.lo + (v * (self.slope * w).exp_m1()).ln_1p() / self.slope
        };
        u.clamp(self.lo, self.hi)
    }
}

/// Rejection sampler for `U = ln|X|` on `[1, ∞)` with density
/// `∝ h(u) = exp(-αu + p u^γ)`.
///
/// For `p > 0` the log-density is concave and the envelope is the upper
/// hull of tangents at the mode and at the points one nat below it. For
/// `p < 0` it is `exp(-αu + p)`.
#[derive(Debug, Clone)]
pub struct LogWeibullSampler {
    alpha: f64,
    p: f64,
    gamma: f64,
    pieces: Vec<HullPiece>,
    cum: Vec<f64>,
    log_env: f64,
    log_z: f64,
}

fn bisect_drop<F: Fn(f64) -> f64>(f: F, level: f64, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if f(mid) >= level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

impl LogWeibullSampler {
    pub fn new(alpha: f64, p: f64, gamma: f64) -> Result<Self> {
        let log_h = move |u: f64| -alpha * u + p * u.powf(gamma);
        let slope = move |u: f64| -alpha + p * gamma * u.powf(gamma - 1.0);
        let pieces = if p < 0.0 {
            vec![HullPiece {
                lo: 1.0,
                hi: f64::INFINITY,
                log_at_lo: -alpha + p,
                slope: -alpha,
            }]
        } else {
            let mode = (p * gamma / alpha).powf(1.0 / (1.0 - gamma)).max(1.0);
            if !mode.is_finite() {
                return Err(DistributionError::Envelope);
            }
            let level = log_h(mode) - 1.0;
            let mut points = Vec::new();
            if mode > 1.0 {
                if log_h(1.0) < level {
                    points.push(bisect_drop(log_h, level, mode, 1.0));
                } else {
                    points.push(1.0);
                }
            }
            points.push(mode);
            let mut far = mode + 1.0;
            while log_h(far) >= level {
                far = mode + 2.0 * (far - mode);
                if !far.is_finite() {
                    return Err(DistributionError::Envelope);
                }
            }
            points.push(bisect_drop(log_h, level, mode, far));
            points.dedup();
            let tangents: Vec<(f64, f64, f64)> = points.iter().map(|&x| (x, log_h(x), slope(x))).collect();
            let mut breaks = vec![1.0];
            for w in tangents.windows(2) {
                let ((x0, h0, s0), (x1, h1, s1)) = (w[0], w[1]);
                let z = (h1 - h0 - x1 * s1 + x0 * s0) / (s0 - s1);
                breaks.push(z.clamp(*breaks.last().unwrap(), x1));
            }
            breaks.push(f64::INFINITY);
            tangents
                .iter()
                .enumerate()
                .map(|(j, &(x, h, s))| HullPiece {
                    lo: breaks[j],
                    hi: breaks[j + 1],
                    log_at_lo: h + s * (breaks[j] - x),
                    slope: s,
                })
                .filter(|pc| pc.hi > pc.lo)
                .collect()
        };
        let last = *pieces.last().ok_or(DistributionError::Envelope)?;
        if !(last.slope < 0.0) {
            return Err(DistributionError::Envelope);
        }
        let masses: Vec<f64> = pieces.iter().map(HullPiece::log_mass).collect();
        let log_env = log_sum_exp(&masses);
        if !log_env.is_finite() {
            return Err(DistributionError::Envelope);
        }
        let mut cum = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for m in &masses {
            acc += (m - log_env).exp();
            cum.push(acc);
        }

        let opts = QuadOptions {
            rel_tol: 1e-12,
            max_panels: 4000,
        };
        let head_end = last.lo.max(2.0);
        let head = log_integrate(log_h, 1.0, head_end, opts)?.log_value;
        // envelope mass beyond U is exp(T(U)) / |s|; pick U so it is < 1e-15 of the head
        let target = 1e-15f64.ln() + head + (-last.slope).ln();
        let u_max = (last.lo + (target - last.log_at_lo) / last.slope).max(head_end);
        let log_z = log_integrate(log_h, 1.0, u_max, opts)?.log_value;
        if !log_z.is_finite() {
            return Err(DistributionError::Envelope);
        }
        Ok(Self {
            alpha,
            p,
            gamma,
            pieces,
            cum,
            log_env,
            log_z,
        })
    }

    #[inline]
    fn log_h(&self, u: f64) -> f64 {
        -self.alpha * u + self.p * u.powf(self.gamma)
    }

    /// `ln ∫_1^∞ h(u) du`; the density constant is `c = 1 / (2 Z)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_z
    }

    /// Expected fraction of proposals accepted.
    pub fn acceptance_rate(&self) -> f64 {
        (self.log_z - self.log_env).exp()
    }

    /// Draws `U = ln|X|`.
    pub fn sample_log_magnitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let pick: f64 = rng.sample(Open01);
            let j = self.cum.partition_point(|&c| c < pick).min(self.pieces.len() - 1);
            let piece = &self.pieces[j];
            let u = piece.sample(rng.sample(Open01));
            let v: f64 = rng.sample(Open01);
            if v.ln() < self.log_h(u) - piece.log_envelope(u) {
                return u;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SignedLogValue {
        let u = self.sample_log_magnitude(rng);
        let sign = if rng.gen::<bool>() {
            Sign::Positive
        } else {
            Sign::Negative
        };
        SignedLogValue::new(sign, u)
    }

    /// `ln P(|X| > e^u)`.
    pub fn log_tail(&self, u: f64) -> Result<f64> {
        if u <= 1.0 {
            return Ok(0.0);
        }
        let (a, p, g) = (self.alpha, self.p, self.gamma);
        let base = u.powf(g);
        let shifted = move |w: f64| -a * w + p * ((u + w).powf(g) - base);
        let width = 4.0 / (-self.pieces.last().expect("non-empty hull").slope);
        let rest = log_integrate_upper(shifted, 0.0, width, QuadOptions::default())?;
        Ok(self.log_h(u) + rest.log_value - self.log_z)
    }
}

/// One rejection draw of `(±1, ln|X|)` for the log-Weibull family.
pub fn logweibull_sample<R: Rng + ?Sized>(alpha: f64, p: f64, gamma: f64, rng: &mut R) -> Result<SignedLogValue> {
    DistributionSpec::log_weibull(alpha, p, gamma)?;
    Ok(LogWeibullSampler::new(alpha, p, gamma)?.sample(rng))
}

// ---------------------------------------------------------------------------
// Streaming sampler

/// A single draw: a plain double when representable, otherwise log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Draw {
    Native(f64),
    Log(SignedLogValue),
}

impl Draw {
    pub fn to_log(self) -> SignedLogValue {
        match self {
            Draw::Native(x) => SignedLogValue::from_f64(x),
            Draw::Log(v) => v,
        }
    }

    fn from_log(v: SignedLogValue) -> Self {
        if v.log_mag() <= LOG_NATIVE_MAX {
            Draw::Native(v.to_f64())
        } else {
            Draw::Log(v)
        }
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Stable(StableSampler),
    Gaussian,
    Lattice(LatticeTable),
    LogWeibull(LogWeibullSampler),
    Degenerate(f64),
}

/// Draws i.i.d. copies of a [`DistributionSpec`] from a caller-owned stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: SamplerKind,
    shift: f64,
}

impl Sampler {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        spec.validate()?;
        let (core, shift) = spec.core();
        let kind = match *core {
            DistributionSpec::SymmetricStable { alpha } => SamplerKind::Stable(StableSampler::new(alpha)),
            DistributionSpec::GaussianUnitVariance => SamplerKind::Gaussian,
            DistributionSpec::LatticeExp2 { alpha, lambda } => SamplerKind::Lattice(LatticeTable::new(alpha, lambda)?),
            DistributionSpec::LogWeibullTail { alpha, p, gamma } => {
                SamplerKind::LogWeibull(LogWeibullSampler::new(alpha, p, gamma)?)
            }
            DistributionSpec::Degenerate { value } => SamplerKind::Degenerate(value),
            DistributionSpec::Shifted { .. } => unreachable!("core() strips shifts"),
        };
        Ok(Self { kind, shift })
    }

    #[inline]
    fn draw_unshifted<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        match &self.kind {
            SamplerKind::Stable(s) => Draw::Native(s.sample(rng)),
            SamplerKind::Gaussian => Draw::Native(rng.sample(StandardNormal)),
            SamplerKind::Lattice(t) => {
                let u: f64 = rng.sample(Open01);
                Draw::from_log(t.sample_from_uniform(u))
            }
            SamplerKind::LogWeibull(s) => Draw::from_log(s.sample(rng)),
            SamplerKind::Degenerate(v) => Draw::Native(*v),
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        let d = self.draw_unshifted(rng);
        if self.shift == 0.0 {
            return d;
        }
        match d {
            Draw::Native(x) => Draw::Native(x + self.shift),
            Draw::Log(v) => Draw::Log(v + SignedLogValue::from_f64(self.shift)),
        }
    }

    pub fn draw_log<R: Rng + ?Sized>(&self, rng: &mut R) -> SignedLogValue {
        self.draw(rng).to_log()
    }
}

/// `count` draws from a ChaCha8 stream seeded with `seed`.
pub fn sample_with_seed(spec: &DistributionSpec, count: usize, seed: u64) -> Result<Vec<SignedLogValue>> {
    let sampler = Sampler::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.draw_log(&mut rng)).collect())
}

// ---------------------------------------------------------------------------
// Tails

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailProb {
    /// `ln P(|X| > x)`.
    pub log_p: f64,
    /// `false` when an asymptotic formula was used.
    pub exact: bool,
}

fn log_erfc(z: f64) -> f64 {
    let v = libm::erfc(z);
    if v > 1e-280 {
        return v.ln();
    }
    let z2 = z * z;
    let series = 1.0 - 1.0 / (2.0 * z2) + 3.0 / (4.0 * z2 * z2) - 15.0 / (8.0 * z2 * z2 * z2);
    -z2 - (z * PI.sqrt()).ln() + series.ln()
}

/// `ln P(|X| > x)` for an unshifted family, given `ln x` (may be `-inf`).
fn core_abs_tail_log(core: &DistributionSpec, log_x: f64) -> Result<TailProb> {
    let exact = |log_p| Ok(TailProb { log_p, exact: true });
    match *core {
        DistributionSpec::SymmetricStable { alpha } => {
            let threshold = stable_asymptotic_log_threshold(alpha);
            if log_x < threshold {
                return Err(DistributionError::AsymptoticNotApplicable {
                    x: log_x.exp(),
                    threshold: threshold.exp(),
                });
            }
            Ok(TailProb {
                log_p: stable_tail_constant(alpha).ln() - alpha * log_x,
                exact: false,
            })
        }
        DistributionSpec::GaussianUnitVariance => {
            if log_x == f64::NEG_INFINITY {
                return exact(0.0);
            }
            let x = log_x.exp();
            if x.is_infinite() {
                return exact(f64::NEG_INFINITY);
            }
            exact(log_erfc(x / std::f64::consts::SQRT_2))
        }
        DistributionSpec::LatticeExp2 { alpha, lambda } => {
            // atoms strictly above x: 2^n > ln x
            let mut n = 1u32;
            while (2f64.powi(n as i32)) <= log_x && n < 1100 {
                n += 1;
            }
            let log_series = lattice_log_series(alpha, lambda);
            let mut terms = Vec::new();
            let mut k = n;
            loop {
                let t = lattice_log_term(alpha, lambda, k);
                terms.push(t);
                let next = lattice_log_term(alpha, lambda, k + 1);
                if (next < t && next < log_sum_exp(&terms) - 50.0) || k > 1100 {
                    break;
                }
                k += 1;
            }
            exact(log_sum_exp(&terms) - log_series)
        }
        DistributionSpec::LogWeibullTail { alpha, p, gamma } => {
            exact(LogWeibullSampler::new(alpha, p, gamma)?.log_tail(log_x)?)
        }
        DistributionSpec::Degenerate { value } => exact(if value.abs().ln() > log_x {
            0.0
        } else {
            f64::NEG_INFINITY
        }),
        DistributionSpec::Shifted { .. } => unreachable!("core() strips shifts"),
    }
}

/// `ln P(Y > t)` for a symmetric unshifted family.
fn core_upper_tail_log(core: &DistributionSpec, t: f64) -> Result<TailProb> {
    if t >= 0.0 {
        let tp = core_abs_tail_log(core, t.ln())?;
        Ok(TailProb {
            log_p: tp.log_p - LN_2,
            exact: tp.exact,
        })
    } else {
        let tp = core_abs_tail_log(core, (-t).ln())?;
        Ok(TailProb {
            log_p: (-0.5 * tp.log_p.exp()).ln_1p(),
            exact: tp.exact,
        })
    }
}

/// `ln P(|X| > x)` given `ln x`. Works for magnitudes far beyond double
/// range when the spec is unshifted.
pub fn tail_prob_log_at(spec: &DistributionSpec, log_x: f64) -> Result<TailProb> {
    let (core, shift) = spec.core();
    if shift == 0.0 || log_x > LOG_NATIVE_MAX {
        return core_abs_tail_log(core, log_x);
    }
    let x = log_x.exp();
    if let DistributionSpec::Degenerate { value } = *core {
        let v = (value + shift).abs();
        return Ok(TailProb {
            log_p: if v > x { 0.0 } else { f64::NEG_INFINITY },
            exact: true,
        });
    }
    // P(|Y + s| > x) = P(Y > x - s) + P(Y > x + s) for symmetric Y
    let a = core_upper_tail_log(core, x - shift)?;
    let b = core_upper_tail_log(core, x + shift)?;
    Ok(TailProb {
        log_p: log_add_exp(a.log_p, b.log_p),
        exact: a.exact && b.exact,
    })
}

/// `ln P(|X| > x)` for `x >= 1`.
pub fn tail_prob_log(spec: &DistributionSpec, x: f64) -> Result<TailProb> {
    if !(x >= 1.0) {
        return Err(DistributionError::OutOfRange(format!("tail needs x >= 1, got {x}")));
    }
    tail_prob_log_at(spec, x.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let s: DistributionSpec = "family=stable;alpha=0.5".parse().unwrap();
        assert_eq!(s, DistributionSpec::SymmetricStable { alpha: 0.5 });
        let s: DistributionSpec = "family=lattice; alpha=1; lambda=-1; shift=2".parse().unwrap();
        assert_eq!(s.to_string(), "family=lattice;alpha=1;lambda=-1;shift=2");
        let s: DistributionSpec = "family=degenerate;value=0".parse().unwrap();
        assert!(s.is_degenerate_zero());
        for bad in [
            "",
            "family=stable",
            "family=stable;alpha=2",
            "family=stable;alpha=1;lambda=3",
            "family=stable;alpha=1;colour=red",
            "family=stable;alpha=x",
            "family=stable;alpha=1;alpha=1",
            "family=cauchy;alpha=1",
            "family=logweibull;alpha=1;p=0;gamma=0.5",
            "family=logweibull;alpha=1;p=1;gamma=1",
            "alpha=1",
            "family=gaussian;alpha=1.5",
        ] {
            assert!(bad.parse::<DistributionSpec>().is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn nested_shifts_flatten() {
        let s = DistributionSpec::shifted(
            DistributionSpec::shifted(DistributionSpec::degenerate(1.0).unwrap(), 2.0).unwrap(),
            -3.0,
        )
        .unwrap();
        assert!(s.is_degenerate_zero());
        assert!(s.is_symmetric());
        assert_eq!(mean_status(&s), MeanStatus::ZeroMean);
    }

    #[test]
    fn mean_status_table() {
        use MeanStatus::*;
        let st = |a| DistributionSpec::symmetric_stable(a).unwrap();
        assert_eq!(mean_status(&st(1.5)), ZeroMean);
        assert_eq!(mean_status(&st(1.0)), UndefinedOrInfinite);
        assert_eq!(mean_status(&DistributionSpec::lattice(1.0, -1.0).unwrap()), ZeroMean);
        assert_eq!(
            mean_status(&DistributionSpec::lattice(1.0, 0.0).unwrap()),
            UndefinedOrInfinite
        );
        assert_eq!(
            mean_status(&DistributionSpec::lattice(0.5, -3.0).unwrap()),
            UndefinedOrInfinite
        );
        assert_eq!(
            mean_status(&DistributionSpec::log_weibull(1.0, -1.0, 0.5).unwrap()),
            ZeroMean
        );
        assert_eq!(
            mean_status(&DistributionSpec::log_weibull(1.0, 1.0, 0.5).unwrap()),
            UndefinedOrInfinite
        );
        assert_eq!(mean_status(&DistributionSpec::degenerate(0.0).unwrap()), ZeroMean);
        assert_eq!(
            mean_status(&DistributionSpec::shifted(DistributionSpec::gaussian(), 2.0).unwrap()),
            NonzeroFinite { mu: 2.0 }
        );
        assert_eq!(
            mean_status(&DistributionSpec::shifted(st(0.7), 2.0).unwrap()),
            UndefinedOrInfinite
        );
    }

    #[test]
    fn stable_sampler_closed_points() {
        assert_eq!(stable_sample(1.0, 0.0, 1.0).unwrap(), 0.0);
        assert!((stable_sample(1.0, PI / 4.0, 123.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(stable_sample(2.0, 0.1, 1.0).is_err());
        assert!(stable_sample(1.5, PI, 1.0).is_err());
    }

    #[test]
    fn stable_sampler_matches_high_precision_oracle() {
        use crate::hp_oracle::{big, ctx, to_f64};
        use astro_float::expr;
        let mut cx = ctx();
        for &(alpha, u, e) in &[(0.5, PI / 3.0, 2.0), (1.5, -0.7, 0.3), (0.9, 1.2, 5.0)] {
            let (a, bu, be) = (big(alpha), big(u), big(e));
            let want = expr!(
                sin(a * bu) / pow(cos(bu), 1 / a) * pow(cos((1 - a) * bu) / be, (1 - a) / a),
                &mut cx
            );
            let want = to_f64(&want, &mut cx);
            let got = stable_sample(alpha, u, e).unwrap();
            assert!(
                (got - want).abs() <= 1e-13 * want.abs(),
                "alpha={alpha}: {got} vs {want}"
            );
        }
    }

    /// Brute-force series with 40 terms computed in plain log-space.
    fn brute_lattice_c(alpha: f64, lambda: f64) -> f64 {
        let s: f64 = (1..=40)
            .map(|n| {
                let l = n as f64 * lambda * LN_2 - alpha * 2f64.powi(n);
                l.exp()
            })
            .sum();
        1.0 / s
    }

    #[test]
    fn lattice_constant_against_brute_series() {
        for &(a, l) in &[(1.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.5, 2.0), (1.0, -1.0), (0.4, -2.0)] {
            let c = lattice_constant(a, l).unwrap();
            let want = brute_lattice_c(a, l);
            assert!(c > 0.0);
            assert!((c - want).abs() <= 1e-14 * want, "({a},{l}): {c} vs {want}");
        }
        let c = lattice_constant(1.0, 0.0).unwrap();
        assert!((c - 6.4937).abs() < 1e-3, "{c}");
    }

    #[test]
    fn lattice_table_sums_to_one_and_orders_atoms() {
        for &(a, l) in &[(1.0, 0.0), (2.0, 1.0), (0.5, 2.0), (0.05, -1.0), (2.0, 40.0)] {
            let t = LatticeTable::new(a, l).unwrap();
            let total: f64 = t.atoms().iter().map(|a| a.prob).sum();
            assert!((total - 1.0).abs() < 1e-12, "({a},{l}) sums to {total}");
            assert_eq!(t.atoms().len() as u32, 2 * lattice_truncation_index(a));
        }
        assert_eq!(lattice_truncation_index(1.0), 9);
        assert_eq!(lattice_truncation_index(2.0), 8);
    }

    #[test]
    fn lattice_inverse_cdf_edges() {
        let (a, l) = (1.0, 0.0);
        let c = brute_lattice_c(a, l);
        let p_minus_d1 = c / 2.0 * (-2.0 * a).exp();
        let v = lattice_sample(a, l, p_minus_d1 * 0.999).unwrap();
        assert_eq!(v.sign(), Sign::Negative);
        assert_eq!(v.log_mag(), 2.0);
        let t = LatticeTable::new(a, l).unwrap();
        let deepest = *t.atoms().last().unwrap();
        assert_eq!((deepest.sign, deepest.n), (Sign::Positive, 9));
        // ε below the mass of the deepest kept atom selects it
        assert_eq!(t.index_for_complement(deepest.prob * 0.5), t.atoms().len() - 1);
        // the largest double below 1 lands on the atom whose upper tail first covers 2^-53
        let eps = 1.0 - (1.0 - f64::EPSILON / 2.0);
        let idx = t.index_for(1.0 - eps);
        let tails: Vec<f64> = (0..t.atoms().len())
            .map(|i| t.atoms()[i..].iter().map(|a| a.prob).sum())
            .collect();
        assert!(eps <= tails[idx] * (1.0 + 1e-12));
        assert!(idx + 1 == t.atoms().len() || eps > tails[idx + 1] * (1.0 - 1e-12));
        assert!(lattice_sample(a, l, 1.0).is_err());
    }

    #[test]
    fn log_weibull_support_and_acceptance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(a, p, g) in &[(1.0, -1.0, 0.5), (1.5, 1.0, 0.5), (2.0, -0.5, 0.3), (0.5, 2.0, 0.7)] {
            let s = LogWeibullSampler::new(a, p, g).unwrap();
            let r = s.acceptance_rate();
            assert!((0.05..=1.0).contains(&r), "({a},{p},{g}) acceptance {r}");
            for _ in 0..10_000 {
                assert!(s.sample(&mut rng).log_mag() >= 1.0);
            }
        }
    }

    #[test]
    fn log_weibull_mean_matches_quadrature() {
        let (a, p, g) = (1.0, -1.0, 0.5);
        let s = LogWeibullSampler::new(a, p, g).unwrap();
        // quadrature oracle on exp(-αu + p u^γ)
        let lh = |u: f64| -a * u + p * u.powf(g);
        let opts = QuadOptions::default();
        let z = log_integrate(lh, 1.0, 200.0, opts).unwrap().log_value.exp();
        let m1 = log_integrate(|u: f64| lh(u) + u.ln(), 1.0, 200.0, opts)
            .unwrap()
            .log_value
            .exp()
            / z;
        let m2 = log_integrate(|u: f64| lh(u) + 2.0 * u.ln(), 1.0, 200.0, opts)
            .unwrap()
            .log_value
            .exp()
            / z;
        let sd = (m2 - m1 * m1).sqrt();
        let n = 200_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mean = (0..n).map(|_| s.sample_log_magnitude(&mut rng)).sum::<f64>() / n as f64;
        let se = sd / (n as f64).sqrt();
        assert!((mean - m1).abs() < 4.0 * se, "mean {mean} vs {m1} (se {se})");
    }

    #[test]
    fn samplers_are_deterministic_in_the_stream() {
        for spec in [
            "family=stable;alpha=1.3",
            "family=lattice;alpha=1;lambda=1",
            "family=logweibull;alpha=1.5;p=1;gamma=0.5",
            "family=gaussian;shift=2",
        ] {
            let spec: DistributionSpec = spec.parse().unwrap();
            let a = sample_with_seed(&spec, 500, 99).unwrap();
            let b = sample_with_seed(&spec, 500, 99).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn tails() {
        let lat = DistributionSpec::lattice(1.0, 0.0).unwrap();
        let c = brute_lattice_c(1.0, 0.0);
        let want: f64 = (2..=40).map(|n| c * (-(2f64.powi(n))).exp()).sum();
        let got = tail_prob_log(&lat, 3f64.exp()).unwrap();
        assert!(got.exact);
        assert!((got.log_p - want.ln()).abs() < 1e-12);

        let deg = DistributionSpec::degenerate(0.0).unwrap();
        assert_eq!(tail_prob_log(&deg, 2.0).unwrap().log_p, f64::NEG_INFINITY);

        let cauchy = DistributionSpec::symmetric_stable(1.0).unwrap();
        let x = 1e8;
        let t = tail_prob_log(&cauchy, x).unwrap();
        assert!(!t.exact);
        assert!((t.log_p - ((1.0 / PI).ln() - x.ln())).abs() < 1e-12);
        assert!(matches!(
            tail_prob_log(&cauchy, 2.0),
            Err(DistributionError::AsymptoticNotApplicable { .. })
        ));
        // the asymptotic constant 1/π is the one-sided Cauchy constant; the exact
        // two-sided tail (2/π) atan(1/x) sits ln 2 above it
        let exact = (2.0 / PI * (1.0 / x).atan()).ln();
        assert!((exact - t.log_p - LN_2).abs() < 1e-10);

        let g = DistributionSpec::gaussian();
        assert!((tail_prob_log(&g, 1.0).unwrap().log_p - 0.317_310_507_862_914_f64.ln()).abs() < 1e-12);
        let far = tail_prob_log(&g, 50.0).unwrap().log_p;
        assert!(far < -1240.0 && far > -1260.0, "{far}");
        assert!(tail_prob_log(&g, 0.5).is_err());
    }

    #[test]
    fn log_weibull_tail_is_consistent_with_normalizer() {
        let s = LogWeibullSampler::new(1.0, -1.0, 0.5).unwrap();
        assert_eq!(s.log_tail(1.0).unwrap(), 0.0);
        let t2 = s.log_tail(2.0).unwrap();
        let lh = |u: f64| -u - u.sqrt();
        let direct = log_integrate(lh, 1.0, 2.0, QuadOptions::default())
            .unwrap()
            .log_value
            .exp();
        let z = s.log_normalizer().exp();
        assert!((t2.exp() - (1.0 - direct / z)).abs() < 1e-9);
        // far tail in log form
        let far = s.log_tail(1e6).unwrap();
        assert!(far < -1e6 + 10.0);
    }

    #[test]
    fn shifted_tails() {
        let sg = DistributionSpec::shifted(DistributionSpec::gaussian(), 2.0).unwrap();
        // P(|Z + 2| > 1) = P(Z > -1) + P(Z < -3)
        let want = (1.0 - 0.158_655_253_931_457_05) + 0.001_349_898_031_630_094_5;
        let got = tail_prob_log(&sg, 1.0).unwrap();
        assert!((got.log_p.exp() - want).abs() < 1e-12);
        let sd = DistributionSpec::shifted(DistributionSpec::degenerate(1.0).unwrap(), 2.0).unwrap();
        assert_eq!(tail_prob_log(&sd, 2.5).unwrap().log_p, 0.0);
        assert_eq!(tail_prob_log(&sd, 3.0).unwrap().log_p, f64::NEG_INFINITY);
    }
}
