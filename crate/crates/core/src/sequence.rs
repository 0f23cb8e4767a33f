//! Finite-prefix exponents of `|a_n|^{1/c_n}` and the 0/∞ dichotomy of
//! `|a_n| / e^{b c_n}` around them.

use std::io::Read;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::ExtendedReal;

pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;
pub const DEFAULT_SPREAD_TOL: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("a has {a} entries but c has {c}")]
    LengthMismatch { a: usize, c: usize },
    #[error("sequence is empty")]
    Empty,
    #[error("c[{index}] = {value} is not a positive finite number")]
    BadScale { index: usize, value: f64 },
    #[error("a[{index}] is NaN")]
    NotANumber { index: usize },
    #[error("c must grow: c[last] = {last} <= c[first] = {first}")]
    NotGrowing { first: f64, last: f64 },
    #[error("c decreases inside the tail window at index {index}")]
    TailNotMonotone { index: usize },
    #[error("tail_fraction = {0} outside (0, 1]")]
    TailFraction(f64),
    #[error("csv: {0}")]
    Csv(String),
}

type Result<T> = std::result::Result<T, SequenceError>;

/// A sequence `a_n` with scales `c_n`, stored as `ln|a_n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSequence {
    log_abs: Vec<f64>,
    c: Vec<f64>,
    tail_fraction: f64,
}

impl ScaledSequence {
    pub fn new(a: &[f64], c: Vec<f64>, tail_fraction: f64) -> Result<Self> {
        if let Some(index) = a.iter().position(|x| x.is_nan()) {
            return Err(SequenceError::NotANumber { index });
        }
        Self::from_log_magnitudes(a.iter().map(|x| x.abs().ln()).collect(), c, tail_fraction)
    }

    /// Builds from `ln|a_n|` directly, for magnitudes beyond double range.
    pub fn from_log_magnitudes(log_abs: Vec<f64>, c: Vec<f64>, tail_fraction: f64) -> Result<Self> {
        if log_abs.len() != c.len() {
            return Err(SequenceError::LengthMismatch {
                a: log_abs.len(),
                c: c.len(),
            });
        }
        if c.is_empty() {
            return Err(SequenceError::Empty);
        }
        if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
            return Err(SequenceError::TailFraction(tail_fraction));
        }
        if let Some(index) = log_abs.iter().position(|x| x.is_nan()) {
            return Err(SequenceError::NotANumber { index });
        }
        if let Some((index, &value)) = c.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(SequenceError::BadScale { index, value });
        }
        let (first, last) = (c[0], c[c.len() - 1]);
        if !(last > first) {
            return Err(SequenceError::NotGrowing { first, last });
        }
        let s = Self {
            log_abs,
            c,
            tail_fraction,
        };
        let start = s.tail_start();
        if let Some(i) = (start + 1..s.c.len()).find(|&i| s.c[i] < s.c[i - 1]) {
            return Err(SequenceError::TailNotMonotone { index: i });
        }
        Ok(s)
    }

    /// Reads columns `n`, `a`, `c` (any order, header required).
    pub fn from_csv<R: Read>(reader: R, tail_fraction: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| SequenceError::Csv(e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| SequenceError::Csv(format!("missing column '{name}'")))
        };
        let (ia, ic) = (col("a")?, col("c")?);
        col("n")?;
        let (mut a, mut c) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| SequenceError::Csv(e.to_string()))?;
            let num = |i: usize| -> Result<f64> {
                let field = rec.get(i).unwrap_or("");
                field
                    .parse()
                    .map_err(|_| SequenceError::Csv(format!("row {}: '{field}' is not a number", row + 1)))
            };
            a.push(num(ia)?);
            c.push(num(ic)?);
        }
        Self::new(&a, c, tail_fraction)
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn tail_fraction(&self) -> f64 {
        self.tail_fraction
    }

    pub fn log_abs(&self) -> &[f64] {
        &self.log_abs
    }

    pub fn scales(&self) -> &[f64] {
        &self.c
    }

    /// First index of the tail window (the last `⌈tail_fraction·len⌉` entries).
    pub fn tail_start(&self) -> usize {
        let n = self.c.len();
        let k = ((self.tail_fraction * n as f64).ceil() as usize).clamp(1, n);
        n - k
    }

    fn tail_exponents(&self) -> impl Iterator<Item = f64> + '_ {
        let s = self.tail_start();
        self.log_abs[s..].iter().zip(&self.c[s..]).map(|(l, c)| l / c)
    }
}

/// `max` over the tail window of `ln|a_n| / c_n`.
pub fn chover_exponent_limsup(s: &ScaledSequence) -> ExtendedReal {
    let m = s.tail_exponents().fold(f64::NEG_INFINITY, f64::max);
    ExtendedReal::from(m)
}

/// `min` over the tail window of `ln|a_n| / c_n`.
pub fn chover_exponent_liminf(s: &ScaledSequence) -> ExtendedReal {
    let m = s.tail_exponents().fold(f64::INFINITY, f64::min);
    ExtendedReal::from(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitExponent {
    pub value: ExtendedReal,
    pub converged: bool,
}

/// Midpoint of the tail range, converged when the range is within `spread_tol`.
pub fn chover_exponent_lim(s: &ScaledSequence, spread_tol: f64) -> LimitExponent {
    let hi = chover_exponent_limsup(s);
    let lo = chover_exponent_liminf(s);
    if hi == lo {
        return LimitExponent {
            value: hi,
            converged: true,
        };
    }
    match (lo, hi) {
        (ExtendedReal::Finite(l), ExtendedReal::Finite(h)) => LimitExponent {
            value: ExtendedReal::Finite(0.5 * (l + h)),
            converged: h - l <= spread_tol,
        },
        (ExtendedReal::NegInfinity, _) => LimitExponent {
            value: ExtendedReal::NegInfinity,
            converged: false,
        },
        _ => LimitExponent {
            value: ExtendedReal::PosInfinity,
            converged: false,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeSide {
    /// `b > β`: the ratio should vanish.
    Upper,
    /// `b < β`: the ratio should blow up.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioProbe {
    pub b: f64,
    pub side: ProbeSide,
    pub passed: bool,
    /// `max ln(|a_n| / e^{b c_n})` before the tail window.
    pub head_max: f64,
    /// Same over the tail window.
    pub tail_max: f64,
    /// `ln(|a_n| / e^{b c_n})` for every `n`.
    pub log_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub beta: f64,
    pub delta: f64,
    pub upper: RatioProbe,
    pub upper_mid: RatioProbe,
    pub lower: RatioProbe,
    pub lower_mid: RatioProbe,
}

impl DichotomyReport {
    pub fn upper_passed(&self) -> bool {
        self.upper.passed && self.upper_mid.passed
    }

    pub fn lower_passed(&self) -> bool {
        self.lower.passed && self.lower_mid.passed
    }

    pub fn passed(&self) -> bool {
        self.upper_passed() && self.lower_passed()
    }
}

fn ratio_probe(s: &ScaledSequence, b: f64, side: ProbeSide) -> RatioProbe {
    let log_ratios: Vec<f64> = s.log_abs.iter().zip(&s.c).map(|(l, c)| l - b * c).collect();
    let mut split = s.tail_start();
    if split == 0 {
        // whole sequence is the tail: compare its halves
        split = log_ratios.len() / 2;
    }
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let head_max = max(&log_ratios[..split]);
    let tail_max = max(&log_ratios[split..]);
    let passed = match side {
        ProbeSide::Upper => tail_max < 0.0 && tail_max < head_max,
        ProbeSide::Lower => tail_max > 0.0 && tail_max > head_max,
    };
    RatioProbe {
        b,
        side,
        passed,
        head_max,
        tail_max,
        log_ratios,
    }
}

/// Checks the dichotomy at `β ± δ` and `β ± δ/2`.
///
/// Upper probes pass when the tail envelope of `ln(|a_n|/e^{b c_n})` is
/// below zero and below the head envelope; lower probes pass when it is
/// above zero and above the head envelope.
pub fn dichotomy_probe(s: &ScaledSequence, beta: f64, delta: f64) -> DichotomyReport {
    DichotomyReport {
        beta,
        delta,
        upper: ratio_probe(s, beta + delta, ProbeSide::Upper),
        upper_mid: ratio_probe(s, beta + delta / 2.0, ProbeSide::Upper),
        lower: ratio_probe(s, beta - delta, ProbeSide::Lower),
        lower_mid: ratio_probe(s, beta - delta / 2.0, ProbeSide::Lower),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::trunc_log_log;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ll_grid(n: usize) -> Vec<f64> {
        (1..=n).map(|i| trunc_log_log(i as f64).unwrap()).collect()
    }

    #[test]
    fn extractor_examples() {
        let c = ll_grid(1000);
        let a: Vec<f64> = c.iter().map(|c| (0.5 * c).exp()).collect();
        let s = ScaledSequence::new(&a, c.clone(), 0.5).unwrap();
        assert!((chover_exponent_limsup(&s).to_f64() - 0.5).abs() < 1e-15);

        let s = ScaledSequence::new(&vec![0.0; 1000], c.clone(), 0.5).unwrap();
        assert_eq!(chover_exponent_limsup(&s), ExtendedReal::NegInfinity);
        assert!(chover_exponent_lim(&s, 0.1).converged);

        let ns: Vec<f64> = (100..=10_000).map(|n| n as f64).collect();
        let c: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
        let s = ScaledSequence::new(&ns, c, 0.5).unwrap();
        assert_eq!(chover_exponent_limsup(&s), ExtendedReal::Finite(1.0));
    }

    #[test]
    fn alternating_and_constant() {
        let c = ll_grid(10_000);
        let a: Vec<f64> = c
            .iter()
            .enumerate()
            .map(|(i, c)| if i % 2 == 0 { c.exp() } else { (2.0 * c).exp() })
            .collect();
        let s = ScaledSequence::new(&a, c.clone(), 0.5).unwrap();
        assert!((chover_exponent_liminf(&s).to_f64() - 1.0).abs() < 1e-12);
        assert!((chover_exponent_limsup(&s).to_f64() - 2.0).abs() < 1e-12);
        assert!(!chover_exponent_lim(&s, DEFAULT_SPREAD_TOL).converged);

        let ns: Vec<f64> = (1..=10_000).map(|n| n as f64).collect();
        let c: Vec<f64> = ns.iter().map(|n| n.ln().max(1.0)).collect();
        let s = ScaledSequence::new(&vec![5.0; ns.len()], c, 0.5).unwrap();
        let lim = chover_exponent_lim(&s, DEFAULT_SPREAD_TOL);
        let v = lim.value.to_f64();
        assert!((0.0..=5f64.ln() / 1000f64.ln()).contains(&v), "{v}");

        let c = ll_grid(5000);
        let a: Vec<f64> = c.iter().map(|c| (-2.0 * c).exp()).collect();
        let lim = chover_exponent_lim(&ScaledSequence::new(&a, c, 0.5).unwrap(), 0.1);
        assert!(lim.converged);
        assert!((lim.value.to_f64() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_sequences() {
        assert!(ScaledSequence::new(&[1.0], vec![1.0, 2.0], 0.5).is_err());
        assert!(ScaledSequence::new(&[], vec![], 0.5).is_err());
        assert!(ScaledSequence::new(&[1.0, 1.0], vec![2.0, 2.0], 0.5).is_err());
        assert!(ScaledSequence::new(&[1.0, 1.0], vec![1.0, -2.0], 0.5).is_err());
        assert!(ScaledSequence::new(&[1.0, 1.0], vec![1.0, 2.0], 0.0).is_err());
        assert!(ScaledSequence::new(&[1.0, 1.0, 1.0, 1.0], vec![1.0, 2.0, 4.0, 3.0], 0.5).is_err());
        assert!(ScaledSequence::new(&[f64::NAN, 1.0], vec![1.0, 2.0], 0.5).is_err());
    }

    #[test]
    fn dichotomy_examples() {
        let c = ll_grid(100_000);
        let a: Vec<f64> = c.iter().map(|c| c.exp()).collect();
        let s = ScaledSequence::new(&a, c.clone(), 0.5).unwrap();
        let r = dichotomy_probe(&s, 1.0, 0.5);
        assert!(
            r.passed(),
            "{:?} {:?}",
            (r.upper.head_max, r.upper.tail_max),
            (r.lower.head_max, r.lower.tail_max)
        );
        assert_eq!(r.upper.log_ratios.len(), s.len());
        let r = dichotomy_probe(&s, 2.0, 0.5);
        assert!(r.upper_passed());
        assert!(!r.lower_passed());
        let r = dichotomy_probe(&s, 0.0, 0.5);
        assert!(!r.upper_passed());
    }

    #[test]
    fn dichotomy_with_sqrt_noise() {
        // c_j = LL(n_j) on n_j = exp(exp(1 + j/100)): √c noise is only small
        // next to δ c once c > 1/δ^2
        let c: Vec<f64> = (0..5000).map(|j| 1.0 + j as f64 / 100.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for beta in [-1.5, 0.0, 0.7, 2.5] {
            let la: Vec<f64> = c
                .iter()
                .map(|c| beta * c + rng.gen_range(-1.0..=1.0) * c.sqrt())
                .collect();
            let s = ScaledSequence::from_log_magnitudes(la, c.clone(), 0.5).unwrap();
            assert!(dichotomy_probe(&s, beta, 0.5).passed(), "beta {beta}");
        }
    }

    #[test]
    fn csv_ingestion() {
        let text = "n,a,c\n1,2.0,1.0\n2,-4.0,2.0\n3,0,3.0\n";
        let s = ScaledSequence::from_csv(text.as_bytes(), 1.0).unwrap();
        assert_eq!(s.len(), 3);
        assert!((chover_exponent_limsup(&s).to_f64() - 2f64.ln()).abs() < 1e-15);
        let reordered = "c, n, a\n1.0, 1, 2.0\n2.0, 2, 4.0\n";
        assert_eq!(ScaledSequence::from_csv(reordered.as_bytes(), 1.0).unwrap().len(), 2);
        assert!(ScaledSequence::from_csv("n,a\n1,2\n".as_bytes(), 0.5).is_err());
        assert!(ScaledSequence::from_csv("n,a,c\n1,x,2\n".as_bytes(), 0.5).is_err());
    }

    proptest! {
        #[test]
        fn limsup_dominates_liminf(
            la in proptest::collection::vec(-50.0f64..50.0, 4..200),
            frac in 0.05f64..=1.0,
        ) {
            let c: Vec<f64> = (0..la.len()).map(|i| 1.0 + i as f64 * 0.01).collect();
            let s = ScaledSequence::from_log_magnitudes(la, c, frac).unwrap();
            prop_assert!(chover_exponent_limsup(&s) >= chover_exponent_liminf(&s));
        }

        #[test]
        fn scaling_moves_exponent_by_at_most_log_k_over_tail_scale(
            la in proptest::collection::vec(-20.0f64..20.0, 8..300),
            k in prop_oneof![-1e6f64..-1e-6, 1e-6f64..1e6],
            frac in 0.1f64..=1.0,
        ) {
            let c: Vec<f64> = (0..la.len()).map(|i| 1.0 + (i as f64 + 1.0).ln()).collect();
            let s = ScaledSequence::from_log_magnitudes(la.clone(), c.clone(), frac).unwrap();
            let scaled: Vec<f64> = la.iter().map(|l| l + k.abs().ln()).collect();
            let t = ScaledSequence::from_log_magnitudes(scaled, c.clone(), frac).unwrap();
            let bound = k.abs().ln().abs() / c[s.tail_start()];
            let d = (chover_exponent_limsup(&t).to_f64() - chover_exponent_limsup(&s).to_f64()).abs();
            prop_assert!(d <= bound * (1.0 + 1e-12) + 1e-12);
        }
    }
}
