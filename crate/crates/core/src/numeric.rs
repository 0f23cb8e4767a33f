//! Signed log-domain values, extended reals and the truncated logarithms
//! `L(x) = ln(max(e, x))`, `LL(x) = L(L(x))`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Opposite-sign operands whose log-magnitudes differ by less than this cancel exactly.
pub const CANCELLATION_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("NaN is not an extended real")]
    NotANumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    fn flip(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

/// A real number stored as a sign and the natural log of its magnitude.
///
/// Values such as `exp(2^40)` are representable; the magnitude is never
/// materialised unless [`SignedLogValue::to_f64`] is called. The log is kept
/// as an unevaluated pair `hi + lo` so that conversions from and back to
/// doubles stay within a few ulp even for magnitudes near `1e±300`.
#[derive(Debug, Clone, Copy)]
pub struct SignedLogValue {
    sign: Sign,
    hi: f64,
    lo: f64,
}

// ln 2 split so that k * LN2_HI is exact for |k| < 2^20.
#[allow(clippy::excessive_precision)]
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-01;
#[allow(clippy::excessive_precision)]
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl SignedLogValue {
    pub const ZERO: SignedLogValue = SignedLogValue {
        sign: Sign::Zero,
        hi: f64::NEG_INFINITY,
        lo: 0.0,
    };

    /// Builds a value from a sign and log-magnitude. A log-magnitude of
    /// `-inf` collapses to zero whatever the sign.
    pub fn new(sign: Sign, log_mag: f64) -> Self {
        Self::with_parts(sign, log_mag, 0.0)
    }

    fn with_parts(sign: Sign, hi: f64, lo: f64) -> Self {
        if sign == Sign::Zero || hi == f64::NEG_INFINITY {
            Self::ZERO
        } else if !hi.is_finite() {
            Self { sign, hi, lo: 0.0 }
        } else {
            let (hi, e) = two_sum(hi, lo);
            Self { sign, hi, lo: e }
        }
    }

    pub fn positive(log_mag: f64) -> Self {
        Self::new(Sign::Positive, log_mag)
    }

    pub fn negative(log_mag: f64) -> Self {
        Self::new(Sign::Negative, log_mag)
    }

    pub fn from_f64(x: f64) -> Self {
        let sign = if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            return Self::ZERO;
        };
        let mut a = x.abs();
        if a.is_infinite() {
            return Self {
                sign,
                hi: f64::INFINITY,
                lo: 0.0,
            };
        }
        // split a = m * 2^k with m in [sqrt(1/2), sqrt(2))
        let mut k: i64 = 0;
        if a < f64::MIN_POSITIVE {
            a *= 2f64.powi(54);
            k -= 54;
        }
        let bits = a.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64 - 1023;
        let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | (1023u64 << 52));
        k += exp;
        if m > std::f64::consts::SQRT_2 {
            m /= 2.0;
            k += 1;
        }
        let kf = k as f64;
        let (hi, e) = two_sum(kf * LN2_HI, m.ln());
        Self::with_parts(sign, hi, e + kf * LN2_LO)
    }

    /// Converts back to a float; overflows to `±inf` when the magnitude is
    /// beyond double range.
    pub fn to_f64(self) -> f64 {
        let mag = match self.sign {
            Sign::Zero => return 0.0,
            _ => self.magnitude(),
        };
        match self.sign {
            Sign::Negative => -mag,
            _ => mag,
        }
    }

    fn magnitude(self) -> f64 {
        let t = self.hi + self.lo;
        if t > 710.0 {
            return f64::INFINITY;
        }
        if t < -746.0 {
            return 0.0;
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = ((self.hi - k * LN2_HI) - k * LN2_LO) + self.lo;
        let k = k as i32;
        let er = r.exp();
        // two-step scaling keeps subnormal and near-overflow results exact
        let k1 = k / 2;
        er * 2f64.powi(k1) * 2f64.powi(k - k1)
    }

    pub fn sign(self) -> Sign {
        self.sign
    }

    /// Natural log of `|value|`; `-inf` for zero.
    pub fn log_mag(self) -> f64 {
        if self.sign == Sign::Zero {
            f64::NEG_INFINITY
        } else {
            self.hi + self.lo
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == Sign::Zero
    }

    /// Divides by `base^exponent` given `ln(base)`, i.e. subtracts
    /// `exponent * base_log` from the log-magnitude.
    pub fn scale_pow(self, base_log: f64, exponent: f64) -> Self {
        if self.is_zero() {
            return self;
        }
        let (hi, e) = two_sum(self.hi, -(exponent * base_log));
        Self::with_parts(self.sign, hi, e + self.lo)
    }
}

impl PartialEq for SignedLogValue {
    fn eq(&self, other: &Self) -> bool {
        match (self.sign, other.sign) {
            (Sign::Zero, Sign::Zero) => true,
            (a, b) => a == b && self.hi == other.hi && self.lo == other.lo,
        }
    }
}

impl Neg for SignedLogValue {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            sign: self.sign.flip(),
            ..self
        }
    }
}

impl Add for SignedLogValue {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        slv_add(self, rhs)
    }
}

impl fmt::Display for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            Sign::Positive => write!(f, "+exp({})", self.log_mag()),
            Sign::Negative => write!(f, "-exp({})", self.log_mag()),
        }
    }
}

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum e^x_i)`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Sum of two signed log-domain values.
pub fn slv_add(x: SignedLogValue, y: SignedLogValue) -> SignedLogValue {
    if x.is_zero() {
        return y;
    }
    if y.is_zero() {
        return x;
    }
    let (big, small) = match x.hi.total_cmp(&y.hi).then(x.lo.total_cmp(&y.lo)) {
        Ordering::Less => (y, x),
        _ => (x, y),
    };
    let diff = (small.hi - big.hi) + (small.lo - big.lo);
    let delta = if x.sign == y.sign {
        diff.exp().ln_1p()
    } else {
        if diff.abs() < CANCELLATION_THRESHOLD {
            return SignedLogValue::ZERO;
        }
        // ln(1 - e^diff) with diff < 0
        (-diff.exp_m1()).ln()
    };
    let (hi, e) = two_sum(big.hi, delta);
    SignedLogValue::with_parts(big.sign, hi, e + big.lo)
}

/// `L(x) = ln(max(e, x))` for `x >= 0`.
pub fn trunc_log(x: f64) -> Result<f64, NumericError> {
    if x < 0.0 || x.is_nan() {
        return Err(NumericError::NegativeArgument(x));
    }
    Ok(trunc_log_from_ln(x.ln()))
}

/// `LL(x) = L(L(x))` for `x >= 0`.
pub fn trunc_log_log(x: f64) -> Result<f64, NumericError> {
    trunc_log(x).map(|l| trunc_log_from_ln(l.ln()))
}

/// `L(x)` given `ln x` (accepts `-inf` for `x = 0`).
#[inline]
pub fn trunc_log_from_ln(ln_x: f64) -> f64 {
    if ln_x > 1.0 {
        ln_x
    } else {
        1.0
    }
}

/// `LL(x)` given `ln x`.
#[inline]
pub fn trunc_log_log_from_ln(ln_x: f64) -> f64 {
    trunc_log_from_ln(trunc_log_from_ln(ln_x).ln())
}

/// `LL(n)` for a positive count.
#[inline]
pub fn ll_of_count(n: u64) -> f64 {
    trunc_log_log_from_ln((n as f64).ln())
}

/// A real number extended with `-inf` and `+inf`; totally ordered, no NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn from_f64(x: f64) -> Result<Self, NumericError> {
        if x.is_nan() {
            Err(NumericError::NotANumber)
        } else if x == f64::INFINITY {
            Ok(ExtendedReal::PosInfinity)
        } else if x == f64::NEG_INFINITY {
            Ok(ExtendedReal::NegInfinity)
        } else {
            Ok(ExtendedReal::Finite(x))
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
            ExtendedReal::Finite(x) => x,
            ExtendedReal::PosInfinity => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtendedReal::*;
        match (self, other) {
            (NegInfinity, NegInfinity) | (PosInfinity, PosInfinity) => Ordering::Equal,
            (NegInfinity, _) | (_, PosInfinity) => Ordering::Less,
            (_, NegInfinity) | (PosInfinity, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.total_cmp(b),
        }
    }
}

impl From<f64> for ExtendedReal {
    /// NaN maps to `NegInfinity`; use [`ExtendedReal::from_f64`] to reject it.
    fn from(x: f64) -> Self {
        Self::from_f64(x).unwrap_or(ExtendedReal::NegInfinity)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInfinity => write!(f, "-inf"),
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::PosInfinity => write!(f, "inf"),
        }
    }
}

/// Parses a decimal number, `inf`/`+inf` or `-inf` (Rust float syntax; NaN rejected).
impl std::str::FromStr for ExtendedReal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let x: f64 = s
            .trim()
            .parse()
            .map_err(|_| format!("'{s}' is not a number, inf or -inf"))?;
        ExtendedReal::from_f64(x).map_err(|e| e.to_string())
    }
}

/// Finite values serialize as JSON numbers, infinities as the strings
/// `"inf"` and `"-inf"`.
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(x) => serializer.serialize_f64(*x),
            ExtendedReal::PosInfinity => serializer.serialize_str("inf"),
            ExtendedReal::NegInfinity => serializer.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtendedReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"inf\" or \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                ExtendedReal::from_f64(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                match v {
                    "inf" => Ok(ExtendedReal::PosInfinity),
                    "-inf" => Ok(ExtendedReal::NegInfinity),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(ExtVisitor)
    }
}
