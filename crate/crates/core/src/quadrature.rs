//! Adaptive Gauss–Kronrod (7/15) quadrature on log-integrands.
//!
//! Integrands are supplied as `u -> ln f(u)` and the result is `ln ∫ f`, so
//! factors like `e^{αu}` over octaves of length `2^30` never overflow.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::numeric::{log_add_exp, log_sum_exp};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integrand returned NaN at u = {0}")]
    NotANumber(f64),
    #[error("no convergence after {panels} panels (ln estimate {log_value}, ln error {log_error})")]
    NoConvergence {
        panels: usize,
        log_value: f64,
        log_error: f64,
    },
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    /// `ln` of the integral; `-inf` for an identically zero integrand.
    pub log_value: f64,
    /// `ln` of the estimated absolute error.
    pub log_error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    log_value: f64,
    log_error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_error.total_cmp(&other.log_error)
    }
}

fn gk15<F: Fn(f64) -> f64>(log_f: &F, a: f64, b: f64) -> Result<Panel, QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut g = [0.0f64; 15];
    for i in 0..7 {
        let dx = half * XGK[i];
        g[2 * i] = log_f(center - dx);
        g[2 * i + 1] = log_f(center + dx);
    }
    g[14] = log_f(center);
    for (i, v) in g.iter().enumerate() {
        if v.is_nan() {
            let u = if i == 14 {
                center
            } else if i % 2 == 0 {
                center - half * XGK[i / 2]
            } else {
                center + half * XGK[i / 2]
            };
            return Err(QuadratureError::NotANumber(u));
        }
    }
    let m = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return Ok(Panel {
            a,
            b,
            log_value: m,
            log_error: if m == f64::INFINITY { m } else { f64::NEG_INFINITY },
        });
    }
    let mut kron = WGK[7] * (g[14] - m).exp();
    let mut gauss = WG[3] * (g[14] - m).exp();
    for i in 0..7 {
        let pair = (g[2 * i] - m).exp() + (g[2 * i + 1] - m).exp();
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    let log_half = half.ln();
    let diff = (kron - gauss).abs();
    Ok(Panel {
        a,
        b,
        log_value: m + kron.ln() + log_half,
        log_error: if diff > 0.0 {
            m + diff.ln() + log_half
        } else {
            f64::NEG_INFINITY
        },
    })
}

/// `ln ∫_a^b exp(log_f(u)) du` by globally adaptive bisection.
pub fn log_integrate<F: Fn(f64) -> f64>(
    log_f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<LogIntegral, QuadratureError> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(QuadratureError::InvalidInterval(a, b));
    }
    if a == b {
        return Ok(LogIntegral {
            log_value: f64::NEG_INFINITY,
            log_error: f64::NEG_INFINITY,
            panels: 0,
        });
    }
    let log_tol = opts.rel_tol.ln();
    let mut heap = BinaryHeap::new();
    heap.push(gk15(&log_f, a, b)?);
    let mut settled: Vec<Panel> = Vec::new();
    loop {
        let all: Vec<&Panel> = heap.iter().chain(settled.iter()).collect();
        let values: Vec<f64> = all.iter().map(|p| p.log_value).collect();
        let errors: Vec<f64> = all.iter().map(|p| p.log_error).collect();
        let total = log_sum_exp(&values);
        let total_err = log_sum_exp(&errors);
        let panels = all.len();
        if total == f64::INFINITY {
            return Ok(LogIntegral {
                log_value: f64::INFINITY,
                log_error: f64::INFINITY,
                panels,
            });
        }
        if total_err == f64::NEG_INFINITY || total_err <= total + log_tol {
            return Ok(LogIntegral {
                log_value: total,
                log_error: total_err,
                panels,
            });
        }
        if panels >= opts.max_panels {
            return Err(QuadratureError::NoConvergence {
                panels,
                log_value: total,
                log_error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is non-empty while error is positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            settled.push(Panel {
                log_error: f64::NEG_INFINITY,
                ..worst
            });
            continue;
        }
        heap.push(gk15(&log_f, worst.a, mid)?);
        heap.push(gk15(&log_f, mid, worst.b)?);
    }
}

/// `ln ∫_a^∞ exp(log_f(u)) du` for an eventually decaying integrand, by
/// summing geometrically growing segments until they stop contributing.
pub fn log_integrate_upper<F: Fn(f64) -> f64>(
    log_f: F,
    a: f64,
    initial_width: f64,
    opts: QuadOptions,
) -> Result<LogIntegral, QuadratureError> {
    let mut total = f64::NEG_INFINITY;
    let mut total_err = f64::NEG_INFINITY;
    let mut panels = 0;
    let mut lo = a;
    let mut width = initial_width;
    let mut quiet = 0;
    for _ in 0..400 {
        let hi = lo + width;
        let seg = log_integrate(&log_f, lo, hi, opts)?;
        panels += seg.panels;
        total = log_add_exp(total, seg.log_value);
        total_err = log_add_exp(total_err, seg.log_error);
        if total == f64::INFINITY {
            break;
        }
        if seg.log_value < total + opts.rel_tol.ln() - 2.0 {
            quiet += 1;
            if quiet >= 2 {
                return Ok(LogIntegral {
                    log_value: total,
                    log_error: total_err,
                    panels,
                });
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
        if !lo.is_finite() {
            break;
        }
    }
    if total == f64::INFINITY {
        return Ok(LogIntegral {
            log_value: total,
            log_error: total,
            panels,
        });
    }
    Err(QuadratureError::NoConvergence {
        panels,
        log_value: total,
        log_error: total_err,
    })
}
