//! Decision table from `(α, moment index, mean, degeneracy)` to the
//! almost-sure behaviour of `|S_n / n^{1/α}|^{1/LL(n)}`.

use serde::ser::Serializer;
use serde::Serialize;
use thiserror::Error;

use crate::distributions::{mean_status, DistributionSpec, MeanStatus};
use crate::moment_index::{moment_index_analytic, MomentError};
use crate::numeric::ExtendedReal;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("alpha = {0} outside (0, 2]")]
    AlphaOutOfRange(f64),
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Moment(#[from] MomentError),
}

type Result<T> = std::result::Result<T, ClassifierError>;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// `limsup = e^β` almost surely.
    Member {
        beta: f64,
    },
    LimsupInfinite,
    /// The statistic tends to 0 almost surely.
    LimitZero,
    /// A requested `β` that the variable cannot have.
    ImpossibleBeta {
        beta: f64,
        reason: String,
    },
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Member { .. } => "member",
            Outcome::LimsupInfinite => "limsup_infinite",
            Outcome::LimitZero => "limit_zero",
            Outcome::ImpossibleBeta { .. } => "impossible_beta",
        }
    }

    /// `β` on the extended scale: `+∞` for a divergent limsup, `-∞` for a zero limit.
    pub fn beta(&self) -> ExtendedReal {
        match *self {
            Outcome::Member { beta } | Outcome::ImpossibleBeta { beta, .. } => ExtendedReal::from(beta),
            Outcome::LimsupInfinite => ExtendedReal::PosInfinity,
            Outcome::LimitZero => ExtendedReal::NegInfinity,
        }
    }
}

/// Which characterisation produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremTag {
    /// `α = 2`, `β > 0`.
    NormalScalePositive,
    /// `α = 2`, `β = 0`, non-degenerate.
    NormalScaleZero,
    /// `1 < α < 2`.
    IntermediateAlpha,
    /// `α = 1`.
    CauchyScale,
    /// `0 < α < 1`.
    SubCauchyScale,
    /// The statistic tends to zero.
    DegenerateLimit,
    /// The limsup is infinite.
    DivergentLimsup,
    /// `α = 2` admits no negative `β`.
    NegativeBetaExcluded,
}

/// The `β = 0` disjunct at `α = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroBranch {
    /// Finite nonzero mean; the statistic converges to 1.
    LimEqualsOne,
    /// Moment index exactly 0; only the limsup is 1.
    IndexZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationVerdict {
    pub outcome: Outcome,
    pub theorem_tag: TheoremTag,
    pub hypotheses_used: Vec<String>,
    pub zero_branch: Option<ZeroBranch>,
}

impl Serialize for ClassificationVerdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Json<'a> {
            outcome: &'static str,
            beta: ExtendedReal,
            theorem_tag: TheoremTag,
            hypotheses_used: &'a [String],
            #[serde(skip_serializing_if = "Option::is_none")]
            zero_branch: Option<ZeroBranch>,
            #[serde(skip_serializing_if = "Option::is_none")]
            reason: Option<&'a str>,
        }
        Json {
            outcome: self.outcome.name(),
            beta: self.outcome.beta(),
            theorem_tag: self.theorem_tag,
            hypotheses_used: &self.hypotheses_used,
            zero_branch: self.zero_branch,
            reason: match &self.outcome {
                Outcome::ImpossibleBeta { reason, .. } => Some(reason),
                _ => None,
            },
        }
        .serialize(s)
    }
}

fn describe_mean(mean: MeanStatus) -> String {
    match mean {
        MeanStatus::ZeroMean => "E X = 0".into(),
        MeanStatus::NonzeroFinite { mu } => format!("E|X| < inf and E X = {mu} != 0"),
        MeanStatus::UndefinedOrInfinite => "E|X| = inf".into(),
    }
}

fn verdict(outcome: Outcome, tag: TheoremTag, hyps: Vec<String>) -> Result<ClassificationVerdict> {
    Ok(ClassificationVerdict {
        outcome,
        theorem_tag: tag,
        hypotheses_used: hyps,
        zero_branch: None,
    })
}

fn inconsistent<T>(msg: impl Into<String>) -> Result<T> {
    Err(ClassifierError::Inconsistent(msg.into()))
}

/// Classifies from analytic facts about `X`.
///
/// `index` is the moment index over all real `b` (`-∞` allowed); at `α = 2`
/// only `b > 0` is admitted, so it is clamped at 0 here.
pub fn classify(
    alpha: f64,
    index: ExtendedReal,
    mean: MeanStatus,
    degenerate_zero: bool,
) -> Result<ClassificationVerdict> {
    use ExtendedReal::{Finite, NegInfinity, PosInfinity};
    use TheoremTag::*;

    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(ClassifierError::AlphaOutOfRange(alpha));
    }
    let mut hyps = vec![format!("moment index = {index}"), describe_mean(mean)];
    let finite_mean = !matches!(mean, MeanStatus::UndefinedOrInfinite);

    if degenerate_zero {
        if index != NegInfinity || mean != MeanStatus::ZeroMean {
            return inconsistent("X = 0 a.s. needs index -inf and zero mean");
        }
        hyps.push("X = 0 a.s.".into());
        return verdict(Outcome::LimitZero, DegenerateLimit, hyps);
    }

    if alpha == 2.0 {
        if index < PosInfinity && !finite_mean {
            return inconsistent("a finite index at alpha = 2 implies E X^2/(L|X|)^(2b) < inf, hence E|X| < inf");
        }
        if mean != MeanStatus::ZeroMean {
            return verdict(Outcome::LimsupInfinite, DivergentLimsup, hyps);
        }
        return match index {
            PosInfinity => verdict(Outcome::LimsupInfinite, DivergentLimsup, hyps),
            Finite(b) if b > 0.0 => verdict(Outcome::Member { beta: b }, NormalScalePositive, hyps),
            _ => {
                hyps.push("X non-degenerate".into());
                hyps.push("index over b > 0 is 0".into());
                verdict(Outcome::Member { beta: 0.0 }, NormalScaleZero, hyps)
            }
        };
    }

    if alpha > 1.0 {
        if index < PosInfinity && !finite_mean {
            return inconsistent("a finite index with alpha > 1 implies E|X| < inf");
        }
        if mean != MeanStatus::ZeroMean || index == PosInfinity {
            return verdict(Outcome::LimsupInfinite, DivergentLimsup, hyps);
        }
        return match index {
            Finite(b) => verdict(Outcome::Member { beta: b }, IntermediateAlpha, hyps),
            _ => verdict(Outcome::LimitZero, DegenerateLimit, hyps),
        };
    }

    if alpha == 1.0 {
        // E|X| < inf forces index <= 0; E|X| = inf forces index >= 0.
        if finite_mean && index > Finite(0.0) {
            return inconsistent("finite mean with a positive moment index at alpha = 1");
        }
        if !finite_mean && index < Finite(0.0) {
            return inconsistent("infinite E|X| with a negative moment index at alpha = 1");
        }
        if let MeanStatus::NonzeroFinite { .. } = mean {
            let mut v = verdict(Outcome::Member { beta: 0.0 }, CauchyScale, hyps)?;
            v.zero_branch = Some(ZeroBranch::LimEqualsOne);
            return Ok(v);
        }
        return match index {
            PosInfinity => verdict(Outcome::LimsupInfinite, DivergentLimsup, hyps),
            NegInfinity => verdict(Outcome::LimitZero, DegenerateLimit, hyps),
            Finite(0.0) => {
                let mut v = verdict(Outcome::Member { beta: 0.0 }, CauchyScale, hyps)?;
                v.zero_branch = Some(ZeroBranch::IndexZero);
                Ok(v)
            }
            Finite(b) => verdict(Outcome::Member { beta: b }, CauchyScale, hyps),
        };
    }

    match index {
        PosInfinity => verdict(Outcome::LimsupInfinite, DivergentLimsup, hyps),
        NegInfinity => verdict(Outcome::LimitZero, DegenerateLimit, hyps),
        Finite(b) => verdict(Outcome::Member { beta: b }, SubCauchyScale, hyps),
    }
}

/// Answers "is `X` in the class with this `β`?". Returns the matching
/// `Member` verdict, or `ImpossibleBeta` explaining why not.
pub fn classify_target(
    alpha: f64,
    beta: f64,
    index: ExtendedReal,
    mean: MeanStatus,
    degenerate_zero: bool,
) -> Result<ClassificationVerdict> {
    if alpha == 2.0 && beta < 0.0 {
        return Ok(ClassificationVerdict {
            outcome: Outcome::ImpossibleBeta {
                beta,
                reason: "alpha = 2 admits no negative beta: a constant gives limsup 0 or inf, anything else at least 1"
                    .into(),
            },
            theorem_tag: TheoremTag::NegativeBetaExcluded,
            hypotheses_used: vec![format!("requested beta = {beta}")],
            zero_branch: None,
        });
    }
    let v = classify(alpha, index, mean, degenerate_zero)?;
    if v.outcome == (Outcome::Member { beta }) {
        return Ok(v);
    }
    let reason = format!(
        "actual verdict is {} with beta = {}",
        v.outcome.name(),
        v.outcome.beta()
    );
    let mut hyps = v.hypotheses_used;
    hyps.push(format!("requested beta = {beta}"));
    Ok(ClassificationVerdict {
        outcome: Outcome::ImpossibleBeta { beta, reason },
        theorem_tag: v.theorem_tag,
        hypotheses_used: hyps,
        zero_branch: v.zero_branch,
    })
}

fn spec_facts(spec: &DistributionSpec, alpha: f64) -> Result<(ExtendedReal, MeanStatus, bool, String)> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(ClassifierError::AlphaOutOfRange(alpha));
    }
    let idx = moment_index_analytic(spec, alpha)?;
    Ok((idx.index, mean_status(spec), spec.is_degenerate_zero(), idx.evidence))
}

/// Analytic index, mean and degeneracy of `spec`, then [`classify`].
pub fn classify_spec(spec: &DistributionSpec, alpha: f64) -> Result<ClassificationVerdict> {
    let (index, mean, degenerate, evidence) = spec_facts(spec, alpha)?;
    let mut v = classify(alpha, index, mean, degenerate)?;
    v.hypotheses_used.insert(0, format!("X ~ {spec}"));
    v.hypotheses_used.insert(2, format!("index evidence: {evidence}"));
    Ok(v)
}

/// [`classify_target`] on the analytic facts of `spec`.
pub fn classify_spec_target(spec: &DistributionSpec, alpha: f64, beta: f64) -> Result<ClassificationVerdict> {
    let (index, mean, degenerate, _) = spec_facts(spec, alpha)?;
    let mut v = classify_target(alpha, beta, index, mean, degenerate)?;
    v.hypotheses_used.insert(0, format!("X ~ {spec}"));
    Ok(v)
}
