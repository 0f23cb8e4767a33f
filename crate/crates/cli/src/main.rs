//! `chover`: classify distributions by their Chover-type LIL, compute log
//! moment indices, and run seeded partial-sum simulations.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or parse error,
//! 3 inconsistent analytic inputs, 4 I/O failure, 5 overflow under
//! `--overflow-policy error`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use chover_core::classifier::{classify, classify_spec, classify_spec_target, classify_target, ClassifierError};
use chover_core::distributions::{mean_status, sample_with_seed, DistributionError, DistributionSpec, MeanStatus};
use chover_core::moment_index::{moment_index_analytic, moment_index_numeric_for, MomentError};
use chover_core::sequence::{
    chover_exponent_lim, chover_exponent_liminf, chover_exponent_limsup, dichotomy_probe, RatioProbe, ScaledSequence,
    DEFAULT_SPREAD_TOL, DEFAULT_TAIL_FRACTION,
};
use chover_core::simulator::{
    aggregate, run_paths, write_summary_jsonl, write_trace_csv, OverflowPolicy, SimulationConfig, SimulationError,
    DEFAULT_CHECKPOINT_RATIO, DEFAULT_N0,
};
use chover_core::ExtendedReal;

#[derive(Parser)]
#[command(
    name = "chover",
    version,
    about = "Chover-type LIL classification, log-moment indices and partial-sum simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a distribution (or raw index/mean facts) and print the verdict as JSON.
    Classify {
        /// e.g. "family=stable;alpha=1.5"
        #[arg(long, required_unless_present = "index", conflicts_with = "index")]
        spec: Option<DistributionSpec>,
        /// Normalisation exponent; defaults to the family's own alpha.
        #[arg(long, required_unless_present = "spec")]
        alpha: Option<f64>,
        /// Ask whether this particular beta holds.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        /// Moment index given directly: a number, inf or -inf.
        #[arg(long, allow_hyphen_values = true, requires = "mean")]
        index: Option<ExtendedReal>,
        /// zero | nonzero:<mu> | undefined
        #[arg(long, value_parser = parse_mean, requires = "index")]
        mean: Option<MeanStatus>,
        /// X = 0 almost surely.
        #[arg(long, requires = "index")]
        degenerate_zero: bool,
    },
    /// Moment index inf{b : E|X|^α / (L|X|)^(bα) < ∞}.
    Index {
        #[command(flatten)]
        target: Target,
        /// Also run the octave-slope numeric test on the tail function.
        #[arg(long)]
        numeric: bool,
        #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
        b_lo: f64,
        #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
        b_hi: f64,
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
    },
    /// Print seeded draws as CSV `sign,log_abs,value`.
    Sample {
        #[arg(long)]
        spec: DistributionSpec,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate partial sums and write trace.csv and summary.jsonl.
    Simulate(SimulateArgs),
    /// Exponents and dichotomy probes for a CSV sequence with columns n,a,c.
    Lemma {
        csv: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_TAIL_FRACTION)]
        tail_fraction: f64,
    },
    /// Verdict, analytic and numeric index, and mean in one JSON-lines report.
    Report {
        #[command(flatten)]
        target: Target,
    },
}

#[derive(Args)]
struct Target {
    /// e.g. "family=stable;alpha=1.5"
    #[arg(long)]
    spec: DistributionSpec,
    /// Normalisation exponent; defaults to the family's own alpha.
    #[arg(long)]
    alpha: Option<f64>,
}

impl Target {
    fn alpha_owned(self) -> Result<(DistributionSpec, f64), Failure> {
        let a = self.alpha()?;
        Ok((self.spec, a))
    }

    fn alpha(&self) -> Result<f64, Failure> {
        self.alpha
            .or_else(|| self.spec.natural_alpha())
            .ok_or_else(|| Failure::Usage(format!("--alpha is required for {}", self.spec)))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: DistributionSpec,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    n_max: u64,
    #[arg(long, default_value_t = 8)]
    paths: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CHECKPOINT_RATIO)]
    ratio: f64,
    #[arg(long, default_value_t = DEFAULT_N0)]
    n0: u64,
    #[arg(long, default_value_t = DEFAULT_TAIL_FRACTION)]
    tail_fraction: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// error | switch_to_log
    #[arg(long, default_value_t = OverflowPolicy::SwitchToLog)]
    overflow_policy: OverflowPolicy,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "CHOVER_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Debug)]
enum Failure {
    Numeric(String),
    Usage(String),
    Inconsistent(String),
    Io(String),
    Overflow(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Numeric(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Inconsistent(_) => 3,
            Failure::Io(_) => 4,
            Failure::Overflow(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Numeric(m)
            | Failure::Usage(m)
            | Failure::Inconsistent(m)
            | Failure::Io(m)
            | Failure::Overflow(m) => m,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<DistributionError> for Failure {
    fn from(e: DistributionError) -> Self {
        match e {
            DistributionError::InvalidParameter { .. }
            | DistributionError::Parse(_)
            | DistributionError::OutOfRange(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<MomentError> for Failure {
    fn from(e: MomentError) -> Self {
        match e {
            MomentError::AlphaOutOfRange(_) | MomentError::InvalidArgument(_) => Failure::Usage(e.to_string()),
            MomentError::Distribution(d) => d.into(),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<ClassifierError> for Failure {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::AlphaOutOfRange(_) => Failure::Usage(e.to_string()),
            ClassifierError::Inconsistent(_) => Failure::Inconsistent(e.to_string()),
            ClassifierError::Moment(m) => m.into(),
        }
    }
}

impl From<SimulationError> for Failure {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Overflow { .. } => Failure::Overflow(e.to_string()),
            SimulationError::InvalidConfig(_) => Failure::Usage(e.to_string()),
            SimulationError::Distribution(d) => d.into(),
            SimulationError::Io(_) | SimulationError::Csv(_) | SimulationError::Json(_) => Failure::Io(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn parse_mean(s: &str) -> Result<MeanStatus, String> {
    match s {
        "zero" => Ok(MeanStatus::ZeroMean),
        "undefined" | "infinite" => Ok(MeanStatus::UndefinedOrInfinite),
        _ => match s.strip_prefix("nonzero:").map(str::parse::<f64>) {
            Some(Ok(mu)) if mu != 0.0 && mu.is_finite() => Ok(MeanStatus::NonzeroFinite { mu }),
            _ => Err(format!("'{s}': expected zero, nonzero:<mu> or undefined")),
        },
    }
}

fn cmd_classify(
    spec: Option<DistributionSpec>,
    alpha: Option<f64>,
    beta: Option<f64>,
    facts: Option<(ExtendedReal, MeanStatus, bool)>,
) -> Result<(), Failure> {
    let v = match (spec, facts) {
        (Some(spec), _) => {
            let alpha = Target { spec, alpha }.alpha_owned()?;
            match beta {
                Some(b) => classify_spec_target(&alpha.0, alpha.1, b)?,
                None => classify_spec(&alpha.0, alpha.1)?,
            }
        }
        (None, Some((index, mean, degenerate))) => {
            let alpha = alpha.ok_or_else(|| Failure::Usage("--alpha is required with --index".into()))?;
            match beta {
                Some(b) => classify_target(alpha, b, index, mean, degenerate)?,
                None => classify(alpha, index, mean, degenerate)?,
            }
        }
        (None, None) => return Err(Failure::Usage("give --spec or --index with --mean".into())),
    };
    print_json(&v)
}

fn cmd_index(target: &Target, numeric: bool, b_lo: f64, b_hi: f64, tol: f64) -> Result<(), Failure> {
    let alpha = target.alpha()?;
    print_json(&moment_index_analytic(&target.spec, alpha)?)?;
    if numeric {
        print_json(&moment_index_numeric_for(&target.spec, alpha, b_lo, b_hi, tol)?)?;
    }
    Ok(())
}

fn cmd_sample(spec: &DistributionSpec, count: usize, seed: u64) -> Result<(), Failure> {
    let draws = sample_with_seed(spec, count, seed)?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "sign,log_abs,value")?;
    for v in draws {
        writeln!(out, "{},{},{}", v.sign().as_i8(), v.log_mag(), v.to_f64())?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let alpha = a
        .alpha
        .or_else(|| a.spec.natural_alpha())
        .ok_or_else(|| Failure::Usage(format!("--alpha is required for {}", a.spec)))?;
    if !(a.tail_fraction > 0.0 && a.tail_fraction <= 1.0) {
        return Err(Failure::Usage(format!(
            "--tail-fraction {} outside (0, 1]",
            a.tail_fraction
        )));
    }
    let config = SimulationConfig {
        checkpoint_ratio: a.ratio,
        n0: a.n0,
        overflow_policy: a.overflow_policy,
        ..SimulationConfig::new(a.spec.clone(), alpha, a.n_max, a.paths, a.seed)
    };
    config.validate()?;
    let traces = run_paths(&config, a.threads)?;
    let summary = aggregate(&traces, a.tail_fraction)?;

    fs::create_dir_all(&a.out)?;
    write_trace_csv(BufWriter::new(File::create(a.out.join("trace.csv"))?), &traces)?;
    write_summary_jsonl(BufWriter::new(File::create(a.out.join("summary.jsonl"))?), &summary)?;
    print_json(&summary.band)
}

fn probe_json(p: &RatioProbe) -> serde_json::Value {
    json!({ "b": p.b, "side": p.side, "passed": p.passed, "head_max": p.head_max, "tail_max": p.tail_max })
}

fn cmd_lemma(path: &PathBuf, beta: f64, delta: f64, tail_fraction: f64) -> Result<(), Failure> {
    let file = File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let seq = ScaledSequence::from_csv(file, tail_fraction).map_err(|e| Failure::Usage(e.to_string()))?;
    let d = dichotomy_probe(&seq, beta, delta);
    print_json(&json!({
        "rows": seq.len(),
        "limsup_exponent": chover_exponent_limsup(&seq),
        "liminf_exponent": chover_exponent_liminf(&seq),
        "lim_exponent": chover_exponent_lim(&seq, DEFAULT_SPREAD_TOL),
        "beta": beta,
        "delta": delta,
        "upper_passed": d.upper_passed(),
        "lower_passed": d.lower_passed(),
        "probes": [probe_json(&d.upper), probe_json(&d.upper_mid), probe_json(&d.lower_mid), probe_json(&d.lower)],
    }))
}

fn cmd_report(target: &Target) -> Result<(), Failure> {
    let alpha = target.alpha()?;
    let spec = &target.spec;
    print_json(&json!({ "record": "spec", "spec": spec.to_string(), "alpha": alpha }))?;
    let mean = match mean_status(spec) {
        MeanStatus::ZeroMean => json!({ "status": "zero" }),
        MeanStatus::NonzeroFinite { mu } => json!({ "status": "nonzero_finite", "mu": mu }),
        MeanStatus::UndefinedOrInfinite => json!({ "status": "undefined_or_infinite" }),
    };
    print_json(&json!({ "record": "mean", "mean": mean }))?;
    print_json(&json!({ "record": "index_analytic", "result": moment_index_analytic(spec, alpha)? }))?;
    let numeric = match moment_index_numeric_for(spec, alpha, -6.0, 6.0, 0.1) {
        Ok(r) => json!({ "record": "index_numeric", "result": r }),
        Err(e) => json!({ "record": "index_numeric", "error": e.to_string() }),
    };
    print_json(&numeric)?;
    print_json(&json!({ "record": "verdict", "verdict": classify_spec(spec, alpha)? }))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Classify {
            spec,
            alpha,
            beta,
            index,
            mean,
            degenerate_zero,
        } => cmd_classify(
            spec.clone(),
            *alpha,
            *beta,
            index.zip(*mean).map(|(i, m)| (i, m, *degenerate_zero)),
        ),
        Command::Index {
            target,
            numeric,
            b_lo,
            b_hi,
            tol,
        } => cmd_index(target, *numeric, *b_lo, *b_hi, *tol),
        Command::Sample { spec, count, seed } => cmd_sample(spec, *count, *seed),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Lemma {
            csv,
            beta,
            delta,
            tail_fraction,
        } => cmd_lemma(csv, *beta, *delta, *tail_fraction),
        Command::Report { target } => cmd_report(target),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("chover: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
