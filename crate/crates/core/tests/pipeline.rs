use chover_core::classifier::{classify_spec, classify_spec_target, Outcome};
use chover_core::distributions::{mean_status, DistributionSpec, MeanStatus};
use chover_core::moment_index::{moment_functional, moment_index_analytic};
use chover_core::numeric::{ll_of_count, ExtendedReal};
use chover_core::simulator::{aggregate, derive_path_seed, run_path, run_paths, SimulationConfig};
use proptest::prelude::*;

fn spec(s: &str) -> DistributionSpec {
    s.parse().unwrap()
}

fn member_beta(spec: &DistributionSpec, alpha: f64) -> f64 {
    match classify_spec(spec, alpha).unwrap().outcome {
        Outcome::Member { beta } => beta,
        other => panic!("{spec} at α={alpha}: expected member, got {other:?}"),
    }
}

#[test]
fn spec_display_round_trips() {
    for s in [
        "family=stable;alpha=1.5",
        "family=gaussian",
        "family=lattice;alpha=2;lambda=-1",
        "family=logweibull;alpha=1.5;p=1;gamma=0.5",
        "family=degenerate;value=0",
        "family=gaussian;shift=2",
    ] {
        let parsed = spec(s);
        assert_eq!(spec(&parsed.to_string()), parsed, "{s}");
    }
}

#[test]
fn spec_parser_rejects_junk() {
    for s in [
        "",
        "family=stable",
        "family=stable;alpha=2.5",
        "family=gaussian;alpha=1",
        "family=stable;alpha=1;alpha=1",
        "family=unknown",
        "family=lattice;alpha=1",
    ] {
        assert!(s.parse::<DistributionSpec>().is_err(), "{s:?} accepted");
    }
}

#[test]
fn end_to_end_verdicts() {
    assert_eq!(member_beta(&spec("family=stable;alpha=0.5"), 0.5), 2.0);
    assert_eq!(member_beta(&spec("family=gaussian"), 2.0), 0.0);
    assert_eq!(member_beta(&spec("family=lattice;alpha=2;lambda=1"), 2.0), 0.5);

    let v = classify_spec(&spec("family=degenerate;value=0"), 1.5).unwrap();
    assert_eq!(v.outcome, Outcome::LimitZero);

    let v = classify_spec(&spec("family=degenerate;value=3"), 1.5).unwrap();
    assert_eq!(v.outcome, Outcome::LimsupInfinite);

    let v = classify_spec_target(&spec("family=gaussian"), 2.0, 0.5).unwrap();
    assert!(matches!(v.outcome, Outcome::ImpossibleBeta { .. }));
}

#[test]
fn shift_changes_mean_but_not_index() {
    let base = spec("family=stable;alpha=1.5");
    let shifted = spec("family=stable;alpha=1.5;shift=2");
    assert_eq!(mean_status(&base), MeanStatus::ZeroMean);
    assert!(matches!(mean_status(&shifted), MeanStatus::NonzeroFinite { mu } if mu == 2.0));
    let a = moment_index_analytic(&base, 1.5).unwrap().index;
    let b = moment_index_analytic(&shifted, 1.5).unwrap().index;
    assert_eq!(a, b);
    // Nonzero mean at α > 1 diverges whatever the index.
    assert_eq!(classify_spec(&shifted, 1.5).unwrap().outcome, Outcome::LimsupInfinite);
}

#[test]
fn degenerate_simulation_is_exact() {
    let mut cfg = SimulationConfig::new(spec("family=degenerate;value=2"), 1.0, 5_000, 3, 11);
    cfg.n0 = 16;
    let traces = run_paths(&cfg, 1).unwrap();
    for t in &traces {
        for c in &t.checkpoints {
            let n = c.n as f64;
            let want = ((2.0 * n).ln() - n.ln()) / ll_of_count(c.n);
            assert!((c.r_log - want).abs() < 1e-12, "n={} r={} want={want}", c.n, c.r_log);
        }
    }
    let summary = aggregate(&traces, 0.5).unwrap();
    assert_eq!(summary.estimates.len(), 3);
    assert_eq!(summary.band.min, summary.band.max);
}

#[test]
fn run_paths_matches_run_path() {
    let cfg = SimulationConfig::new(spec("family=lattice;alpha=1;lambda=0.5"), 1.0, 2_000, 4, 99);
    let all = run_paths(&cfg, 2).unwrap();
    for (i, t) in all.iter().enumerate() {
        assert_eq!(*t, run_path(&cfg, i as u64).unwrap());
    }
}

#[test]
fn huge_constant_sums_continue_in_log_domain() {
    let c = 1.7e308f64;
    let cfg = SimulationConfig::new(spec("family=degenerate;value=1.7e308"), 2.0, 10_000, 2, 5);
    for t in run_paths(&cfg, 1).unwrap() {
        assert_eq!(t.log_mode_from, Some(2));
        for ck in &t.checkpoints {
            let want = (ck.n as f64).ln() + c.ln();
            assert!((ck.s.log_mag() - want).abs() < 1e-9, "n={}", ck.n);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stable_index_is_reciprocal_alpha(alpha in 0.1f64..1.99) {
        let idx = moment_index_analytic(&DistributionSpec::symmetric_stable(alpha).unwrap(), alpha).unwrap();
        let want = 1.0 / alpha;
        prop_assert!(matches!(idx.index, ExtendedReal::Finite(x) if (x - want).abs() < 1e-12));
    }

    #[test]
    fn lattice_index_is_lambda_over_alpha(alpha in 0.2f64..2.0, lambda in -1.5f64..1.5) {
        let s = DistributionSpec::lattice(alpha, lambda).unwrap();
        let idx = moment_index_analytic(&s, alpha).unwrap();
        let want = lambda / alpha;
        prop_assert!(matches!(idx.index, ExtendedReal::Finite(x) if (x - want).abs() < 1e-12));
    }

    #[test]
    fn moment_functional_is_monotone_in_b(alpha in 0.2f64..2.0, lambda in -1.0f64..1.0, b in -2.0f64..2.0) {
        // Raising b shrinks the integrand, so finiteness is inherited upward.
        let s = DistributionSpec::lattice(alpha, lambda).unwrap();
        let lo = moment_functional(&s, alpha, b).unwrap();
        let hi = moment_functional(&s, alpha, b + 0.3).unwrap();
        prop_assert!(!lo.is_finite() || hi.is_finite());
    }

    #[test]
    fn stable_verdict_beta_equals_index(alpha in prop_oneof![0.1f64..0.99, 1.01f64..1.99]) {
        let s = DistributionSpec::symmetric_stable(alpha).unwrap();
        let beta = member_beta(&s, alpha);
        prop_assert!((beta - 1.0 / alpha).abs() < 1e-12);
    }

    #[test]
    fn path_seeds_distinct(master in any::<u64>(), i in 0u64..1_000_000, j in 0u64..1_000_000) {
        prop_assume!(i != j);
        prop_assert_ne!(derive_path_seed(master, i), derive_path_seed(master, j));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mirrored_paths_have_identical_r_log(seed in any::<u64>(), alpha in 0.6f64..1.9) {
        let s = DistributionSpec::symmetric_stable(alpha).unwrap();
        let mut cfg = SimulationConfig::new(s, alpha, 3_000, 1, seed);
        let a = run_path(&cfg, 0).unwrap();
        cfg.mirror = true;
        let b = run_path(&cfg, 0).unwrap();
        for (x, y) in a.checkpoints.iter().zip(&b.checkpoints) {
            prop_assert_eq!(x.r_log, y.r_log);
            prop_assert_eq!(x.s.sign().as_i8(), -y.s.sign().as_i8());
        }
    }

    #[test]
    fn thread_count_does_not_change_traces(seed in any::<u64>()) {
        let cfg = SimulationConfig::new(spec("family=gaussian"), 2.0, 1_000, 5, seed);
        prop_assert_eq!(run_paths(&cfg, 1).unwrap(), run_paths(&cfg, 3).unwrap());
    }
}
