use proptest::prelude::*;

use mlspline::bounds::TheoremId;
use mlspline::harness::{
    run_experiment, Exec, ExperimentConfig, FunctionSource, OmegaConfig, RunOptions,
};

fn power_sum(weights: Vec<f64>, exponents: Vec<f64>, caps: Option<Vec<Option<f64>>>) -> OmegaConfig {
    OmegaConfig::PowerSum { weights, exponents, caps }
}

fn run(cfg: &ExperimentConfig) -> mlspline::harness::ErrorReport {
    run_experiment(cfg, RunOptions::default()).unwrap()
}

#[test]
fn documented_examples() {
    let t1 = ExperimentConfig::new(TheoremId::T1, vec![2, 3], power_sum(vec![1.0; 2], vec![1.0; 2], None));
    let rep = run(&t1);
    assert!((rep.bound - 5.0 / 12.0).abs() < 1e-15 && rep.gap.abs() <= 1e-7);

    let mut t4 = ExperimentConfig::new(TheoremId::T4, vec![2, 4], power_sum(vec![1.0; 2], vec![1.0; 2], None));
    t4.r = Some(vec![1, 0]);
    let rep = run(&t4);
    assert!((rep.bound - 0.375).abs() < 1e-9 && (rep.empirical - 0.375).abs() < 1e-9);

    let mut xy = t1.clone();
    xy.function = FunctionSource::Expr { expr: "x1*x2".into(), deriv: None };
    let rep = run(&xy);
    assert!(rep.empirical <= 1e-15 && rep.bound > 0.0);
}

#[test]
fn t1_extremal_on_another_block() {
    let mut cfg = ExperimentConfig::new(TheoremId::T1, vec![3, 4], power_sum(vec![1.0, 2.0], vec![0.5, 1.0], None));
    cfg.block = Some(vec![2, 1]);
    let rep = run(&cfg);
    assert!(rep.gap.abs() <= 1e-7, "gap {}", rep.gap);
    assert!(rep.argmax[0] >= 2.0 / 3.0 && rep.argmax[1] >= 0.25 && rep.argmax[1] <= 0.5);
}

#[test]
fn presets_stay_within_a_loose_class_bound() {
    // sin-product has |f_x| <= 1 per axis, so omega(f; tau) <= tau_1 + tau_2.
    let mut cfg = ExperimentConfig::new(TheoremId::T1, vec![3, 3], power_sum(vec![1.0; 2], vec![1.0; 2], None));
    cfg.function = FunctionSource::Preset { name: "sin-product".into() };
    let rep = run(&cfg);
    assert!(rep.empirical <= rep.bound * (1.0 + 1e-7));
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let mut cfg = ExperimentConfig::new(TheoremId::T4, vec![3, 2, 2], power_sum(vec![1.0; 3], vec![0.6, 1.0, 0.8], None));
    cfg.r = Some(vec![1, 0, 1]);
    let a = run_experiment(&cfg, RunOptions::default()).unwrap();
    let b = run_experiment(&cfg, RunOptions { exec: Exec::Sequential, fd_fallback: false }).unwrap();
    assert_eq!(
        (a.bound.to_bits(), a.empirical.to_bits(), &a.argmax),
        (b.bound.to_bits(), b.empirical.to_bits(), &b.argmax)
    );
}

fn omega_strategy(n: usize) -> impl Strategy<Value = OmegaConfig> {
    (
        proptest::collection::vec(0.1f64..3.0, n),
        proptest::collection::vec(0.3f64..=1.0, n),
        proptest::collection::vec(proptest::option::of(0.05f64..1.0), n),
    )
        .prop_map(|(w, a, c)| OmegaConfig::PowerSum { weights: w, exponents: a, caps: Some(c) })
}

fn order_strategy(n: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..=1, n).prop_filter("non-zero order", |r| r.iter().any(|&b| b == 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn t1_t2_extremals_are_sharp(
        m in proptest::collection::vec(2usize..5, 1..=3),
        omega in omega_strategy(3),
        p in 1.0f64..=3.0,
        k in 0.1f64..2.0, a in 0.3f64..=1.0,
    ) {
        let n = m.len();
        let omega = match omega {
            OmegaConfig::PowerSum { weights, exponents, caps } => OmegaConfig::PowerSum {
                weights: weights[..n].to_vec(),
                exponents: exponents[..n].to_vec(),
                caps: caps.map(|c| c[..n].to_vec()),
            },
            other => other,
        };
        let rep = run(&ExperimentConfig::new(TheoremId::T1, m.clone(), omega));
        prop_assert!(rep.gap.abs() <= 1e-7, "T1 gap {}", rep.gap);

        let mut t2 = ExperimentConfig::new(TheoremId::T2, m, OmegaConfig::Power { weight: k, exponent: a, cap: None });
        t2.p = Some(p);
        let rep = run(&t2);
        prop_assert!(rep.gap.abs() <= 1e-7, "T2 gap {}", rep.gap);
    }

    #[test]
    fn t4_extremals_are_sharp(
        m in proptest::collection::vec(2usize..4, 2),
        omega in omega_strategy(2),
        r in order_strategy(2),
    ) {
        let mut cfg = ExperimentConfig::new(TheoremId::T4, m, omega);
        cfg.r = Some(r);
        let rep = run(&cfg);
        prop_assert!(rep.gap.abs() <= 1e-7, "gap {} bound {}", rep.gap, rep.bound);
    }

    #[test]
    fn t5_extremals_are_sharp(
        m in proptest::collection::vec(2usize..4, 2),
        k in 0.1f64..2.0, a in 0.3f64..=1.0, p in 1.0f64..=3.0,
        r in order_strategy(2),
    ) {
        let mut cfg = ExperimentConfig::new(TheoremId::T5, m, OmegaConfig::Power { weight: k, exponent: a, cap: None });
        cfg.p = Some(p);
        cfg.r = Some(r);
        let rep = run(&cfg);
        prop_assert!(rep.gap.abs() <= 1e-7, "gap {} bound {}", rep.gap, rep.bound);
    }
}
