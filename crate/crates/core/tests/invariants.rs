use proptest::prelude::*;
use serde_json::json;
use subdiff_core::analytics::{lil_envelope, lil_h};
use subdiff_core::diagnostics::{Check, Relation, TestReport};
use subdiff_core::inverse::invert_path;
use subdiff_core::laplace::renewal_function;
use subdiff_core::rng::{ensemble, SeedRecord};
use subdiff_core::stats::isotonic_nonincreasing;
use subdiff_core::subordinator::{sample_increment, PathGrid};
use subdiff_core::BernsteinSpec;

fn spec_strategy() -> impl Strategy<Value = BernsteinSpec> {
    prop_oneof![
        (0.1f64..0.95).prop_map(|a| BernsteinSpec::stable(a).unwrap()),
        (0.1f64..0.95, 0.1f64..5.0).prop_map(|(a, l)| BernsteinSpec::tempered_stable(a, l).unwrap()),
    ]
}

fn relation_strategy() -> impl Strategy<Value = Relation> {
    prop_oneof![
        Just(Relation::WithinAbs),
        Just(Relation::WithinRel),
        Just(Relation::AtMost),
        Just(Relation::AtLeast),
        Just(Relation::Exceeds),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponent_is_increasing_and_concave(spec in spec_strategy(), u in 1e-3f64..50.0, r in 1.01f64..4.0) {
        let (a, b) = (u, u * r);
        let (fa, fb) = (spec.eval_exponent(a).unwrap(), spec.eval_exponent(b).unwrap());
        let fm = spec.eval_exponent(0.5 * (a + b)).unwrap();
        prop_assert!(fa > 0.0 && fb > fa);
        prop_assert!(fm >= 0.5 * (fa + fb) * (1.0 - 1e-12));
    }

    #[test]
    fn eta_inverts_rho(spec in spec_strategy(), u in 1e-4f64..1e3) {
        let back = spec.eta(spec.rho(u).unwrap()).unwrap();
        prop_assert!((back / u - 1.0).abs() < 1e-9, "u={} back={}", u, back);
    }

    #[test]
    fn renewal_function_is_nondecreasing(spec in spec_strategy(), t in 0.05f64..20.0, r in 1.05f64..3.0) {
        let a = renewal_function(&spec, t).unwrap();
        let b = renewal_function(&spec, t * r).unwrap();
        prop_assert!(a > 0.0 && b >= a);
    }

    #[test]
    fn lil_envelope_inverts_h(exp in 3.0f64..6.0) {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let t = 10f64.powf(exp);
        let g = lil_envelope(&spec, t, 5e-4, 1.01).unwrap();
        let h = lil_h(&spec, g, 5e-4, 1.01).unwrap();
        prop_assert!((h / t - 1.0).abs() < 1e-8);
    }

    #[test]
    fn isotonic_fit_is_nonincreasing_and_keeps_the_mean(
        y in prop::collection::vec(-10.0f64..10.0, 1..40),
        seed in any::<u64>(),
    ) {
        let w: Vec<f64> = (0..y.len()).map(|i| 1.0 + ((seed >> (i % 64)) & 3) as f64).collect();
        let fit = isotonic_nonincreasing(&y, &w);
        prop_assert!(fit.windows(2).all(|p| p[1] <= p[0] + 1e-12));
        let mean = |v: &[f64]| v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((mean(&fit) - mean(&y)).abs() < 1e-9 * (1.0 + mean(&y).abs()));
    }

    #[test]
    fn reports_recheck_and_detect_tampering(
        checks in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.0f64..2.0, relation_strategy()), 1..8),
        victim in any::<prop::sample::Index>(),
    ) {
        let mut report = TestReport::new("prop", Some(1), json!({"k": checks.len()}));
        for (i, (s, r, tol, rel)) in checks.iter().enumerate() {
            report.check(Check::new(format!("c{i}"), *s, *r, *tol, *rel));
        }
        let report = report.finish(false);
        prop_assert!(report.recheck());
        prop_assert_eq!(report.pass, report.checks.iter().all(|c| c.pass));
        let mut tampered = report.clone();
        let i = victim.index(tampered.checks.len());
        tampered.checks[i].pass = !tampered.checks[i].pass;
        prop_assert!(!tampered.recheck());
    }

    #[test]
    fn counting_inverse_is_a_nondecreasing_step_function(
        jumps in prop::collection::vec(0.0f64..2.0, 2..60),
        probes in prop::collection::vec(0.0f64..1.0, 1..20),
    ) {
        let dtau = 0.1;
        let mut values = vec![0.0];
        for j in &jumps {
            values.push(values.last().unwrap() + j + 1e-9);
        }
        let grid: Vec<f64> = (0..values.len()).map(|i| i as f64 * dtau).collect();
        let path = PathGrid::new(grid, values.clone(), SeedRecord { master: 0, index: 0 }).unwrap();
        let end = *values.last().unwrap();
        let mut t: Vec<f64> = probes.iter().map(|p| p * end).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        let s = invert_path(&path, &t).unwrap();
        prop_assert!(s.values.windows(2).all(|w| w[1] >= w[0]));
        for (tj, sj) in t.iter().zip(&s.values) {
            let count = values.iter().filter(|v| **v <= *tj).count();
            prop_assert_eq!(*sj, count as f64 * dtau);
        }
    }
}

#[test]
fn ensembles_do_not_depend_on_the_worker_count() {
    let spec = BernsteinSpec::tempered_stable(0.7, 2.0).unwrap();
    let draw = || ensemble(500, 42, |_, s| sample_increment(&spec, 0.5, &mut s.clock)).unwrap();
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(draw);
    let four = pool(4).install(draw);
    assert_eq!(one, four);
}
