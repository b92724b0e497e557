//! `X(t)/t → 0`: centred means and the decay of `E|X(t)/t|`.

use serde_json::json;

use super::{check_paths, column, sample_paths, Check, PathSample, Relation, TestReport};
use crate::bernstein::BernsteinSpec;
use crate::error::Result;
use crate::laplace::renewal_function;
use crate::stats::EstimateWithCI;

/// Relative band for the observed decade-to-decade ratio of `E|X(t)/t|`
/// against `√(U(t₂)/U(t₁)) · t₁/t₂`.
pub const LLN_RATIO_TOLERANCE: f64 = 0.25;

pub fn run_lln_test(spec: &BernsteinSpec, n_paths: usize, t_list: &[f64], dtau: f64, seed: u64) -> Result<TestReport> {
    let paths = sample_paths(spec, n_paths, t_list, dtau, false, seed)?;
    let predicted = t_list
        .windows(2)
        .map(|w| Ok((renewal_function(spec, w[1])? / renewal_function(spec, w[0])?).sqrt() * w[0] / w[1]))
        .collect::<Result<Vec<f64>>>()?;
    let params = json!({
        "spec": spec.label(),
        "n_paths": n_paths,
        "t_list": t_list,
        "dtau": dtau,
    });
    run_lln_test_from_paths("lln", &paths, t_list, Some(&predicted), Some(seed), params)
}

/// Pass iff `|mean X(t)/t| ≤ 3 stderr` at each `t`, the mean of `|X(t)/t|`
/// strictly decreases along `t_list`, and, when `predicted_ratios` is
/// given, each consecutive ratio of those means is within 25% of its
/// prediction.
pub fn run_lln_test_from_paths(
    name: &str,
    paths: &[PathSample],
    t_list: &[f64],
    predicted_ratios: Option<&[f64]>,
    seed: Option<u64>,
    params: serde_json::Value,
) -> Result<TestReport> {
    check_paths(paths, t_list)?;
    let mut report = TestReport::new(name, seed, params);
    let mut abs_means = Vec::with_capacity(t_list.len());
    for (j, &t) in t_list.iter().enumerate() {
        let scaled = EstimateWithCI::from_samples(&column(paths, |p| p.x[j] / t))?;
        report.estimate(format!("mean X({t})/t"), scaled);
        report.check(Check::sigma_band(format!("X({t})/t centred"), &scaled, 0.0));
        let abs = EstimateWithCI::from_samples(&column(paths, |p| (p.x[j] / t).abs()))?;
        report.estimate(format!("mean |X({t})/t|"), abs);
        abs_means.push(abs.mean);
    }
    if t_list.len() == 1 {
        report.note("single time: trend check is vacuous");
    }
    for (k, w) in t_list.windows(2).enumerate() {
        let ratio = abs_means[k + 1] / abs_means[k];
        report.check(Check::new(
            format!("E|X/t| decreases from t={} to t={}", w[0], w[1]),
            ratio,
            1.0,
            0.0,
            Relation::AtMost,
        ));
        if let Some(pred) = predicted_ratios {
            report.scalar(format!("predicted ratio t={}..{}", w[0], w[1]), pred[k]);
            report.check(Check::new(
                format!("decay ratio t={}..{} matches renewal scaling", w[0], w[1]),
                ratio,
                pred[k],
                LLN_RATIO_TOLERANCE,
                Relation::WithinRel,
            ));
        }
    }
    Ok(report.finish(false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_paths_fail() {
        let t_list = [1e2, 1e3, 1e4];
        let paths: Vec<PathSample> = (0..10)
            .map(|i| PathSample {
                x: t_list.iter().map(|t| t * (1.0 + 1e-3 * i as f64)).collect(),
                s: t_list.to_vec(),
            })
            .collect();
        let r = run_lln_test_from_paths("x=t", &paths, &t_list, None, None, json!({})).unwrap();
        assert!(!r.pass);
        assert!(r.recheck());
    }

    #[test]
    fn singleton_time_checks_centring_only() {
        let paths: Vec<PathSample> = [-1.0, 1.0, -2.0, 2.0]
            .iter()
            .map(|&x| PathSample { x: vec![x], s: vec![1.0] })
            .collect();
        let r = run_lln_test_from_paths("one", &paths, &[10.0], None, None, json!({})).unwrap();
        assert!(r.pass);
        assert_eq!(r.checks.len(), 1);
    }
}
