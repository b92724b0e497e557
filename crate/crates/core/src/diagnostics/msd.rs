//! Mean squared displacement against the renewal function.

use serde_json::json;

use super::{check_paths, column, sample_paths, Check, PathSample, TestReport};
use crate::bernstein::BernsteinSpec;
use crate::error::Result;
use crate::laplace::renewal_function;
use crate::stats::EstimateWithCI;

pub fn run_msd_test(spec: &BernsteinSpec, n_paths: usize, t_list: &[f64], dtau: f64, seed: u64) -> Result<TestReport> {
    let paths = sample_paths(spec, n_paths, t_list, dtau, false, seed)?;
    let renewal = t_list
        .iter()
        .map(|&t| renewal_function(spec, t))
        .collect::<Result<Vec<f64>>>()?;
    let params = json!({
        "spec": spec.label(),
        "n_paths": n_paths,
        "t_list": t_list,
        "dtau": dtau,
    });
    run_msd_test_from_paths("msd", &paths, t_list, &renewal, Some(seed), params)
}

/// Pass iff the sample mean of `X(t)²` is within 3 stderr of `renewal[j]`
/// at every `t_list[j]`.
pub fn run_msd_test_from_paths(
    name: &str,
    paths: &[PathSample],
    t_list: &[f64],
    renewal: &[f64],
    seed: Option<u64>,
    params: serde_json::Value,
) -> Result<TestReport> {
    check_paths(paths, t_list)?;
    let mut report = TestReport::new(name, seed, params);
    for (j, (&t, &u)) in t_list.iter().zip(renewal).enumerate() {
        let sq = EstimateWithCI::from_samples(&column(paths, |p| p.x[j] * p.x[j]))?;
        report.estimate(format!("E X({t})^2"), sq);
        report.scalar(format!("U({t})"), u);
        report.check(Check::sigma_band(format!("E X({t})^2 = U({t})"), &sq, u));
    }
    Ok(report.finish(false))
}
