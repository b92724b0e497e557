//! Martingale checks for `X` and `exp{X − S/2}`.

use serde_json::json;

use super::{check_paths, column, sample_paths, Check, PathSample, TestReport};
use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::stats::EstimateWithCI;

/// Simulates `n_paths` paths and runs [`run_martingale_suite_from_paths`].
pub fn run_martingale_suite(
    spec: &BernsteinSpec,
    n_paths: usize,
    times: &[f64],
    dtau: f64,
    seed: u64,
) -> Result<TestReport> {
    let paths = sample_paths(spec, n_paths, times, dtau, false, seed)?;
    let params = json!({
        "spec": spec.label(),
        "n_paths": n_paths,
        "times": times,
        "dtau": dtau,
    });
    run_martingale_suite_from_paths("martingale", &paths, times, Some(seed), params)
}

/// For each consecutive pair `s < t` of `times` (with `s = 0` before the
/// first): (a) `E[X(t) − X(s)] = 0`, (b) `E[(X(t) − X(s)) tanh X(s)] = 0`,
/// and at each `t` (c) `E exp{X(t) − S(t)/2} = 1`, all within 3 stderr.
pub fn run_martingale_suite_from_paths(
    name: &str,
    paths: &[PathSample],
    times: &[f64],
    seed: Option<u64>,
    params: serde_json::Value,
) -> Result<TestReport> {
    if times.len() < 2 {
        return Err(Error::Precondition("martingale suite needs at least 2 times".into()));
    }
    check_paths(paths, times)?;
    let mut report = TestReport::new(name, seed, params);
    for j in 0..times.len() {
        let s_label = if j == 0 { "0".to_string() } else { times[j - 1].to_string() };
        let xs = |p: &PathSample| if j == 0 { 0.0 } else { p.x[j - 1] };
        let t = times[j];
        let incr = column(paths, |p| p.x[j] - xs(p));
        let a = EstimateWithCI::from_samples(&incr)?;
        report.estimate(format!("E[X({t}) - X({s_label})]"), a);
        report.check(Check::sigma_band(format!("(a) increment mean, s={s_label}, t={t}"), &a, 0.0));
        if j > 0 {
            let orth = column(paths, |p| (p.x[j] - p.x[j - 1]) * p.x[j - 1].tanh());
            let b = EstimateWithCI::from_samples(&orth)?;
            report.estimate(format!("E[(X({t}) - X({s_label})) tanh X({s_label})]"), b);
            report.check(Check::sigma_band(format!("(b) orthogonality, s={s_label}, t={t}"), &b, 0.0));
        }
        let expo = column(paths, |p| (p.x[j] - 0.5 * p.s[j]).exp());
        let c = EstimateWithCI::from_samples(&expo)?;
        report.estimate(format!("E exp(X({t}) - S({t})/2)"), c);
        report.check(Check::sigma_band(format!("(c) exponential martingale, t={t}"), &c, 1.0));
    }
    Ok(report.finish(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn brownian(n: usize, times: &[f64]) -> Vec<PathSample> {
        let mut rng = substream(5, 0, 0);
        (0..n)
            .map(|_| {
                let (mut x, mut prev) = (0.0f64, 0.0f64);
                let mut xs = Vec::new();
                for &t in times {
                    let z: f64 = rng.sample(StandardNormal);
                    x += (t - prev).sqrt() * z;
                    prev = t;
                    xs.push(x);
                }
                PathSample { x: xs, s: times.to_vec() }
            })
            .collect()
    }

    #[test]
    fn plain_brownian_motion_passes() {
        let times = [0.5, 1.0];
        let r = run_martingale_suite_from_paths("bm", &brownian(20_000, &times), &times, None, json!({})).unwrap();
        assert!(r.pass, "{:?}", r.failed_checks().collect::<Vec<_>>());
        assert!(r.recheck());
    }

    #[test]
    fn drift_fails_increment_check() {
        let times = [0.5, 1.0];
        let paths: Vec<PathSample> = brownian(2000, &times)
            .into_iter()
            .map(|p| PathSample {
                x: times.to_vec(),
                s: p.s,
            })
            .collect();
        let r = run_martingale_suite_from_paths("drift", &paths, &times, None, json!({})).unwrap();
        assert!(!r.pass);
        assert!(r.failed_checks().any(|c| c.label.starts_with("(a)")));
    }

    #[test]
    fn needs_two_times() {
        assert!(run_martingale_suite_from_paths("x", &brownian(10, &[1.0]), &[1.0], None, json!({})).is_err());
    }
}
