//! Constancy of the self-normalized weighted mean of `e^{X(t)}`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_paths, sample_paths, Check, PathSample, Relation, TestReport, SIGMA_BAND};
use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::stats::{compensated_sum, EstimateWithCI};

/// Effective sample sizes below `max(ESS_FLOOR_ABS, ESS_FLOOR_FRAC · n)`
/// make the test inconclusive.
const ESS_FLOOR_ABS: f64 = 100.0;
const ESS_FLOOR_FRAC: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `exp{−X(T)/2 − (ε + 1/8) S(T)}`.
    Girsanov,
    /// All weights 1 (control).
    Unit,
}

#[allow(clippy::too_many_arguments)]
pub fn run_measure_change_test(
    spec: &BernsteinSpec,
    n_paths: usize,
    epsilon: f64,
    horizon: f64,
    checkpoints: &[f64],
    dtau: f64,
    mode: WeightMode,
    seed: u64,
) -> Result<TestReport> {
    if checkpoints.iter().any(|&c| !(c > 0.0 && c <= horizon)) {
        return Err(Error::Precondition("checkpoints must lie in (0, T]".into()));
    }
    let mut times = checkpoints.to_vec();
    times.push(horizon);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let paths = sample_paths(spec, n_paths, &times, dtau, false, seed)?;
    let params = json!({
        "spec": spec.label(),
        "n_paths": n_paths,
        "epsilon": epsilon,
        "horizon": horizon,
        "checkpoints": checkpoints,
        "dtau": dtau,
        "weights": mode,
    });
    run_measure_change_test_from_paths("measure_change", &paths, &times, epsilon, checkpoints, mode, Some(seed), params)
}

/// `m(t) = Σ wᵢ e^{Xᵢ(t)} / Σ wᵢ` at each checkpoint. Each later
/// checkpoint is compared with the first through the paired ratio
/// estimator `Σ wᵢ (e^{Xᵢ(t)} − e^{Xᵢ(t₁)}) / Σ wᵢ`, whose delta-method
/// standard error accounts for the shared weights. `paths` are sampled at
/// `times`, the last of which is `T`.
#[allow(clippy::too_many_arguments)]
pub fn run_measure_change_test_from_paths(
    name: &str,
    paths: &[PathSample],
    times: &[f64],
    epsilon: f64,
    checkpoints: &[f64],
    mode: WeightMode,
    seed: Option<u64>,
    params: serde_json::Value,
) -> Result<TestReport> {
    check_paths(paths, times)?;
    if checkpoints.is_empty() {
        return Err(Error::Precondition("at least one checkpoint is needed".into()));
    }
    let idx = |t: f64| {
        times
            .iter()
            .position(|&s| s == t)
            .ok_or_else(|| Error::Precondition(format!("checkpoint {t} not among sampled times")))
    };
    let last = times.len() - 1;
    let weights: Vec<f64> = paths
        .iter()
        .map(|p| match mode {
            WeightMode::Girsanov => (-0.5 * p.x[last] - (epsilon + 0.125) * p.s[last]).exp(),
            WeightMode::Unit => 1.0,
        })
        .collect();
    let n = paths.len() as f64;
    let w_sum = compensated_sum(weights.iter().copied());
    let w_sq = compensated_sum(weights.iter().map(|w| w * w));
    let ess = w_sum * w_sum / w_sq;
    let mut report = TestReport::new(name, seed, params);
    report.scalar("effective sample size", ess);
    let floor = ESS_FLOOR_ABS.max(ESS_FLOOR_FRAC * n);
    let inconclusive = !(ess >= floor);
    if inconclusive {
        report.note(format!("effective sample size {ess:.1} below floor {floor:.1}; verdict withheld"));
    }
    let w_mean = w_sum / n;
    let ratio = |vals: &[f64]| -> Result<EstimateWithCI> {
        let r = compensated_sum(vals.iter().zip(&weights).map(|(v, w)| v * w)) / w_sum;
        // linearization of Σ w v / Σ w around r
        let lin: Vec<f64> = vals.iter().zip(&weights).map(|(v, w)| w * (v - r) / w_mean).collect();
        let lin_est = EstimateWithCI::from_samples(&lin)?;
        Ok(EstimateWithCI {
            mean: r,
            stderr: lin_est.stderr,
            n: paths.len(),
            level: lin_est.level,
        })
    };
    let first = idx(checkpoints[0])?;
    let base: Vec<f64> = paths.iter().map(|p| p.x[first].exp()).collect();
    let m_first = ratio(&base)?;
    report.estimate(format!("m({})", checkpoints[0]), m_first);
    for &c in &checkpoints[1..] {
        let j = idx(c)?;
        let vals: Vec<f64> = paths.iter().map(|p| p.x[j].exp()).collect();
        report.estimate(format!("m({c})"), ratio(&vals)?);
        let diff: Vec<f64> = vals.iter().zip(&base).map(|(v, b)| v - b).collect();
        let d = ratio(&diff)?;
        report.estimate(format!("m({c}) - m({})", checkpoints[0]), d);
        report.check(Check::new(
            format!("m({c}) equals m({})", checkpoints[0]),
            d.mean,
            0.0,
            SIGMA_BAND * d.stderr,
            Relation::WithinAbs,
        ));
    }
    if checkpoints.len() == 1 {
        report.note("single checkpoint: constancy holds trivially");
        report.check(Check::new("single checkpoint", 0.0, 0.0, 0.0, Relation::WithinAbs));
    }
    Ok(report.finish(inconclusive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Outcome;
    use crate::rng::substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// `S(t) = t`: plain Brownian motion, for which `m(t) = 1` exactly.
    fn bm(n: usize, times: &[f64]) -> Vec<PathSample> {
        let mut rng = substream(9, 0, 0);
        (0..n)
            .map(|_| {
                let (mut x, mut prev) = (0.0f64, 0.0f64);
                let xs = times
                    .iter()
                    .map(|&t| {
                        let z: f64 = rng.sample(StandardNormal);
                        x += (t - prev).sqrt() * z;
                        prev = t;
                        x
                    })
                    .collect();
                PathSample { x: xs, s: times.to_vec() }
            })
            .collect()
    }

    #[test]
    fn weighted_means_are_constant_and_unit_weights_grow() {
        let times = [0.5, 1.0, 2.0];
        let paths = bm(40_000, &times);
        let r = run_measure_change_test_from_paths(
            "w",
            &paths,
            &times,
            0.0,
            &times,
            WeightMode::Girsanov,
            None,
            json!({}),
        )
        .unwrap();
        assert!(r.pass, "{:?}", r.failed_checks().collect::<Vec<_>>());
        let r = run_measure_change_test_from_paths("u", &paths, &times, 0.0, &times, WeightMode::Unit, None, json!({}))
            .unwrap();
        assert_eq!(r.outcome, Outcome::Fail);
        assert!(r.recheck());
    }

    #[test]
    fn singleton_passes_and_tiny_ensembles_are_inconclusive() {
        let times = [1.0];
        let r = run_measure_change_test_from_paths(
            "s",
            &bm(500, &times),
            &times,
            0.0,
            &times,
            WeightMode::Girsanov,
            None,
            json!({}),
        )
        .unwrap();
        assert!(r.pass);
        let r = run_measure_change_test_from_paths(
            "s",
            &bm(20, &times),
            &times,
            0.0,
            &times,
            WeightMode::Girsanov,
            None,
            json!({}),
        )
        .unwrap();
        assert_eq!(r.outcome, Outcome::Inconclusive);
    }
}
