//! Mixing of the stationary increment sequence, by characteristic
//! functions and by Laplace-domain factorization of the clock.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Check, Relation, TestReport, SIGMA_BAND};
use crate::analytics::{joint_laplace_with, JointOptions};
use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::rng::{ensemble, substream, STREAM_AUX};
use crate::stats::{compensated_sum, isotonic_nonincreasing, EstimateWithCI};
use crate::subdiffusion::increments_sequence;
use crate::subordinator::SamplerOptions;

/// Fewest series for which bootstrap errors are computed.
pub const MIN_BOOTSTRAP_SERIES: usize = 20;

/// One realization of `Ỹ(0..N)` and of the clock increments behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingSeries {
    pub values: Vec<f64>,
    pub clock_increments: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingOptions {
    pub lags: Vec<usize>,
    /// Frequencies `(a₁, a₂)` of the joint characteristic function.
    pub a_grid: Vec<(f64, f64)>,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
}

impl Default for MixingOptions {
    fn default() -> Self {
        Self {
            lags: vec![1, 2, 4, 8, 16, 32, 64],
            a_grid: vec![(0.5, 0.5), (1.0, 1.0), (1.0, -1.0)],
            bootstrap_resamples: 200,
            bootstrap_seed: 0,
        }
    }
}

pub fn run_mixing_test(
    spec: &BernsteinSpec,
    n_series: usize,
    len: usize,
    opts: &MixingOptions,
    dtau: f64,
    seed: u64,
) -> Result<TestReport> {
    let series = sample_series(spec, n_series, len, dtau, seed)?;
    let opts = MixingOptions {
        bootstrap_seed: seed,
        ..opts.clone()
    };
    let params = json!({
        "spec": spec.label(),
        "n_series": n_series,
        "len": len,
        "options": opts,
        "dtau": dtau,
    });
    run_mixing_test_from_series("mixing", &series, &opts, Some(spec), Some(seed), params)
}

/// `n_series` stationary increment series of length `len`, series `i`
/// drawn from the substreams of `(seed, i)`.
pub fn sample_series(spec: &BernsteinSpec, n_series: usize, len: usize, dtau: f64, seed: u64) -> Result<Vec<MixingSeries>> {
    let sampler = SamplerOptions::default();
    ensemble(n_series, seed, |_, streams| {
        let s = increments_sequence(spec, len, dtau, &sampler, streams)?;
        Ok(MixingSeries {
            values: s.values,
            clock_increments: s.clock_increments,
        })
    })
}

/// `φ_joint − φ₁φ₂` from per-series factors over the chosen indices.
fn dependence(z0: &[Complex64], zn: &[Complex64], idx: impl Iterator<Item = usize>) -> Complex64 {
    let (mut j, mut a, mut b, mut n) = (Complex64::default(), Complex64::default(), Complex64::default(), 0usize);
    for i in idx {
        j += z0[i] * zn[i];
        a += z0[i];
        b += zn[i];
        n += 1;
    }
    let n = n as f64;
    j / n - (a / n) * (b / n)
}

/// For each lag `n` and frequency `a`:
/// `D(n, a) = |Ê e^{i(a₁Ỹ(0)+a₂Ỹ(n))} − Ê e^{ia₁Ỹ(0)} Ê e^{ia₂Ỹ(n)}|` with
/// bootstrap scale `σ(n, a)`, the root-mean-square deviation of the
/// resampled complex difference. Pass iff `max_a D ≤ 3σ` at the largest
/// lag, each `D(·, a)` stays within `3σ` of its nonincreasing isotonic
/// fit, and, when `spec` is given, the empirical clock transform
/// `Ê e^{−c₁ΔS̃(0) − c₂ΔS̃(n)}` at the largest lag matches both the joint
/// oracle and the product of marginals, with `c = a²/2`.
pub fn run_mixing_test_from_series(
    name: &str,
    series: &[MixingSeries],
    opts: &MixingOptions,
    spec: Option<&BernsteinSpec>,
    seed: Option<u64>,
    params: serde_json::Value,
) -> Result<TestReport> {
    if series.len() < MIN_BOOTSTRAP_SERIES {
        return Err(Error::Config(format!(
            "mixing test needs at least {MIN_BOOTSTRAP_SERIES} series for the bootstrap, got {}",
            series.len()
        )));
    }
    if opts.lags.is_empty() || opts.a_grid.is_empty() || opts.bootstrap_resamples < 2 {
        return Err(Error::Config("mixing test needs lags, frequencies and at least 2 resamples".into()));
    }
    let mut lags = opts.lags.clone();
    lags.sort_unstable();
    lags.dedup();
    let max_lag = *lags.last().unwrap();
    if series.iter().any(|s| s.values.len() < max_lag + 2) {
        return Err(Error::Precondition(format!("series length must exceed largest lag + 1 = {}", max_lag + 1)));
    }
    let n = series.len();
    let mut rng = substream(opts.bootstrap_seed, u64::MAX, STREAM_AUX);
    let draws: Vec<Vec<usize>> = (0..opts.bootstrap_resamples)
        .map(|_| (0..n).map(|_| rng.random_range(0..n)).collect())
        .collect();

    let mut report = TestReport::new(name, seed, params);
    report.note("isotonic trend checks are a heuristic power check: no mixing rate is assumed");
    for (k, &(a1, a2)) in opts.a_grid.iter().enumerate() {
        let z0: Vec<Complex64> = series.iter().map(|s| Complex64::from_polar(1.0, a1 * s.values[0])).collect();
        let mut d = Vec::with_capacity(lags.len());
        let mut sigma = Vec::with_capacity(lags.len());
        for &lag in &lags {
            let zn: Vec<Complex64> = series
                .iter()
                .map(|s| Complex64::from_polar(1.0, a2 * s.values[lag]))
                .collect();
            let full = dependence(&z0, &zn, 0..n);
            let boot: Vec<Complex64> = draws.iter().map(|b| dependence(&z0, &zn, b.iter().copied())).collect();
            let centre = boot.iter().sum::<Complex64>() / boot.len() as f64;
            let var = compensated_sum(boot.iter().map(|z| (z - centre).norm_sqr())) / (boot.len() - 1) as f64;
            report.scalar(format!("D(lag={lag}, a=({a1},{a2}))"), full.norm());
            report.scalar(format!("bootstrap sigma(lag={lag}, a=({a1},{a2}))"), var.sqrt());
            d.push(full.norm());
            sigma.push(var.sqrt());
        }
        let last = lags.len() - 1;
        report.check(Check::new(
            format!("a#{k}=({a1},{a2}): D at lag {max_lag} within noise"),
            d[last],
            0.0,
            SIGMA_BAND * sigma[last],
            Relation::AtMost,
        ));
        let weights: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s).max(f64::MIN_POSITIVE)).collect();
        let fit = isotonic_nonincreasing(&d, &weights);
        let worst = d
            .iter()
            .zip(&fit)
            .zip(&sigma)
            .map(|((x, f), s)| (x - f).abs() / s)
            .fold(0.0, f64::max);
        report.check(Check::new(
            format!("a#{k}=({a1},{a2}): D nonincreasing in lag up to noise"),
            worst,
            SIGMA_BAND,
            0.0,
            Relation::AtMost,
        ));
    }

    if let Some(spec) = spec {
        laplace_route(&mut report, spec, series, opts, max_lag)?;
    }
    Ok(report.finish(false))
}

fn laplace_route(
    report: &mut TestReport,
    spec: &BernsteinSpec,
    series: &[MixingSeries],
    opts: &MixingOptions,
    lag: usize,
) -> Result<()> {
    let mut pairs: Vec<(f64, f64)> = opts.a_grid.iter().map(|(a1, a2)| (0.5 * a1 * a1, 0.5 * a2 * a2)).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    pairs.dedup();
    let jopts = JointOptions::default();
    let l = lag as f64;
    for (c1, c2) in pairs {
        let samples: Vec<f64> = series
            .iter()
            .map(|s| (-c1 * s.clock_increments[0] - c2 * s.clock_increments[lag]).exp())
            .collect();
        let est = EstimateWithCI::from_samples(&samples)?;
        let joint = joint_laplace_with(spec, &[c1, -c1, c2, -c2], &[0.0, 1.0, l, l + 1.0], true, &jopts)?;
        let m1 = joint_laplace_with(spec, &[c1, -c1], &[0.0, 1.0], true, &jopts)?;
        let m2 = joint_laplace_with(spec, &[c2, -c2], &[0.0, 1.0], true, &jopts)?;
        let product = m1.value * m2.value;
        let product_err = m1.err_estimate * m2.value + m2.err_estimate * m1.value;
        report.estimate(format!("clock transform c=({c1},{c2}), lag {lag}"), est);
        report.scalar(format!("joint oracle c=({c1},{c2}), lag {lag}"), joint.value);
        report.scalar(format!("product of marginals c=({c1},{c2})"), product);
        report.check(Check::new(
            format!("c=({c1},{c2}): clock transform matches joint oracle"),
            est.mean,
            joint.value,
            SIGMA_BAND * est.stderr.hypot(joint.err_estimate),
            Relation::WithinAbs,
        ));
        report.check(Check::new(
            format!("c=({c1},{c2}): clock transform factorizes at lag {lag}"),
            est.mean,
            product,
            SIGMA_BAND * est.stderr.hypot(product_err),
            Relation::WithinAbs,
        ));
    }
    Ok(())
}

pub fn run_stationarity_test(
    spec: &BernsteinSpec,
    n_series: usize,
    points: &[usize],
    dtau: f64,
    seed: u64,
) -> Result<TestReport> {
    let len = points.iter().copied().max().unwrap_or(0) + 1;
    let series = sample_series(spec, n_series, len, dtau, seed)?;
    let params = json!({
        "spec": spec.label(),
        "n_series": n_series,
        "points": points,
        "dtau": dtau,
    });
    run_stationarity_test_from_series("stationarity", &series, points, spec.mean_t1(), Some(seed), params)
}

/// Pass iff the mean clock increment `S̃(n+1) − S̃(n)` is within 3 stderr
/// of `1/μ` at every `n` in `points`.
pub fn run_stationarity_test_from_series(
    name: &str,
    series: &[MixingSeries],
    points: &[usize],
    mu: f64,
    seed: Option<u64>,
    params: serde_json::Value,
) -> Result<TestReport> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Unsupported("stationary increments need a finite mean E T(1)".into()));
    }
    if points.is_empty() || series.iter().any(|s| points.iter().any(|&p| p >= s.clock_increments.len())) {
        return Err(Error::Precondition("every point must index a clock increment".into()));
    }
    let mut report = TestReport::new(name, seed, params);
    for &p in points {
        let incr: Vec<f64> = series.iter().map(|s| s.clock_increments[p]).collect();
        let est = EstimateWithCI::from_samples(&incr)?;
        report.estimate(format!("E[S~({}) - S~({p})]", p + 1), est);
        report.check(Check::sigma_band(format!("increment {p} has mean 1/mu"), &est, 1.0 / mu));
    }
    Ok(report.finish(false))
}
