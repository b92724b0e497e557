//! Scale-free boundedness of `X(t)/g(t)` over decade windows.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_paths, sample_paths, Check, PathSample, Relation, TestReport};
use crate::analytics::LilEnvelope;
use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::stats::median;

/// Accepted spread `max/min − 1` of the per-decade medians.
pub const LIL_SPREAD_TOLERANCE: f64 = 0.5;

/// Normalization of `X(t)`: the iterated-logarithm envelope or one of the
/// mis-scaled controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LilEnvelopeChoice {
    Lil(LilEnvelope),
    /// `g(t) = t`.
    Linear,
    /// `g(t) = 1`.
    Constant,
}

impl LilEnvelopeChoice {
    pub fn values(&self, spec: &BernsteinSpec, times: &[f64]) -> Result<Vec<f64>> {
        times
            .iter()
            .map(|&t| match self {
                LilEnvelopeChoice::Lil(env) => env.g(spec, t),
                LilEnvelopeChoice::Linear => Ok(t),
                LilEnvelopeChoice::Constant => Ok(1.0),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilOptions {
    /// Left edge of the first decade window.
    pub start: f64,
    pub horizon: f64,
    pub points_per_decade: usize,
    pub envelope: LilEnvelopeChoice,
    pub dtau: f64,
}

impl Default for LilOptions {
    fn default() -> Self {
        Self {
            start: 1e3,
            horizon: 1e6,
            points_per_decade: 100,
            envelope: LilEnvelopeChoice::Lil(LilEnvelope::default()),
            dtau: 0.05,
        }
    }
}

impl LilOptions {
    /// Log-spaced grid on `[start, horizon]`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.start > std::f64::consts::E && self.horizon >= 10.0 * self.start && self.points_per_decade >= 1) {
            return Err(Error::Precondition(
                "need start > e, horizon ≥ 10·start and at least one point per decade".into(),
            ));
        }
        let decades = (self.horizon / self.start).log10();
        let n = (decades * self.points_per_decade as f64).ceil() as usize;
        let ratio = (self.horizon / self.start).ln() / n as f64;
        Ok((0..=n)
            .map(|k| if k == n { self.horizon } else { self.start * (ratio * k as f64).exp() })
            .collect())
    }
}

/// Decade windows `[start·10^k, start·10^{k+1}]` covered by `times`, as
/// index ranges.
fn decade_windows(times: &[f64]) -> Vec<(usize, usize)> {
    let start = times[0];
    let last = *times.last().unwrap();
    let mut windows = Vec::new();
    let mut lo = start;
    while lo * 10.0 <= last * (1.0 + 1e-12) {
        let hi = lo * 10.0;
        let i0 = times.partition_point(|&t| t < lo * (1.0 - 1e-12));
        let i1 = times.partition_point(|&t| t <= hi * (1.0 + 1e-12));
        windows.push((i0, i1));
        lo = hi;
    }
    windows
}

/// `R[d][i] = max_{t ∈ window d} sign·X_i(t) / g(t)`.
pub fn lil_window_ratios(paths: &[PathSample], times: &[f64], envelope: &[f64], sign: f64) -> Vec<Vec<f64>> {
    decade_windows(times)
        .into_iter()
        .map(|(i0, i1)| {
            paths
                .iter()
                .map(|p| {
                    (i0..i1)
                        .map(|j| sign * p.x[j] / envelope[j])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()
        })
        .collect()
}

pub fn run_lil_test(spec: &BernsteinSpec, n_paths: usize, opts: &LilOptions, seed: u64) -> Result<TestReport> {
    let times = opts.grid()?;
    let paths = sample_paths(spec, n_paths, &times, opts.dtau, false, seed)?;
    let envelope = opts.envelope.values(spec, &times)?;
    let params = json!({
        "spec": spec.label(),
        "n_paths": n_paths,
        "options": opts,
    });
    run_lil_test_from_paths("lil", &paths, &times, &envelope, Some(seed), params)
}

/// On `X` and on `−X`: the cross-path median of the per-decade window
/// maxima of `X/g` must be positive and finite in every decade, and
/// `max/min − 1` of those medians must not exceed 0.5.
pub fn run_lil_test_from_paths(
    name: &str,
    paths: &[PathSample],
    times: &[f64],
    envelope: &[f64],
    seed: Option<u64>,
    params: serde_json::Value,
) -> Result<TestReport> {
    check_paths(paths, times)?;
    if envelope.len() != times.len() || envelope.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::Precondition("envelope must be positive at every time".into()));
    }
    if decade_windows(times).is_empty() {
        return Err(Error::Precondition("times must span at least one decade".into()));
    }
    let mut report = TestReport::new(name, seed, params);
    for (side, sign) in [("X", 1.0), ("-X", -1.0)] {
        let medians: Vec<f64> = lil_window_ratios(paths, times, envelope, sign)
            .iter()
            .map(|r| median(r))
            .collect();
        for (d, m) in medians.iter().enumerate() {
            report.scalar(format!("median max {side}/g, decade {d}"), *m);
        }
        let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        report.check(Check::new(
            format!("{side}: smallest decade median positive"),
            lo,
            0.0,
            0.0,
            Relation::Exceeds,
        ));
        report.check(Check::new(
            format!("{side}: decade medians vary by at most 50%"),
            hi / lo - 1.0,
            LIL_SPREAD_TOLERANCE,
            0.0,
            Relation::AtMost,
        ));
    }
    Ok(report.finish(false))
}
