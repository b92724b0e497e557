//! Monte-Carlo and numerical tests with auditable reports.
//!
//! Every decision in a [`TestReport`] is a [`Check`] holding the statistic,
//! its reference value and tolerance, so [`TestReport::recheck`] can
//! re-derive the verdict from the report alone.

mod lil;
mod lln;
mod martingale;
mod measure;
mod mixing;
mod msd;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::rng::ensemble;
use crate::stats::EstimateWithCI;
use crate::subdiffusion::sample_clocked_path;
use crate::subordinator::SamplerOptions;

pub use lil::{
    lil_window_ratios, run_lil_test, run_lil_test_from_paths, LilEnvelopeChoice, LilOptions, LIL_SPREAD_TOLERANCE,
};
pub use lln::{run_lln_test, run_lln_test_from_paths, LLN_RATIO_TOLERANCE};
pub use martingale::{run_martingale_suite, run_martingale_suite_from_paths};
pub use measure::{run_measure_change_test, run_measure_change_test_from_paths, WeightMode};
pub use mixing::{
    run_mixing_test, run_mixing_test_from_series, run_stationarity_test, run_stationarity_test_from_series, sample_series,
    MixingOptions, MixingSeries, MIN_BOOTSTRAP_SERIES,
};
pub use msd::{run_msd_test, run_msd_test_from_paths};

/// Version of the report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Width of every acceptance band, in standard errors.
pub const SIGMA_BAND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

/// How a check compares its statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|statistic − reference| ≤ tolerance`
    WithinAbs,
    /// `|statistic / reference − 1| ≤ tolerance`
    WithinRel,
    /// `statistic ≤ reference + tolerance`
    AtMost,
    /// `statistic ≥ reference − tolerance`
    AtLeast,
    /// `statistic > reference + tolerance`
    Exceeds,
}

impl Relation {
    pub fn holds(self, statistic: f64, reference: f64, tolerance: f64) -> bool {
        if !(statistic.is_finite() && reference.is_finite() && tolerance.is_finite()) {
            return false;
        }
        match self {
            Relation::WithinAbs => (statistic - reference).abs() <= tolerance,
            Relation::WithinRel => reference != 0.0 && (statistic / reference - 1.0).abs() <= tolerance,
            Relation::AtMost => statistic <= reference + tolerance,
            Relation::AtLeast => statistic >= reference - tolerance,
            Relation::Exceeds => statistic > reference + tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub statistic: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(label: impl Into<String>, statistic: f64, reference: f64, tolerance: f64, relation: Relation) -> Self {
        Self {
            label: label.into(),
            statistic,
            reference,
            tolerance,
            relation,
            pass: relation.holds(statistic, reference, tolerance),
        }
    }

    /// `|estimate − reference| ≤ 3 stderr`.
    pub fn sigma_band(label: impl Into<String>, est: &EstimateWithCI, reference: f64) -> Self {
        Self::new(label, est.mean, reference, SIGMA_BAND * est.stderr, Relation::WithinAbs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatValue {
    Estimate(EstimateWithCI),
    Scalar { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub label: String,
    pub value: StatValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema_version: u32,
    pub name: String,
    pub outcome: Outcome,
    pub pass: bool,
    pub statistics: Vec<Statistic>,
    pub checks: Vec<Check>,
    pub sigma_band: f64,
    pub seed: Option<u64>,
    /// Resolved parameters of the run.
    pub params: serde_json::Value,
    /// SHA-256 of `name` and the canonical JSON of `params`.
    pub config_hash: String,
    pub notes: Vec<String>,
    /// Wall-clock time; not serialized so that reports are reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

impl TestReport {
    pub fn new(name: impl Into<String>, seed: Option<u64>, params: serde_json::Value) -> Self {
        let name = name.into();
        let config_hash = config_hash(&name, &params);
        Self {
            schema_version: SCHEMA_VERSION,
            name,
            outcome: Outcome::Inconclusive,
            pass: false,
            statistics: Vec::new(),
            checks: Vec::new(),
            sigma_band: SIGMA_BAND,
            seed,
            params,
            config_hash,
            notes: Vec::new(),
            runtime: Duration::ZERO,
        }
    }

    /// Replaces the recorded parameters and rehashes them.
    pub fn with_params(mut self, params: serde_json::Value) -> Self {
        self.config_hash = config_hash(&self.name, &params);
        self.params = params;
        self
    }

    pub fn estimate(&mut self, label: impl Into<String>, est: EstimateWithCI) {
        self.statistics.push(Statistic {
            label: label.into(),
            value: StatValue::Estimate(est),
        });
    }

    pub fn scalar(&mut self, label: impl Into<String>, value: f64) {
        self.statistics.push(Statistic {
            label: label.into(),
            value: StatValue::Scalar { value },
        });
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Sets the verdict from the checks; `inconclusive` overrides it.
    pub fn finish(mut self, inconclusive: bool) -> Self {
        let all = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        self.outcome = if inconclusive {
            Outcome::Inconclusive
        } else if all {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
        self.pass = self.outcome == Outcome::Pass;
        self
    }

    /// Re-derives every check and the verdict from the stored numbers;
    /// `true` when they agree with what the report claims.
    pub fn recheck(&self) -> bool {
        let checks_ok = self
            .checks
            .iter()
            .all(|c| c.relation.holds(c.statistic, c.reference, c.tolerance) == c.pass);
        let all = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        let verdict_ok = match self.outcome {
            Outcome::Pass => all && self.pass,
            Outcome::Fail => !all && !self.pass,
            Outcome::Inconclusive => !self.pass,
        };
        checks_ok && verdict_ok && self.config_hash == config_hash(&self.name, &self.params)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(format!("report serialization: {e}")))
    }
}

fn config_hash(name: &str, params: &serde_json::Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(name.as_bytes());
    hasher.update([0u8]);
    hasher.update(params.to_string().as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `X` and `S` of one path at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
}

/// `n_paths` independent `(X, S)` samples at `times`, path `i` drawn from
/// the substreams of `(seed, i)`.
pub fn sample_paths(
    spec: &BernsteinSpec,
    n_paths: usize,
    times: &[f64],
    dtau: f64,
    stationary: bool,
    seed: u64,
) -> Result<Vec<PathSample>> {
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] <= 0.0 {
        return Err(Error::Precondition("times must be positive and increasing".into()));
    }
    let opts = SamplerOptions::default();
    ensemble(n_paths, seed, |_, streams| {
        let path = sample_clocked_path(spec, times, dtau, stationary, &opts, streams)?;
        Ok(PathSample {
            x: path.x.values,
            s: path.s.values,
        })
    })
}

pub(crate) fn column(paths: &[PathSample], f: impl Fn(&PathSample) -> f64) -> Vec<f64> {
    paths.iter().map(f).collect()
}

pub(crate) fn check_paths(paths: &[PathSample], times: &[f64]) -> Result<()> {
    if paths.len() < 2 {
        return Err(Error::Precondition("need at least 2 paths".into()));
    }
    if paths.iter().any(|p| p.x.len() != times.len() || p.s.len() != times.len()) {
        return Err(Error::Precondition("every path must carry one value per time".into()));
    }
    Ok(())
}
