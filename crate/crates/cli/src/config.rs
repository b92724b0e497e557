//! Experiment configuration: a TOML file with `[spec]`, `[run]`, `[test]`
//! and `[io]` sections plus a top-level `seed`. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subdiff_core::{BernsteinSpec, Error, LevyTail, MixingAtom, Result};

/// Overrides `io.output_dir`.
pub const OUTPUT_DIR_ENV: &str = "SUBDIFF_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    pub spec: SpecSection,
    pub run: RunSection,
    pub test: TestSection,
    pub io: IoSection,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            spec: SpecSection::default(),
            run: RunSection::default(),
            test: TestSection::default(),
            io: IoSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Stable,
    TemperedStable,
    DistributedOrder,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecSection {
    pub kind: SpecKind,
    pub alpha: f64,
    pub temper: f64,
    /// `[beta, weight]` atoms of a distributed-order tail.
    pub mixing: Vec<[f64; 2]>,
    /// Two-column CSV `t, tail` for a tabulated tail.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_table: Option<PathBuf>,
    /// Must be zero; accepted so configurations can state it.
    pub drift: f64,
}

impl Default for SpecSection {
    fn default() -> Self {
        Self {
            kind: SpecKind::Stable,
            alpha: 0.5,
            temper: 1.0,
            mixing: Vec::new(),
            tail_table: None,
            drift: 0.0,
        }
    }
}

/// `start, start + step, …` up to and including `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.stop >= self.start) {
            return Err(Error::Config("grid needs step > 0 and stop >= start".into()));
        }
        let n = ((self.stop - self.start) / self.step * (1.0 + 1e-12)).floor() as usize;
        Ok((0..=n).map(|k| self.start + k as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_paths: usize,
    /// Explicit time points; `t_grid` is used when this is empty.
    pub times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<GridSpec>,
    /// Space points for densities.
    pub x: Vec<f64>,
    pub dtau: f64,
    pub du: f64,
    pub cutoff: f64,
    pub horizon: f64,
    pub stationary: bool,
    pub n_series: usize,
    pub series_len: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            times: Vec::new(),
            t_grid: None,
            x: vec![0.0, 0.5, 1.0, 2.0],
            dtau: 0.01,
            du: 1e-3,
            cutoff: 1e-4,
            horizon: 2.0,
            stationary: false,
            n_series: 10_000,
            series_len: 128,
        }
    }
}

impl RunSection {
    pub fn time_points(&self) -> Result<Vec<f64>> {
        if !self.times.is_empty() {
            Ok(self.times.clone())
        } else if let Some(g) = &self.t_grid {
            g.points()
        } else {
            Ok(vec![0.5, 1.0, 2.0])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestSection {
    pub epsilon: f64,
    pub checkpoints: Vec<f64>,
    /// Times of the law-of-large-numbers test.
    pub lln_times: Vec<f64>,
    /// LIL envelope constant and exponent.
    pub c: f64,
    pub gamma: f64,
    /// `lil`, `linear` or `constant`.
    pub envelope: String,
    pub lil_start: f64,
    pub lil_horizon: f64,
    pub points_per_decade: usize,
    /// `girsanov` or `unit`.
    pub weights: String,
    pub lags: Vec<usize>,
    pub a_grid: Vec<[f64; 2]>,
    pub bootstrap_resamples: usize,
    /// Increment indices of the stationarity test.
    pub points: Vec<usize>,
    /// Oracle inputs.
    pub theta: f64,
    pub thetas: Vec<f64>,
    pub taus: Vec<f64>,
    pub z: f64,
    pub n: f64,
    pub k: u32,
    pub stationary_limit: bool,
    pub u: f64,
    /// Feynman–Kac functions, as `name[:p1,p2]`.
    pub h: String,
    pub g: String,
    pub drift: String,
    pub vol: String,
    pub x0: f64,
}

impl Default for TestSection {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            checkpoints: vec![0.5, 1.0, 2.0],
            lln_times: vec![1e2, 1e3, 1e4],
            c: 5e-4,
            gamma: 1.01,
            envelope: "lil".into(),
            lil_start: 1e3,
            lil_horizon: 1e6,
            points_per_decade: 100,
            weights: "girsanov".into(),
            lags: vec![1, 2, 4, 8, 16, 32, 64],
            a_grid: vec![[0.5, 0.5], [1.0, 1.0], [1.0, -1.0]],
            bootstrap_resamples: 200,
            points: vec![0, 10, 50],
            theta: -0.5,
            thetas: vec![-0.5, -0.5],
            taus: vec![1.0, 2.0],
            z: 1.0,
            n: 64.0,
            k: 1,
            stationary_limit: false,
            u: 1.0,
            h: "zero".into(),
            g: "cos:1".into(),
            drift: "zero".into(),
            vol: "one".into(),
            x0: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    pub output_dir: PathBuf,
    /// Skip CSV/JSON files and print to stdout only.
    pub stdout_only: bool,
}

impl Default for IoSection {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            stdout_only: false,
        }
    }
}

/// Reads `path` (TOML, or JSON when the extension is `.json`) into a
/// table; a missing path gives an empty table. A JSON test report is
/// accepted too, and yields the configuration embedded in it.
pub fn load_table(path: Option<&Path>) -> Result<toml::Table> {
    let Some(path) = path else {
        return Ok(toml::Table::new());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(embedded) = value.pointer_mut("/params/config") {
            value = embedded.take();
        }
        serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        // typed parse first so that errors carry the line of the offending key
        toml::from_str::<SimConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Applies `section.key=value` (value in TOML syntax; bare words are read
/// as strings).
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config("empty override key".into()))?;
    let mut node = table;
    for p in parts {
        node = node
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a section")))?;
    }
    node.insert(leaf.to_string(), value);
    Ok(())
}

pub fn resolve(table: toml::Table) -> Result<SimConfig> {
    let mut cfg: SimConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.io.output_dir = PathBuf::from(dir);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("run.dtau", self.run.dtau),
            ("run.du", self.run.du),
            ("run.cutoff", self.run.cutoff),
            ("run.horizon", self.run.horizon),
            ("test.c", self.test.c),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        if self.test.gamma.is_nan() || self.test.gamma <= 1.0 {
            return Err(Error::Config(format!("test.gamma must exceed 1, got {}", self.test.gamma)));
        }
        if self.run.n_paths < 2 {
            return Err(Error::Config("run.n_paths must be at least 2".into()));
        }
        if self.spec.drift != 0.0 {
            return Err(Error::Config("spec.drift must be 0: only driftless subordinators are supported".into()));
        }
        Ok(())
    }

    pub fn bernstein(&self) -> Result<BernsteinSpec> {
        let s = &self.spec;
        match s.kind {
            SpecKind::Stable => BernsteinSpec::stable(s.alpha),
            SpecKind::TemperedStable => BernsteinSpec::tempered_stable(s.alpha, s.temper),
            SpecKind::DistributedOrder => BernsteinSpec::distributed_order(
                s.mixing
                    .iter()
                    .map(|&[beta, weight]| MixingAtom { beta, weight })
                    .collect(),
            ),
            SpecKind::Tabulated => {
                let path = s
                    .tail_table
                    .as_ref()
                    .ok_or_else(|| Error::Config("spec.tail_table is required for kind = tabulated".into()))?;
                Ok(BernsteinSpec::tabulated(read_tail_table(path)?))
            }
        }
    }

    /// The configuration as JSON, for embedding in reports. The `io`
    /// section is left out: where results go does not change them.
    pub fn to_json(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("configuration is always serializable");
        if let Some(map) = value.as_object_mut() {
            map.remove("io");
        }
        value
    }
}

fn read_tail_table(path: &Path) -> Result<LevyTail> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols.as_slice() {
            [a, b] => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(row) => rows.push(row),
            // a header row is allowed
            None if rows.is_empty() && i == 0 => {}
            None => return Err(Error::Config(format!("{}:{}: expected `t, tail`", path.display(), i + 1))),
        }
    }
    LevyTail::from_table(path.display().to_string(), &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = toml::from_str::<SimConfig>("seed = 3\n[run]\nn_pathz = 4\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_pathz") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn overrides_take_typed_values() {
        let mut t: toml::Table = toml::from_str("[run]\nn_paths = 10\n").unwrap();
        apply_override(&mut t, "run.n_paths=20").unwrap();
        apply_override(&mut t, "test.lags=[1,2]").unwrap();
        apply_override(&mut t, "spec.kind=tempered_stable").unwrap();
        let cfg = resolve(t).unwrap();
        assert_eq!(cfg.run.n_paths, 20);
        assert_eq!(cfg.test.lags, vec![1, 2]);
        assert_eq!(cfg.spec.kind, SpecKind::TemperedStable);
    }

    #[test]
    fn json_round_trip() {
        let cfg = SimConfig::default();
        let json = serde_json::to_string(&cfg.to_json()).unwrap();
        let table: toml::Table = serde_json::from_str(&json).unwrap();
        assert_eq!(resolve(table).unwrap().run, cfg.run);
    }

    #[test]
    fn grid_points() {
        let g = GridSpec { start: 0.5, stop: 2.0, step: 0.5 };
        assert_eq!(g.points().unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
    }
}
