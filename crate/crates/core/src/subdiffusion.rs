//! `X(t) = B(S(t))`, its stationary version, Feynman–Kac functionals and
//! change-of-measure weights.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::inverse::{invert_path, stationary_inverse_path_with};
use crate::rng::{PathStreams, SeedRecord};
use crate::subordinator::{simulate_path_with, PathGrid, SamplerOptions};

/// Named scalar functions usable as drift, volatility, potential or
/// payoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFn {
    Zero,
    Constant { value: f64 },
    Linear { slope: f64, intercept: f64 },
    /// `rate · (level − x)`.
    MeanReversion { rate: f64, level: f64 },
    /// `cos(freq · x)`.
    Cos { freq: f64 },
}

impl ScalarFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalarFn::Zero => 0.0,
            ScalarFn::Constant { value } => value,
            ScalarFn::Linear { slope, intercept } => slope * x + intercept,
            ScalarFn::MeanReversion { rate, level } => rate * (level - x),
            ScalarFn::Cos { freq } => (freq * x).cos(),
        }
    }

    /// Value when the function does not depend on `x`.
    pub fn as_constant(&self) -> Option<f64> {
        match *self {
            ScalarFn::Zero => Some(0.0),
            ScalarFn::Constant { value } => Some(value),
            ScalarFn::Linear { slope: 0.0, intercept } => Some(intercept),
            _ => None,
        }
    }
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ScalarFn::Zero => write!(f, "zero"),
            ScalarFn::Constant { value } => write!(f, "constant:{value}"),
            ScalarFn::Linear { slope, intercept } => write!(f, "linear:{slope},{intercept}"),
            ScalarFn::MeanReversion { rate, level } => write!(f, "mean_reversion:{rate},{level}"),
            ScalarFn::Cos { freq } => write!(f, "cos:{freq}"),
        }
    }
}

/// Parses `name[:p1,p2]`, e.g. `zero`, `constant:1`, `linear:2,0`,
/// `mean_reversion:1,0`, `cos:1`.
impl FromStr for ScalarFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let params: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("bad parameter in function `{s}`: {e}")))?
        };
        let arity = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("function `{name}` takes {n} parameter(s), got {}", params.len())))
            }
        };
        match name.trim() {
            "zero" => arity(0).map(|_| ScalarFn::Zero),
            "one" => arity(0).map(|_| ScalarFn::Constant { value: 1.0 }),
            "constant" => arity(1).map(|_| ScalarFn::Constant { value: params[0] }),
            "linear" => arity(2).map(|_| ScalarFn::Linear {
                slope: params[0],
                intercept: params[1],
            }),
            "mean_reversion" | "ornstein_uhlenbeck" => arity(2).map(|_| ScalarFn::MeanReversion {
                rate: params[0],
                level: params[1],
            }),
            "cos" => {
                if params.is_empty() {
                    Ok(ScalarFn::Cos { freq: 1.0 })
                } else {
                    arity(1).map(|_| ScalarFn::Cos { freq: params[0] })
                }
            }
            other => Err(Error::Config(format!(
                "unknown function `{other}` (known: zero, one, constant, linear, mean_reversion, cos)"
            ))),
        }
    }
}

/// `dV = μ(V) du + σ(V) dW`, `V(0) = x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub drift: ScalarFn,
    pub vol: ScalarFn,
    pub x0: f64,
}

impl DiffusionSpec {
    pub fn standard_bm(x0: f64) -> Self {
        Self {
            drift: ScalarFn::Zero,
            vol: ScalarFn::Constant { value: 1.0 },
            x0,
        }
    }
}

/// `X` and the clock `S` it runs on, sampled on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockedPath {
    pub x: PathGrid,
    pub s: PathGrid,
    /// Initial delay of the stationary version.
    pub t0: Option<f64>,
}

/// `X(t_j) = X(t_{j−1}) + √ΔS_j · Z_j` on top of `S` (or `S̃`), with the
/// clock, delay and Gaussian draws taken from separate streams.
pub fn sample_clocked_path(
    spec: &BernsteinSpec,
    t_grid: &[f64],
    dtau: f64,
    stationary: bool,
    opts: &SamplerOptions,
    streams: &mut PathStreams,
) -> Result<ClockedPath> {
    let t_last = *t_grid.last().ok_or_else(|| Error::Precondition("empty time grid".into()))?;
    let (mut s, t0) = if stationary {
        let (s, t0) = stationary_inverse_path_with(spec, t_grid, dtau, opts, &mut streams.delay, &mut streams.clock)?;
        (s, Some(t0))
    } else {
        let t_path = simulate_path_with(spec, t_last, dtau, opts, &mut streams.clock)?;
        (invert_path(&t_path, t_grid)?, None)
    };
    s.seed = streams.record;
    let x = brownian_on_clock(&s, &mut streams.noise)?;
    Ok(ClockedPath { x, s, t0 })
}

/// Brownian motion evaluated along a given clock path.
pub fn brownian_on_clock<R: Rng + ?Sized>(s: &PathGrid, rng: &mut R) -> Result<PathGrid> {
    let mut values = Vec::with_capacity(s.len());
    let (mut x, mut prev) = (0.0f64, 0.0f64);
    for &sj in &s.values {
        let z: f64 = rng.sample(StandardNormal);
        // a zero clock increment leaves x bit-for-bit unchanged
        x += (sj - prev).max(0.0).sqrt() * z;
        prev = sj;
        values.push(x);
    }
    PathGrid::new(s.grid.clone(), values, s.seed)
}

/// `X(t)` (or `X̃(t)`) on `t_grid`.
pub fn sample_x_path<R: Rng + ?Sized>(
    spec: &BernsteinSpec,
    t_grid: &[f64],
    dtau: f64,
    stationary: bool,
    rng: &mut R,
) -> Result<PathGrid> {
    let mut streams = PathStreams::from_rng(rng);
    sample_clocked_path(spec, t_grid, dtau, stationary, &SamplerOptions::default(), &mut streams).map(|p| p.x)
}

/// `Ỹ(n) = X̃(n+1) − X̃(n)` together with the clock increments
/// `S̃(n+1) − S̃(n)` that generated it.
#[derive(Debug, Clone)]
pub struct IncrementSeries {
    pub values: Vec<f64>,
    pub clock_increments: Vec<f64>,
    pub spec: BernsteinSpec,
    pub seed: SeedRecord,
    pub t0_draw: f64,
}

pub fn increments_sequence(
    spec: &BernsteinSpec,
    n: usize,
    dtau: f64,
    opts: &SamplerOptions,
    streams: &mut PathStreams,
) -> Result<IncrementSeries> {
    if n == 0 {
        return Err(Error::Precondition("increment series needs N >= 1".into()));
    }
    let grid: Vec<f64> = (0..=n).map(|k| k as f64).collect();
    let path = sample_clocked_path(spec, &grid, dtau, true, opts, streams)?;
    let diff = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).collect::<Vec<f64>>();
    Ok(IncrementSeries {
        values: diff(&path.x.values),
        clock_increments: diff(&path.s.values),
        spec: spec.clone(),
        seed: streams.record,
        t0_draw: path.t0.unwrap_or(0.0),
    })
}

/// Settings of one Feynman–Kac draw.
#[derive(Debug, Clone, Copy)]
pub struct FkOptions {
    /// Euler–Maruyama step on the internal clock.
    pub du: f64,
    /// Operational-time step of the subordinator path.
    pub dtau: f64,
    pub sampler: SamplerOptions,
}

/// One draw of `exp{−∫_0^{S(t)} h(V(u)) du} · g(V(S(t)))`.
pub fn sample_fk_functional(
    dspec: &DiffusionSpec,
    h: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    spec: &BernsteinSpec,
    t: f64,
    opts: &FkOptions,
    streams: &mut PathStreams,
) -> Result<f64> {
    if !(opts.du > 0.0 && t > 0.0) {
        return Err(Error::domain("Feynman-Kac draw needs du > 0 and t > 0"));
    }
    let t_path = simulate_path_with(spec, t, opts.dtau, &opts.sampler, &mut streams.clock)?;
    let s_end = invert_path(&t_path, &[t])?.values[0];
    let full = (s_end / opts.du).floor() as usize;
    let rest = s_end - full as f64 * opts.du;
    let mut v = dspec.x0;
    let mut h_prev = h(v);
    let mut integral = 0.0;
    let steps = full + usize::from(rest > 0.0);
    for k in 0..steps {
        let step = if k < full { opts.du } else { rest };
        let z: f64 = streams.noise.sample(StandardNormal);
        let sigma = dspec.vol.eval(v);
        v += dspec.drift.eval(v) * step + sigma * step.sqrt() * z;
        if !v.is_finite() {
            return Err(Error::numeric(format!("Euler-Maruyama iterate not finite at step {k}"), v));
        }
        let h_next = h(v);
        integral += 0.5 * (h_prev + h_next) * step;
        h_prev = h_next;
    }
    Ok((-integral).exp() * g(v))
}

/// `exp(−X(T)/2 − (ε + 1/8) S(T))`.
pub fn girsanov_weight(x_path: &PathGrid, s_path: &PathGrid, epsilon: f64, horizon: f64) -> Result<f64> {
    if x_path.grid != s_path.grid {
        return Err(Error::Precondition("X and S paths must share a grid".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::domain("epsilon must be nonnegative"));
    }
    let i = x_path
        .index_of(horizon)
        .ok_or_else(|| Error::Precondition(format!("grid does not contain T = {horizon}")))?;
    Ok((-0.5 * x_path.values[i] - (epsilon + 0.125) * s_path.values[i]).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_path(grid: &[f64], values: &[f64]) -> PathGrid {
        PathGrid::new(grid.to_vec(), values.to_vec(), SeedRecord::default()).unwrap()
    }

    #[test]
    fn flat_clock_freezes_x() {
        let s = grid_path(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.5, 0.5, 0.9]);
        let mut rng = crate::rng::substream(1, 0, 0);
        let x = brownian_on_clock(&s, &mut rng).unwrap();
        assert_eq!(x.values[0], 0.0);
        assert_eq!(x.values[1].to_bits(), x.values[2].to_bits());
        assert_ne!(x.values[2], x.values[3]);
    }

    #[test]
    fn girsanov_examples() {
        let g = [0.0, 1.0];
        let w = girsanov_weight(&grid_path(&g, &[0.0, 0.0]), &grid_path(&g, &[0.0, 0.0]), 0.0, 1.0).unwrap();
        assert_eq!(w, 1.0);
        let w = girsanov_weight(&grid_path(&g, &[0.0, 2.0]), &grid_path(&g, &[0.0, 4.0]), 0.0, 1.0).unwrap();
        assert!((w - (-1.5f64).exp()).abs() < 1e-15);
        let other = grid_path(&[0.0, 2.0], &[0.0, 4.0]);
        assert!(girsanov_weight(&grid_path(&g, &[0.0, 2.0]), &other, 0.0, 1.0).is_err());
    }

    #[test]
    fn fk_normalization() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let opts = FkOptions {
            du: 1e-2,
            dtau: 1e-2,
            sampler: SamplerOptions::default(),
        };
        let dspec = DiffusionSpec {
            drift: ScalarFn::MeanReversion { rate: 1.0, level: 0.0 },
            vol: ScalarFn::Constant { value: 0.7 },
            x0: 0.3,
        };
        for i in 0..20 {
            let mut s = PathStreams::new(4, i);
            let v = sample_fk_functional(&dspec, &|_| 0.0, &|_| 1.0, &spec, 1.0, &opts, &mut s).unwrap();
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn scalar_fn_parsing() {
        assert_eq!("zero".parse::<ScalarFn>().unwrap(), ScalarFn::Zero);
        assert_eq!("constant:2.5".parse::<ScalarFn>().unwrap(), ScalarFn::Constant { value: 2.5 });
        assert_eq!(
            "mean_reversion:1,0".parse::<ScalarFn>().unwrap(),
            ScalarFn::MeanReversion { rate: 1.0, level: 0.0 }
        );
        assert!("linear:1".parse::<ScalarFn>().is_err());
        assert!("exp".parse::<ScalarFn>().is_err());
        for f in [ScalarFn::Cos { freq: 2.0 }, ScalarFn::Linear { slope: 1.0, intercept: -1.0 }] {
            assert_eq!(f.to_string().parse::<ScalarFn>().unwrap(), f);
        }
    }

    #[test]
    fn increment_series_length() {
        let spec = BernsteinSpec::tempered_stable(0.5, 1.0).unwrap();
        let mut s = PathStreams::new(8, 0);
        let series = increments_sequence(&spec, 1, 0.01, &SamplerOptions::default(), &mut s).unwrap();
        assert_eq!(series.values.len(), 1);
        assert!(series.clock_increments[0] >= 0.0);
    }
}
