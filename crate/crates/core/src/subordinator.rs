//! Samplers for subordinator increments and paths.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::bernstein::{BernsteinKind, BernsteinSpec};
use crate::error::{Error, Result};
use crate::rng::SeedRecord;

/// Values sampled on a strictly increasing grid of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: SeedRecord,
}

impl PathGrid {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, seed: SeedRecord) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Precondition(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("grid must be strictly increasing".into()));
        }
        Ok(Self { grid, values, seed })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().unwrap_or(&f64::NAN)
    }

    /// Nonnegative start and nondecreasing values.
    pub fn is_subordinator_like(&self) -> bool {
        self.values.first().is_some_and(|&v| v >= 0.0) && self.values.windows(2).all(|w| w[1] >= w[0])
    }

    /// Index of the grid point equal to `t` up to relative rounding.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        let i = self.grid.partition_point(|&g| g < t - tol);
        (i < self.grid.len() && (self.grid[i] - t).abs() <= tol).then_some(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    /// Proposal cap for tempered-stable rejection.
    pub max_trials: u64,
    /// Jump-size threshold of the compound-Poisson scheme.
    pub cutoff: f64,
    /// Cap on the number of grid steps of one path.
    pub max_steps: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            max_trials: 1_000_000,
            cutoff: 1e-4,
            max_steps: 50_000_000,
        }
    }
}

/// One draw of `X` with `E e^{−uX} = e^{−u^α}` (Kanter's representation).
pub fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = std::f64::consts::PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    let ln_x = (alpha * u).sin().ln() - u.sin().ln() / alpha
        + (1.0 - alpha) / alpha * (((1.0 - alpha) * u).sin().ln() - e.ln());
    ln_x.exp()
}

/// One draw of `T(dt)`.
pub fn sample_increment<R: Rng + ?Sized>(spec: &BernsteinSpec, dt: f64, rng: &mut R) -> Result<f64> {
    sample_increment_with(spec, dt, &SamplerOptions::default(), rng)
}

pub fn sample_increment_with<R: Rng + ?Sized>(
    spec: &BernsteinSpec,
    dt: f64,
    opts: &SamplerOptions,
    rng: &mut R,
) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("increment length must be positive, got {dt}")));
    }
    match spec.kind() {
        BernsteinKind::Stable { alpha } => Ok(dt.powf(1.0 / alpha) * standard_stable(*alpha, rng)),
        BernsteinKind::TemperedStable { alpha, temper } => {
            let scale = dt.powf(1.0 / alpha);
            for _ in 0..opts.max_trials {
                let x = scale * standard_stable(*alpha, rng);
                let v: f64 = rng.random();
                if v <= (-temper * x).exp() {
                    return Ok(x);
                }
            }
            Err(Error::Sampling(format!(
                "tempered-stable rejection exceeded {} trials (acceptance e^-{:.3}); use a smaller step",
                opts.max_trials,
                temper.powf(*alpha) * dt
            )))
        }
        _ => Ok(sample_path_general(spec, dt, opts.cutoff, rng)?.last_value()),
    }
}

/// Inverse of the restricted tail: the `x ≥ cutoff` with `ν(x,∞) = target`.
fn invert_tail(spec: &BernsteinSpec, target: f64, cutoff: f64) -> Result<f64> {
    if let BernsteinKind::Stable { alpha } = spec.kind() {
        let base = spec.levy_tail(cutoff)?;
        return Ok(cutoff * (target / base).powf(-1.0 / alpha));
    }
    let mut lo = cutoff;
    let mut hi = cutoff * 2.0;
    while spec.levy_tail(hi)? > target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::numeric("jump-size inversion failed to bracket", target));
        }
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if spec.levy_tail(m.exp())? > target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Compound-Poisson path: jumps above `cutoff` at their exact event times
/// plus the small-jump mean `∫_0^{cutoff} x ν(dx)` as linear drift.
///
/// The grid holds `0`, every jump time and `tau_horizon`; values are the
/// path immediately after each grid time.
pub fn sample_path_general<R: Rng + ?Sized>(
    spec: &BernsteinSpec,
    tau_horizon: f64,
    cutoff: f64,
    rng: &mut R,
) -> Result<PathGrid> {
    if !(tau_horizon > 0.0 && cutoff > 0.0) {
        return Err(Error::domain("horizon and cutoff must be positive"));
    }
    let rate = spec.levy_tail(cutoff)?;
    let slope = spec.small_jump_mean(cutoff)?;
    let mut grid = vec![0.0];
    let mut values = vec![0.0];
    let mut jumps = 0.0;
    if rate > 0.0 {
        let mut tau = 0.0;
        loop {
            let gap: f64 = rng.sample::<f64, _>(Exp1) / rate;
            tau += gap;
            if tau >= tau_horizon {
                break;
            }
            let v: f64 = rng.sample(Open01);
            jumps += invert_tail(spec, v * rate, cutoff)?;
            if tau > *grid.last().unwrap() {
                grid.push(tau);
                values.push(slope * tau + jumps);
            } else {
                *values.last_mut().unwrap() = slope * tau + jumps;
            }
        }
    }
    grid.push(tau_horizon);
    values.push(slope * tau_horizon + jumps);
    PathGrid::new(grid, values, SeedRecord::default())
}

/// `T` on `τ_i = i·dtau`, extended until the first value above `t_horizon`.
pub fn simulate_path<R: Rng + ?Sized>(
    spec: &BernsteinSpec,
    t_horizon: f64,
    dtau: f64,
    rng: &mut R,
) -> Result<PathGrid> {
    simulate_path_with(spec, t_horizon, dtau, &SamplerOptions::default(), rng)
}

pub fn simulate_path_with<R: Rng + ?Sized>(
    spec: &BernsteinSpec,
    t_horizon: f64,
    dtau: f64,
    opts: &SamplerOptions,
    rng: &mut R,
) -> Result<PathGrid> {
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(Error::domain(format!("dtau must be positive, got {dtau}")));
    }
    let mut grid = vec![0.0];
    let mut values = vec![0.0];
    let mut acc = 0.0;
    while acc <= t_horizon {
        if values.len() > opts.max_steps {
            return Err(Error::Sampling(format!(
                "path did not pass {t_horizon} within {} steps",
                opts.max_steps
            )));
        }
        acc += sample_increment_with(spec, dtau, opts, rng)?;
        values.push(acc);
        grid.push((values.len() - 1) as f64 * dtau);
    }
    Ok(PathGrid { grid, values, seed: SeedRecord::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::LevyTail;
    use crate::rng::substream;

    #[test]
    fn path_grid_validation() {
        assert!(PathGrid::new(vec![0.0, 1.0], vec![0.0], SeedRecord::default()).is_err());
        assert!(PathGrid::new(vec![0.0, 0.0], vec![0.0, 1.0], SeedRecord::default()).is_err());
        let p = PathGrid::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.2, 0.2], SeedRecord::default()).unwrap();
        assert!(p.is_subordinator_like());
        assert_eq!(p.index_of(0.5), Some(1));
        assert_eq!(p.index_of(0.7), None);
    }

    #[test]
    fn simulate_path_passes_horizon() {
        let spec = BernsteinSpec::tempered_stable(0.5, 1.0).unwrap();
        let mut rng = substream(1, 0, 0);
        let p = simulate_path(&spec, 3.0, 0.01, &mut rng).unwrap();
        assert!(p.is_subordinator_like());
        assert!(p.last_value() > 3.0);
        assert!(p.values[p.len() - 2] <= 3.0);
        let mut rng = substream(1, 0, 0);
        assert_eq!(p, simulate_path(&spec, 3.0, 0.01, &mut rng).unwrap());
    }

    #[test]
    fn tempered_rejection_cap() {
        let spec = BernsteinSpec::tempered_stable(0.5, 1.0).unwrap();
        let opts = SamplerOptions {
            max_trials: 3,
            ..Default::default()
        };
        let mut rng = substream(2, 0, 0);
        let r = sample_increment_with(&spec, 400.0, &opts, &mut rng);
        assert!(matches!(r, Err(Error::Sampling(_))));
    }

    #[test]
    fn truncated_tail_gives_pure_drift() {
        // tail vanishing above 0.5; cutoff above all mass
        let tail = LevyTail::new("truncated", |t| if t < 0.5 { t.powf(-0.5) - 0.5f64.powf(-0.5) } else { 0.0 });
        let spec = BernsteinSpec::tabulated(tail);
        let mut rng = substream(3, 0, 0);
        let p = sample_path_general(&spec, 2.0, 0.6, &mut rng).unwrap();
        let slope = spec.small_jump_mean(0.6).unwrap();
        assert_eq!(p.grid, vec![0.0, 2.0]);
        assert!((p.last_value() - 2.0 * slope).abs() < 1e-12);
    }
}
