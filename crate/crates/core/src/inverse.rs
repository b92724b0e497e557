//! Inverse subordinator paths `S(t) = inf{τ : T(τ) > t}` and the
//! stationary modification driven by a size-biased initial delay.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, QuadOptions};
use crate::subordinator::{simulate_path_with, PathGrid, SamplerOptions};

/// Counting inverse on the grid: `S(t_j) = dtau · #{i : T(τ_i) ≤ t_j}`.
pub fn invert_path(t_path: &PathGrid, t_grid: &[f64]) -> Result<PathGrid> {
    invert_path_shifted(t_path, 0.0, t_grid)
}

/// Counting inverse of `shift + T(τ)`.
pub fn invert_path_shifted(t_path: &PathGrid, shift: f64, t_grid: &[f64]) -> Result<PathGrid> {
    if t_path.len() < 2 {
        return Err(Error::Precondition("subordinator path needs at least two points".into()));
    }
    let dtau = t_path.grid[1] - t_path.grid[0];
    let t_last = *t_grid.last().ok_or_else(|| Error::Precondition("empty time grid".into()))?;
    if !(shift + t_path.last_value() > t_last) {
        return Err(Error::Precondition(format!(
            "subordinator path ends at {} and does not cover t = {t_last}",
            shift + t_path.last_value()
        )));
    }
    let mut values = Vec::with_capacity(t_grid.len());
    let mut count = 0usize;
    for &t in t_grid {
        while count < t_path.len() && shift + t_path.values[count] <= t {
            count += 1;
        }
        values.push(count as f64 * dtau);
    }
    PathGrid::new(t_grid.to_vec(), values, t_path.seed)
}

const F0_NODES: usize = 4096;
const F0_TAIL_MASS: f64 = 1e-8;
const F0_LOWEST_NODE: f64 = 1e-16;

/// Monotone table of `F₀(x) = (1/μ) ∫_0^x ν(y,∞) dy` on logarithmic nodes
/// with shape-preserving cubic (Fritsch–Carlson) interpolation in `ln x`.
#[derive(Debug, Clone)]
pub struct F0Table {
    ln_x: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
    /// Power-law exponent of `F₀` below the first node.
    low_power: f64,
    pub mean_t1: f64,
    /// `1 − F₀` beyond the last node.
    pub tail_mass: f64,
    /// `|F₀(last) + tail_mass − 1|`, the quadrature defect of the table.
    pub table_error: f64,
}

impl F0Table {
    pub fn new(spec: &BernsteinSpec) -> Result<Self> {
        let mu = spec.mean_t1();
        if !mu.is_finite() {
            return Err(Error::Unsupported(format!(
                "{} has infinite mean E T(1); the stationary modification requires the first moment of the subordinator to be finite",
                spec.label()
            )));
        }
        let tail = |x: f64| spec.levy_tail(x).unwrap_or(0.0);
        let opts = QuadOptions::with_tol(1e-16, 1e-10);
        let mut x_hi = 1.0f64;
        let tail_mass = loop {
            let rest = integrate_to_infinity(tail, x_hi, opts)?.value / mu;
            if rest < F0_TAIL_MASS {
                break rest;
            }
            x_hi *= 2.0;
            if x_hi > 1e15 {
                return Err(Error::numeric("initial-delay tail does not decay", rest));
            }
        };
        let (a, b) = (F0_LOWEST_NODE.ln(), x_hi.ln());
        let ln_x: Vec<f64> = (0..F0_NODES)
            .map(|k| a + (b - a) * k as f64 / (F0_NODES - 1) as f64)
            .collect();
        let mut cdf = Vec::with_capacity(F0_NODES);
        cdf.push(spec.integrated_tail(F0_LOWEST_NODE)? / mu);
        for k in 1..F0_NODES {
            let piece = integrate(tail, ln_x[k - 1].exp(), ln_x[k].exp(), opts)?.value / mu;
            cdf.push(cdf[k - 1] + piece);
        }
        let last = cdf[F0_NODES - 1];
        let low_power = if cdf[0] > 0.0 && cdf[1] > cdf[0] {
            (cdf[1] / cdf[0]).ln() / (ln_x[1] - ln_x[0])
        } else {
            1.0
        };
        let slopes = pchip_slopes(&ln_x, &cdf);
        Ok(Self {
            ln_x,
            cdf,
            slopes,
            low_power,
            mean_t1: mu,
            tail_mass,
            table_error: (last + tail_mass - 1.0).abs(),
        })
    }

    /// Shared table for `spec`, built on first use; keyed by the spec label.
    pub fn cached(spec: &BernsteinSpec) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<String, Arc<F0Table>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = spec.label();
        if let Some(t) = cache.lock().expect("F0 cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(Self::new(spec)?);
        cache
            .lock()
            .expect("F0 cache poisoned")
            .insert(key, Arc::clone(&table));
        Ok(table)
    }

    pub fn nodes(&self) -> usize {
        self.ln_x.len()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let lx = x.ln();
        let n = self.ln_x.len();
        if lx <= self.ln_x[0] {
            return self.cdf[0] * ((lx - self.ln_x[0]) * self.low_power).exp();
        }
        if lx >= self.ln_x[n - 1] {
            return self.cdf[n - 1];
        }
        let k = (self.ln_x.partition_point(|&v| v <= lx) - 1).min(n - 2);
        self.hermite(k, lx)
    }

    fn hermite(&self, k: usize, lx: f64) -> f64 {
        let h = self.ln_x[k + 1] - self.ln_x[k];
        let s = (lx - self.ln_x[k]) / h;
        let (y0, y1) = (self.cdf[k], self.cdf[k + 1]);
        let (d0, d1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
    }

    /// Inverse CDF. Probabilities above the last node (mass below 1e-8)
    /// map to the last node.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.cdf.len();
        if p <= self.cdf[0] {
            return F0_LOWEST_NODE * (p / self.cdf[0]).powf(1.0 / self.low_power);
        }
        if p >= self.cdf[n - 1] {
            return self.ln_x[n - 1].exp();
        }
        let k = (self.cdf.partition_point(|&v| v <= p) - 1).min(n - 2);
        let (mut a, mut b) = (self.ln_x[k], self.ln_x[k + 1]);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if self.hermite(k, m) < p {
                a = m;
            } else {
                b = m;
            }
        }
        (0.5 * (a + b)).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d
}

/// One draw of the initial delay `T₀` with its table.
#[derive(Debug, Clone)]
pub struct InitialDelay {
    pub value: f64,
    pub cdf_table: Arc<F0Table>,
}

pub fn sample_t0<R: Rng + ?Sized>(spec: &BernsteinSpec, rng: &mut R) -> Result<InitialDelay> {
    let table = F0Table::cached(spec)?;
    Ok(InitialDelay {
        value: table.sample(rng),
        cdf_table: table,
    })
}

/// `S̃` on `t_grid`: inverse of `T₀ + T(τ)`.
pub fn stationary_inverse_path<R: Rng>(
    spec: &BernsteinSpec,
    t_grid: &[f64],
    dtau: f64,
    rng: &mut R,
) -> Result<PathGrid> {
    let mut delay = ChaCha8Rng::from_rng(rng);
    let mut clock = ChaCha8Rng::from_rng(rng);
    stationary_inverse_path_with(spec, t_grid, dtau, &SamplerOptions::default(), &mut delay, &mut clock)
        .map(|(p, _)| p)
}

/// `S̃` with the delay and the subordinator drawn from separate streams;
/// also returns the `T₀` draw.
pub fn stationary_inverse_path_with<R1, R2>(
    spec: &BernsteinSpec,
    t_grid: &[f64],
    dtau: f64,
    opts: &SamplerOptions,
    delay_rng: &mut R1,
    clock_rng: &mut R2,
) -> Result<(PathGrid, f64)>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let t0 = sample_t0(spec, delay_rng)?.value;
    let t_last = *t_grid.last().ok_or_else(|| Error::Precondition("empty time grid".into()))?;
    if t0 > t_last {
        let zeros = vec![0.0; t_grid.len()];
        return Ok((PathGrid::new(t_grid.to_vec(), zeros, Default::default())?, t0));
    }
    let t_path = simulate_path_with(spec, t_last - t0, dtau, opts, clock_rng)?;
    Ok((invert_path_shifted(&t_path, t0, t_grid)?, t0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, SeedRecord};
    use crate::stats::ks_one_sample;

    #[test]
    fn linear_subordinator_inverse() {
        let dtau = 1e-3;
        let n = 3000;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 * dtau).collect();
        let values: Vec<f64> = grid.iter().map(|t| 2.0 * t).collect();
        let t_path = PathGrid::new(grid, values, SeedRecord::default()).unwrap();
        let s = invert_path(&t_path, &[0.0, 0.5, 1.0]).unwrap();
        assert!((s.values[2] - 0.5).abs() <= dtau + 1e-12);
        assert!(s.values[0] <= dtau);
        assert!(invert_path(&t_path, &[10.0]).is_err());
    }

    #[test]
    fn stable_has_no_initial_delay() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let mut rng = substream(0, 0, 0);
        assert!(matches!(sample_t0(&spec, &mut rng), Err(Error::Unsupported(_))));
    }

    #[test]
    fn f0_table_round_trip() {
        let spec = BernsteinSpec::tempered_stable(0.5, 1.0).unwrap();
        let table = F0Table::cached(&spec).unwrap();
        assert!(table.table_error < 1e-7, "{}", table.table_error);
        assert!(table.cdf.windows(2).all(|w| w[1] >= w[0]));
        for p in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999] {
            assert!((table.cdf(table.quantile(p)) - p).abs() < 1e-10);
        }
        let mut rng = substream(5, 0, 0);
        let u: Vec<f64> = (0..10_000).map(|_| table.cdf(table.sample(&mut rng))).collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).1 > 0.01);
    }

    #[test]
    fn stationary_path_sits_below_plain_path() {
        let spec = BernsteinSpec::tempered_stable(0.5, 1.0).unwrap();
        let t_grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let mut clock = substream(9, 0, 1);
        let t_path = simulate_path_with(&spec, 10.0, 0.01, &SamplerOptions::default(), &mut clock).unwrap();
        let plain = invert_path(&t_path, &t_grid).unwrap();
        let shifted = invert_path_shifted(&t_path, 0.7, &t_grid).unwrap();
        assert!(plain.values.iter().zip(&shifted.values).all(|(p, s)| s <= p));
        assert!(shifted.is_subordinator_like());
    }
}
