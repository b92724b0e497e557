//! Moments of inverse-subordinator increments through the renewal measure
//!
//! ```text
//! E(S(b) − S(a))^k = k! ∫…∫_{a<x₁<…<x_k<b} U(dx_k − x_{k−1}) … U(dx₂ − x₁) U(dx₁)
//! ```
//!
//! and the stationary version with `U(dx₁)` replaced by `dx₁/μ`.

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::laplace::renewal_function;

/// `U` on a uniform grid starting at 0.
#[derive(Debug, Clone)]
pub struct RenewalMeasureTable {
    pub step: f64,
    pub u_values: Vec<f64>,
    pub mean_t1: f64,
    pub spec_label: String,
}

/// Default spacing of the renewal table.
pub const RENEWAL_STEP: f64 = 1.0 / 1024.0;

impl RenewalMeasureTable {
    pub fn new(spec: &BernsteinSpec, span: f64) -> Result<Self> {
        Self::with_step(spec, span, RENEWAL_STEP)
    }

    pub fn with_step(spec: &BernsteinSpec, span: f64, step: f64) -> Result<Self> {
        if !(span > 0.0 && step > 0.0) {
            return Err(Error::domain("renewal table needs positive span and step"));
        }
        let n = (span / step).ceil() as usize + 1;
        let mut u_values = Vec::with_capacity(n + 1);
        u_values.push(0.0);
        for k in 1..=n {
            u_values.push(renewal_function(spec, k as f64 * step)?);
        }
        for k in 1..u_values.len() {
            // inversion noise must not break monotonicity of the measure
            if u_values[k] < u_values[k - 1] {
                if u_values[k - 1] - u_values[k] > 1e-9 * u_values[k - 1].max(1.0) {
                    return Err(Error::numeric("renewal function decreased", u_values[k]));
                }
                u_values[k] = u_values[k - 1];
            }
        }
        Ok(Self {
            step,
            u_values,
            mean_t1: spec.mean_t1(),
            spec_label: spec.label(),
        })
    }

    pub fn span(&self) -> f64 {
        (self.u_values.len() - 1) as f64 * self.step
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.u_values.len()).map(|k| k as f64 * self.step).collect()
    }

    /// Linear interpolation of `U`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let pos = x / self.step;
        let k = (pos.floor() as usize).min(self.u_values.len() - 2);
        let frac = pos - k as f64;
        self.u_values[k] + frac * (self.u_values[k + 1] - self.u_values[k])
    }

    /// `E(S(z+n+1) − S(z+n))^k` (or the stationary limit), refined once
    /// and rejected when the two cell widths disagree by more than
    /// `rel_tol`.
    pub fn moment_increment(&self, z: f64, n: f64, k: u32, stationary_limit: bool, rel_tol: f64) -> Result<f64> {
        if !(1..=3).contains(&k) {
            return Err(Error::Precondition(format!("moment order must be 1..=3, got {k}")));
        }
        if !(z >= 0.0 && n >= 0.0) {
            return Err(Error::domain("z and n must be nonnegative"));
        }
        let a = z + n;
        // the stationary limit only reads U on [0, 1]
        let b = if stationary_limit { 1.0 } else { a + 1.0 };
        if b > self.span() + 1e-12 {
            return Err(Error::Precondition(format!(
                "renewal table covers [0, {}] but [0, {b}] is needed",
                self.span()
            )));
        }
        if stationary_limit && !self.mean_t1.is_finite() {
            return Err(Error::Unsupported("stationary limit needs E T(1) < ∞".into()));
        }
        let fine = self.nested(a, k, stationary_limit, 1);
        let coarse = self.nested(a, k, stationary_limit, 2);
        if (fine - coarse).abs() > rel_tol * fine.abs() {
            return Err(Error::numeric("renewal table too coarse for this moment", (fine - coarse).abs()));
        }
        Ok(fine)
    }

    fn nested(&self, a: f64, k: u32, stationary: bool, stride: usize) -> f64 {
        let cells = ((1.0 / (self.step * stride as f64)) - 1e-9).ceil() as usize;
        let w = 1.0 / cells as f64;
        let b = a + 1.0;
        let outer = |j: usize| -> f64 {
            if stationary {
                w / self.mean_t1
            } else {
                self.eval(a + (j + 1) as f64 * w) - self.eval(a + j as f64 * w)
            }
        };
        match k {
            1 => {
                if stationary {
                    1.0 / self.mean_t1
                } else {
                    self.eval(b) - self.eval(a)
                }
            }
            2 => {
                let mut acc = 0.0;
                for j in 0..cells {
                    let left = 1.0 - j as f64 * w;
                    let right = 1.0 - (j + 1) as f64 * w;
                    let inner = 0.5 * (self.eval(left) + self.eval(right));
                    acc += inner * outer(j);
                }
                2.0 * acc
            }
            _ => {
                // I₂(r) = ∫_0^r U(r − y) U(dy) at r = i·w
                let du: Vec<f64> = (0..cells)
                    .map(|l| self.eval((l + 1) as f64 * w) - self.eval(l as f64 * w))
                    .collect();
                let mut i2 = vec![0.0; cells + 1];
                for (i, slot) in i2.iter_mut().enumerate().skip(1) {
                    let r = i as f64 * w;
                    let mut acc = 0.0;
                    for (l, d) in du.iter().enumerate().take(i) {
                        let inner = 0.5 * (self.eval(r - l as f64 * w) + self.eval(r - (l + 1) as f64 * w));
                        acc += inner * d;
                    }
                    *slot = acc;
                }
                let mut acc = 0.0;
                for j in 0..cells {
                    acc += 0.5 * (i2[cells - j] + i2[cells - j - 1]) * outer(j);
                }
                6.0 * acc
            }
        }
    }
}

/// `E(S(z+n+1) − S(z+n))^k`, or `E(S̃(z+1) − S̃(z))^k` when
/// `stationary_limit`, with a freshly built renewal table.
pub fn moment_increment(spec: &BernsteinSpec, z: f64, n: f64, k: u32, stationary_limit: bool) -> Result<f64> {
    let span = if stationary_limit { 1.0 } else { z + n + 1.0 };
    RenewalMeasureTable::new(spec, span)?.moment_increment(z, n, k, stationary_limit, 1e-3)
}
