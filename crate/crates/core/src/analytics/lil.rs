//! Envelope `g = h⁻¹` with `h(s) = c·L(s) / η(γ L(s) / s)`,
//! `L(s) = ln|ln s|`.

use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};

/// Distance from `|ln s| = 1` inside which `L(s) ≤ 0` makes `h` meaningless.
const DEGENERATE_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilEnvelope {
    pub c: f64,
    pub gamma: f64,
}

impl Default for LilEnvelope {
    fn default() -> Self {
        Self { c: 5e-4, gamma: 1.01 }
    }
}

impl LilEnvelope {
    pub fn new(c: f64, gamma: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("c must be positive, got {c}")));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::domain(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(Self { c, gamma })
    }

    pub fn h(&self, spec: &BernsteinSpec, s: f64) -> Result<f64> {
        lil_h(spec, s, self.c, self.gamma)
    }

    pub fn g(&self, spec: &BernsteinSpec, t: f64) -> Result<f64> {
        lil_envelope(spec, t, self.c, self.gamma)
    }
}

fn check_argument(s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::domain(format!("argument must be positive, got {s}")));
    }
    let l = s.ln().abs();
    if l <= 1.0 + DEGENERATE_BAND {
        return Err(Error::domain(format!("|ln {s}| ≤ 1: ln|ln s| is not positive")));
    }
    Ok(l.ln())
}

/// `h(s) = c ln|ln s| / η(γ ln|ln s| / s)`.
pub fn lil_h(spec: &BernsteinSpec, s: f64, c: f64, gamma: f64) -> Result<f64> {
    let env = LilEnvelope::new(c, gamma)?;
    let l = check_argument(s)?;
    let eta = spec.eta(env.gamma * l / s)?;
    Ok(env.c * l / eta)
}

fn bisect(mut lo: f64, mut hi: f64, increasing: bool, target: f64, h: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let below = h(mid)? < target;
        if below == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `g(t)` with `h(g(t)) = t`. For `t > e` the root is taken on the branch
/// where `h` increases to infinity; for `t < 1/e` on `(0, 1/e)`.
pub fn lil_envelope(spec: &BernsteinSpec, t: f64, c: f64, gamma: f64) -> Result<f64> {
    check_argument(t)?;
    let h = |s: f64| lil_h(spec, s, c, gamma);
    let e = std::f64::consts::E;
    if t > 1.0 {
        let left = e * (1.0 + 2.0 * DEGENERATE_BAND).exp();
        // h blows up at both ends of (e, ∞); golden search on ln s for the minimum
        let (mut a, mut b) = (left.ln(), left.ln() + 1.0);
        while h(b.exp())? < h((b - 0.5).exp())? {
            b += 1.0;
            if b > 700.0 {
                return Err(Error::numeric("no minimum of h found", b));
            }
        }
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = b - ratio * (b - a);
            let x2 = a + ratio * (b - a);
            if h(x1.exp())? < h(x2.exp())? {
                b = x2;
            } else {
                a = x1;
            }
            if b - a < 1e-14 {
                break;
            }
        }
        let s_min = (0.5 * (a + b)).exp();
        let h_min = h(s_min)?;
        if t < h_min {
            return Err(Error::domain(format!("t = {t} is below min h = {h_min}")));
        }
        let mut hi = s_min * 2.0;
        while h(hi)? < t {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::numeric("envelope bracket overflowed", hi));
            }
        }
        bisect(s_min, hi, true, t, h)
    } else {
        let right = (-1.0 - 2.0 * DEGENERATE_BAND).exp();
        let mut lo = right * 0.5;
        let increasing = h(lo)? < h(right * 0.9)?;
        let mut guard = 0;
        while (h(lo)? < t) != increasing {
            lo *= 0.5;
            guard += 1;
            if guard > 2000 || lo == 0.0 {
                return Err(Error::numeric("envelope bracket underflowed", lo));
            }
        }
        bisect(lo, right, increasing, t, h)
    }
}
