//! Bernstein exponents of driftless subordinators.
//!
//! A model is fixed by its Lévy tail `ν(t,∞)`; the Laplace exponent is
//! `f(u) = ∫(1 − e^{−ux}) ν(dx) = u ∫ e^{−ux} ν(x,∞) dx`. Parametric
//! families evaluate `f` in closed form (also on the complex plane, which
//! the Talbot inversion needs); tabulated tails go through quadrature.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_log, QuadOptions};
use crate::special::{gamma_fn, upper_incomplete_gamma};

type TailFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A monotone Lévy tail `t ↦ ν(t,∞)` supplied as a function handle.
#[derive(Clone)]
pub struct LevyTail {
    label: String,
    func: Arc<TailFn>,
}

impl LevyTail {
    pub fn new(label: impl Into<String>, func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            func: Arc::new(func),
        }
    }

    /// Builds a tail from `(t, ν(t,∞))` samples, interpolated linearly in
    /// log–log coordinates and extrapolated with the end slopes.
    ///
    /// The left slope must be negative so that `ν(0+,∞) = ∞`.
    pub fn from_table(label: impl Into<String>, points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config("tail table needs at least two rows".into()));
        }
        let mut logs = Vec::with_capacity(points.len());
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Config("tail table abscissae must increase".into()));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::Config("tail table must be nonincreasing".into()));
            }
        }
        for &(t, v) in points {
            if !(t > 0.0 && v > 0.0) {
                return Err(Error::Config("tail table entries must be positive".into()));
            }
            logs.push((t.ln(), v.ln()));
        }
        let left_slope = (logs[1].1 - logs[0].1) / (logs[1].0 - logs[0].0);
        if left_slope >= 0.0 {
            return Err(Error::Config(
                "tail table must diverge at 0 (infinite Lévy measure)".into(),
            ));
        }
        let n = logs.len();
        let right_slope = (logs[n - 1].1 - logs[n - 2].1) / (logs[n - 1].0 - logs[n - 2].0);
        let func = move |t: f64| {
            let x = t.ln();
            let y = if x <= logs[0].0 {
                logs[0].1 + left_slope * (x - logs[0].0)
            } else if x >= logs[n - 1].0 {
                logs[n - 1].1 + right_slope * (x - logs[n - 1].0)
            } else {
                let i = logs.partition_point(|p| p.0 <= x) - 1;
                let (x0, y0) = logs[i];
                let (x1, y1) = logs[i + 1];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            };
            y.exp()
        };
        Ok(Self::new(label, func))
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.func)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for LevyTail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyTail").field("label", &self.label).finish()
    }
}

/// One atom `(β, weight)` of a finitely supported mixing measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingAtom {
    pub beta: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub enum BernsteinKind {
    /// `f(u) = u^α`.
    Stable { alpha: f64 },
    /// `f(u) = (u + temper)^α − temper^α`.
    TemperedStable { alpha: f64, temper: f64 },
    /// `ν(t,∞) = Σ wᵢ t^{−βᵢ}`, so `f(u) = Σ wᵢ Γ(1−βᵢ) u^{βᵢ}`.
    DistributedOrder { mixing: Vec<MixingAtom> },
    /// Arbitrary tail; `f` by quadrature.
    TabulatedLevy(LevyTail),
}

/// The exponent of a driftless subordinator with infinite Lévy measure.
#[derive(Debug, Clone)]
pub struct BernsteinSpec {
    kind: BernsteinKind,
    /// Always zero; kept so configurations can state it explicitly.
    drift: f64,
}

fn check_index(name: &str, a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0,1), got {a}")))
    }
}

impl BernsteinSpec {
    pub fn stable(alpha: f64) -> Result<Self> {
        check_index("alpha", alpha)?;
        Ok(Self {
            kind: BernsteinKind::Stable { alpha },
            drift: 0.0,
        })
    }

    pub fn tempered_stable(alpha: f64, temper: f64) -> Result<Self> {
        check_index("alpha", alpha)?;
        if !(temper > 0.0 && temper.is_finite()) {
            return Err(Error::Config(format!("temper must be positive, got {temper}")));
        }
        Ok(Self {
            kind: BernsteinKind::TemperedStable { alpha, temper },
            drift: 0.0,
        })
    }

    pub fn distributed_order(mixing: Vec<MixingAtom>) -> Result<Self> {
        if mixing.is_empty() {
            return Err(Error::Config("mixing list is empty".into()));
        }
        for atom in &mixing {
            check_index("mixing beta", atom.beta)?;
            if !(atom.weight > 0.0 && atom.weight.is_finite()) {
                return Err(Error::Config(format!("mixing weight must be positive, got {}", atom.weight)));
            }
        }
        Ok(Self {
            kind: BernsteinKind::DistributedOrder { mixing },
            drift: 0.0,
        })
    }

    pub fn tabulated(tail: LevyTail) -> Self {
        Self {
            kind: BernsteinKind::TabulatedLevy(tail),
            drift: 0.0,
        }
    }

    /// Stable exponent rescaled as `scale · u^α`, encoded as a one-atom
    /// distributed-order mixture (`weight = scale / Γ(1−α)`).
    pub fn scaled_stable(alpha: f64, scale: f64) -> Result<Self> {
        check_index("alpha", alpha)?;
        Self::distributed_order(vec![MixingAtom {
            beta: alpha,
            weight: scale / gamma_fn(1.0 - alpha),
        }])
    }

    pub fn kind(&self) -> &BernsteinKind {
        &self.kind
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Short human-readable identifier used in reports.
    pub fn label(&self) -> String {
        match &self.kind {
            BernsteinKind::Stable { alpha } => format!("stable(alpha={alpha})"),
            BernsteinKind::TemperedStable { alpha, temper } => {
                format!("tempered_stable(alpha={alpha},temper={temper})")
            }
            BernsteinKind::DistributedOrder { mixing } => {
                let atoms: Vec<String> = mixing.iter().map(|a| format!("{}:{}", a.beta, a.weight)).collect();
                format!("distributed_order({})", atoms.join(","))
            }
            BernsteinKind::TabulatedLevy(tail) => format!("tabulated({})", tail.label()),
        }
    }

    /// `f(u)` for `u > 0`.
    pub fn eval_exponent(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::domain(format!("exponent needs u > 0, got {u}")));
        }
        match &self.kind {
            BernsteinKind::TabulatedLevy(tail) => tabulated_exponent(tail, u),
            _ => Ok(self.exponent_closed(u)),
        }
    }

    fn exponent_closed(&self, u: f64) -> f64 {
        match &self.kind {
            BernsteinKind::Stable { alpha } => u.powf(*alpha),
            BernsteinKind::TemperedStable { alpha, temper } => {
                // (u+λ)^α − λ^α without cancellation for u ≪ λ
                let a = *alpha;
                let l = *temper;
                l.powf(a) * ((a * (u / l).ln_1p()).exp_m1())
            }
            BernsteinKind::DistributedOrder { mixing } => mixing
                .iter()
                .map(|m| m.weight * gamma_fn(1.0 - m.beta) * u.powf(m.beta))
                .sum(),
            BernsteinKind::TabulatedLevy(_) => unreachable!("closed form requested for tabulated tail"),
        }
    }

    /// Analytic continuation of `f` to the plane cut along the negative
    /// real axis; `None` for tabulated tails.
    pub fn exponent_complex(&self, u: Complex64) -> Option<Complex64> {
        match &self.kind {
            BernsteinKind::Stable { alpha } => Some(u.powf(*alpha)),
            BernsteinKind::TemperedStable { alpha, temper } => {
                Some((u + temper).powf(*alpha) - temper.powf(*alpha))
            }
            BernsteinKind::DistributedOrder { mixing } => Some(
                mixing
                    .iter()
                    .map(|m| u.powf(m.beta) * (m.weight * gamma_fn(1.0 - m.beta)))
                    .sum(),
            ),
            BernsteinKind::TabulatedLevy(_) => None,
        }
    }

    pub fn supports_complex(&self) -> bool {
        !matches!(self.kind, BernsteinKind::TabulatedLevy(_))
    }

    /// `ν(t,∞)` for `t > 0`.
    pub fn levy_tail(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("levy tail needs t > 0, got {t}")));
        }
        Ok(match &self.kind {
            BernsteinKind::Stable { alpha } => t.powf(-alpha) / gamma_fn(1.0 - alpha),
            BernsteinKind::TemperedStable { alpha, temper } => {
                let z = temper * t;
                if z > 700.0 {
                    0.0
                } else {
                    alpha / gamma_fn(1.0 - alpha) * temper.powf(*alpha) * upper_incomplete_gamma(-alpha, z)
                }
            }
            BernsteinKind::DistributedOrder { mixing } => {
                mixing.iter().map(|m| m.weight * t.powf(-m.beta)).sum()
            }
            BernsteinKind::TabulatedLevy(tail) => tail.eval(t),
        })
    }

    /// `∫_0^c x ν(dx)`, the mean rate of jumps smaller than `c`.
    ///
    /// By parts this is `∫_0^c ν(t,∞) dt − c ν(c,∞)`.
    pub fn small_jump_mean(&self, cutoff: f64) -> Result<f64> {
        if !(cutoff > 0.0) {
            return Err(Error::domain("cutoff must be positive"));
        }
        match &self.kind {
            BernsteinKind::Stable { alpha } => {
                Ok(alpha / (1.0 - alpha) * cutoff.powf(1.0 - alpha) / gamma_fn(1.0 - alpha))
            }
            BernsteinKind::DistributedOrder { mixing } => Ok(mixing
                .iter()
                .map(|m| m.weight * m.beta / (1.0 - m.beta) * cutoff.powf(1.0 - m.beta))
                .sum()),
            _ => {
                let head = self.integrated_tail(cutoff)?;
                Ok((head - cutoff * self.levy_tail(cutoff)?).max(0.0))
            }
        }
    }

    /// `∫_0^x ν(t,∞) dt`.
    pub fn integrated_tail(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let opts = QuadOptions::with_tol(1e-15, 1e-12);
        let lo = x * 1e-250;
        let q = integrate_log(|t| self.levy_tail(t).unwrap_or(0.0), lo, x, opts)?;
        // remaining sliver [0, lo] is negligible for any integrable tail
        Ok(q.value)
    }

    /// `μ = E T(1) = f′(0+)`; `+∞` when the derivative diverges.
    pub fn mean_t1(&self) -> f64 {
        match &self.kind {
            BernsteinKind::Stable { .. } | BernsteinKind::DistributedOrder { .. } => f64::INFINITY,
            BernsteinKind::TemperedStable { alpha, temper } => alpha * temper.powf(alpha - 1.0),
            BernsteinKind::TabulatedLevy(_) => self.mean_by_extrapolation(),
        }
    }

    /// Richardson-extrapolated forward differences `f(h)/h` at
    /// `h = 10^{−k}`, `k = 4..8`.
    fn mean_by_extrapolation(&self) -> f64 {
        let mut table: Vec<Vec<f64>> = Vec::new();
        for k in 4..=8 {
            let h = 10f64.powi(-k);
            let d = match self.eval_exponent(h) {
                Ok(v) => v / h,
                Err(_) => return f64::INFINITY,
            };
            let mut row = vec![d];
            if let Some(prev) = table.last() {
                for j in 1..=prev.len() {
                    let w = 10f64.powi(j as i32);
                    row.push((w * row[j - 1] - prev[j - 1]) / (w - 1.0));
                }
            }
            table.push(row);
        }
        let first = table[0][0];
        let last_raw = table[table.len() - 1][0];
        if !last_raw.is_finite() || last_raw > 10.0 * first {
            return f64::INFINITY;
        }
        // the raw forward differences are monotone in h; extrapolation can
        // only sharpen them
        *table.last().and_then(|r| r.last()).unwrap_or(&last_raw)
    }

    /// `ρ(u) = √(2 f(u))`.
    pub fn rho(&self, u: f64) -> Result<f64> {
        Ok((2.0 * self.eval_exponent(u)?).sqrt())
    }

    /// `η(v)`, the inverse of `ρ`: closed form for the parametric
    /// families, otherwise bisection in `log u` on a geometrically grown
    /// bracket.
    pub fn eta(&self, v: f64) -> Result<f64> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("eta needs v > 0, got {v}")));
        }
        let level = 0.5 * v * v;
        match &self.kind {
            BernsteinKind::Stable { alpha } => return Ok(level.powf(1.0 / alpha)),
            BernsteinKind::TemperedStable { alpha, temper } => {
                // (u+λ)^α = level + λ^α, written to avoid cancellation
                let la = temper.powf(*alpha);
                return Ok(temper * (((level / la).ln_1p()) / alpha).exp_m1());
            }
            _ => {}
        }
        let mut lo = 1.0f64;
        let mut hi = 1.0f64;
        while self.rho(lo)? > v {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::numeric("eta bracket underflow", lo));
            }
        }
        while self.rho(hi)? < v {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::numeric("eta bracket overflow", hi));
            }
        }
        let (mut a, mut b) = (lo.ln(), hi.ln());
        for _ in 0..300 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.rho(m.exp())? < v {
                a = m;
            } else {
                b = m;
            }
        }
        let u = (0.5 * (a + b)).exp();
        let resid = (self.rho(u)? - v).abs();
        if resid > 1e-10 * v {
            return Err(Error::numeric("eta bisection did not reach tolerance", resid));
        }
        Ok(u)
    }

    /// Finite-difference monotonicity and concavity check of `f` on a
    /// logarithmic grid.
    pub fn check_shape(&self, u_min: f64, u_max: f64, points: usize) -> Result<()> {
        let ratio = (u_max / u_min).ln() / (points.max(2) - 1) as f64;
        for i in 0..points.max(2) {
            let u = u_min * (ratio * i as f64).exp();
            let h = 1e-3 * u;
            let (fm, f0, fp) = (
                self.eval_exponent(u - h)?,
                self.eval_exponent(u)?,
                self.eval_exponent(u + h)?,
            );
            let d1 = (fp - fm) / (2.0 * h);
            let d2 = (fp - 2.0 * f0 + fm) / (h * h);
            if !(d1 > 0.0) {
                return Err(Error::numeric(format!("f not increasing at u={u}"), d1));
            }
            // second differences carry roundoff ~ ε f / h²
            let slack = 1e-6 * f0 / (u * u) + 8.0 * f64::EPSILON * f0 / (h * h);
            if d2 > slack {
                return Err(Error::numeric(format!("f not concave at u={u}"), d2));
            }
        }
        Ok(())
    }
}

fn tabulated_exponent(tail: &LevyTail, u: f64) -> Result<f64> {
    // f(u) = ∫ e^{−y} ν(y/u, ∞) dy after y = u x
    let opts = QuadOptions::with_tol(1e-300, 1e-11);
    let head = integrate_log(|y| (-y).exp() * tail.eval(y / u), 1e-200, 1.0, opts)?;
    let body = integrate(|y| (-y).exp() * tail.eval(y / u), 1.0, 60.0, opts)?;
    let value = head.value + body.value;
    let residual = head.error + body.error;
    if !value.is_finite() || residual > 1e-8 * value.abs() {
        return Err(Error::numeric("tabulated exponent quadrature did not converge", residual));
    }
    Ok(value)
}
