//! Numerical Laplace inversion and the transform-defined objects of an
//! inverse subordinator.
//!
//! | object | transform |
//! |---|---|
//! | density `s(x,t)` of `S(t)` | `f(u)/u · e^{−x f(u)}` |
//! | memory kernel `M(t)` | `1/f(u)` |
//! | renewal function `U(t) = E S(t)` | `1/(u f(u))` |
//! | `∫_0^t U` | `1/(u² f(u))` |
//!
//! Fixed Talbot (Abate–Valkó) is the primary inverter; it needs the
//! transform on a contour reaching into the left half-plane, which the
//! parametric exponents provide. Gaver–Stehfest only samples the real
//! axis and serves as the cross-check and as the fallback for tabulated
//! tails.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::bernstein::{BernsteinKind, BernsteinSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMethod {
    FixedTalbot,
    GaverStehfest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    CompletelyMonotone,
    General,
}

type ComplexFn<'a> = dyn Fn(Complex64) -> Complex64 + Send + Sync + 'a;
type RealFn<'a> = dyn Fn(f64) -> f64 + Send + Sync + 'a;

/// A Laplace transform `û`, evaluable on the real axis and, when
/// analytic continuation is available, on the complex plane.
pub struct TransformHandle<'a> {
    complex: Option<Box<ComplexFn<'a>>>,
    real: Box<RealFn<'a>>,
    pub regularity: Regularity,
    /// Abscissa to the right of every singularity; the Talbot contour is
    /// shifted by it.
    pub shift: f64,
}

impl<'a> TransformHandle<'a> {
    /// Transform with analytic continuation; the real evaluator is the
    /// restriction of the complex one.
    pub fn analytic(f: impl Fn(Complex64) -> Complex64 + Send + Sync + Clone + 'a) -> Self {
        let g = f.clone();
        Self {
            complex: Some(Box::new(f)),
            real: Box::new(move |u| g(Complex64::new(u, 0.0)).re),
            regularity: Regularity::CompletelyMonotone,
            shift: 0.0,
        }
    }

    /// Transform known only on the positive real axis.
    pub fn real_only(f: impl Fn(f64) -> f64 + Send + Sync + 'a) -> Self {
        Self {
            complex: None,
            real: Box::new(f),
            regularity: Regularity::CompletelyMonotone,
            shift: 0.0,
        }
    }

    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn eval_real(&self, u: f64) -> f64 {
        (self.real)(u)
    }

    pub fn eval_complex(&self, u: Complex64) -> Option<Complex64> {
        self.complex.as_ref().map(|f| f(u))
    }
}

/// Term counts and acceptance tolerance for the a-posteriori check.
#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    pub talbot_terms: usize,
    pub talbot_check_terms: usize,
    pub stehfest_terms: usize,
    pub stehfest_check_terms: usize,
    pub rel_tol: f64,
    /// Self-check tolerance for Gaver–Stehfest, whose double-precision
    /// accuracy bottoms out near 1e-7 relative.
    pub stehfest_rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            talbot_terms: 24,
            talbot_check_terms: 18,
            stehfest_terms: 14,
            stehfest_check_terms: 12,
            rel_tol: 1e-6,
            stehfest_rel_tol: 1e-5,
            abs_tol: 1e-9,
        }
    }
}

/// Largest Gaver–Stehfest order accepted in double precision; beyond it
/// the alternating coefficients swamp the transform values' roundoff.
pub const MAX_STEHFEST_TERMS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub value: f64,
    pub err_estimate: f64,
}

/// Precomputed fixed-Talbot quadrature for one time point:
/// `F(t) ≈ Σ Re(wₖ û(sₖ))`.
#[derive(Debug, Clone)]
pub struct TalbotContour {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl TalbotContour {
    pub fn new(t: f64, terms: usize, shift: f64) -> Self {
        let m = terms as f64;
        let r = 2.0 * m / (5.0 * t);
        let mut nodes = Vec::with_capacity(terms);
        let mut weights = Vec::with_capacity(terms);
        let s0 = Complex64::new(shift + r, 0.0);
        nodes.push(s0);
        weights.push(Complex64::new(0.5 * (s0.re * t).exp() * r / m, 0.0));
        for k in 1..terms {
            let theta = k as f64 * PI / m;
            let cot = 1.0 / theta.tan();
            let s = Complex64::new(shift + r * theta * cot, r * theta);
            let sigma = theta + (theta * cot - 1.0) * cot;
            let w = (s * t).exp() * Complex64::new(1.0, sigma) * (r / m);
            nodes.push(s);
            weights.push(w);
        }
        Self { nodes, weights }
    }

    pub fn apply(&self, mut f: impl FnMut(Complex64) -> Complex64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| (w * f(s)).re)
            .sum()
    }
}

/// Gaver–Stehfest weights `V_k`, `k = 1..=n`, for even `n`.
pub fn stehfest_coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    let fact = |k: usize| -> f64 { (1..=k).map(|i| i as f64).product() };
    (1..=n)
        .map(|k| {
            let lo = k.div_ceil(2);
            let hi = k.min(half);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += (j as f64).powi(half as i32) * fact(2 * j)
                    / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
            }
            if (k + half) % 2 == 1 {
                -acc
            } else {
                acc
            }
        })
        .collect()
}

fn stehfest(f: &TransformHandle<'_>, t: f64, n: usize) -> f64 {
    let a = LN_2 / t;
    stehfest_coefficients(n)
        .iter()
        .enumerate()
        .map(|(i, v)| v * f.eval_real((i + 1) as f64 * a))
        .sum::<f64>()
        * a
}

fn talbot(f: &TransformHandle<'_>, t: f64, terms: usize) -> Result<f64> {
    let eval = f.complex.as_ref().ok_or_else(|| {
        Error::Unsupported("fixed Talbot needs a transform analytic off the real axis".into())
    })?;
    Ok(TalbotContour::new(t, terms, f.shift).apply(eval))
}

/// Inverts `f` at `t`, checking the result against a second resolution.
pub fn invert_laplace(
    f: &TransformHandle<'_>,
    t: f64,
    method: InversionMethod,
    opts: &InversionOptions,
) -> Result<Inversion> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("inversion time must be positive, got {t}")));
    }
    let (primary, check) = match method {
        InversionMethod::FixedTalbot => (
            talbot(f, t, opts.talbot_terms)?,
            talbot(f, t, opts.talbot_check_terms)?,
        ),
        InversionMethod::GaverStehfest => {
            for n in [opts.stehfest_terms, opts.stehfest_check_terms] {
                if n % 2 == 1 || !(8..=MAX_STEHFEST_TERMS).contains(&n) {
                    return Err(Error::Config(format!(
                        "Gaver-Stehfest term count must be even in 8..={MAX_STEHFEST_TERMS}, got {n}"
                    )));
                }
            }
            (
                stehfest(f, t, opts.stehfest_terms),
                stehfest(f, t, opts.stehfest_check_terms),
            )
        }
    };
    let err_estimate = (primary - check).abs();
    let rel_tol = match method {
        InversionMethod::FixedTalbot => opts.rel_tol,
        InversionMethod::GaverStehfest => opts.stehfest_rel_tol,
    };
    let tolerance = opts.abs_tol + rel_tol * primary.abs();
    if !primary.is_finite() || err_estimate > tolerance {
        return Err(Error::Disagreement {
            primary,
            check,
            tolerance,
        });
    }
    Ok(Inversion {
        value: primary,
        err_estimate,
    })
}

/// Default inverter for a model: Talbot when `f` continues analytically.
pub fn method_for(spec: &BernsteinSpec) -> InversionMethod {
    if spec.supports_complex() {
        InversionMethod::FixedTalbot
    } else {
        InversionMethod::GaverStehfest
    }
}

/// Transform handle built from `f` through `g(u, f(u))`.
pub fn spec_transform<'a, G>(spec: &'a BernsteinSpec, g: G) -> TransformHandle<'a>
where
    G: Fn(Complex64, Complex64) -> Complex64 + Send + Sync + Clone + 'a,
{
    if spec.supports_complex() {
        TransformHandle::analytic(move |u| {
            let fu = spec.exponent_complex(u).expect("analytic spec");
            g(u, fu)
        })
    } else {
        TransformHandle::real_only(move |u| {
            let fu = spec.eval_exponent(u).unwrap_or(f64::NAN);
            g(Complex64::new(u, 0.0), Complex64::new(fu, 0.0)).re
        })
    }
}

/// Absolute threshold under which negative density values are treated as
/// inversion noise.
pub const DENSITY_CLAMP: f64 = 1e-9;

fn clamp_density(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v > -DENSITY_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::numeric("negative density from inversion", v))
    }
}

/// Density `s(x,t)` of `S(t)`.
pub fn inverse_density(spec: &BernsteinSpec, x: f64, t: f64) -> Result<f64> {
    inverse_density_with_error(spec, x, t).map(|i| i.value)
}

/// Density `s(x,t)` together with the inversion error estimate.
pub fn inverse_density_with_error(spec: &BernsteinSpec, x: f64, t: f64) -> Result<Inversion> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("density needs x >= 0, got {x}")));
    }
    let handle = spec_transform(spec, move |u, fu| fu / u * (-fu * x).exp());
    let inv = invert_laplace(&handle, t, method_for(spec), &InversionOptions::default())?;
    Ok(Inversion {
        value: clamp_density(inv.value)?,
        err_estimate: inv.err_estimate,
    })
}

/// Memory kernel `M(t)`, the inverse transform of `1/f`.
pub fn memory_kernel(spec: &BernsteinSpec, t: f64) -> Result<f64> {
    memory_kernel_with(spec, t, method_for(spec), &InversionOptions::default()).map(|i| i.value)
}

pub fn memory_kernel_with(
    spec: &BernsteinSpec,
    t: f64,
    method: InversionMethod,
    opts: &InversionOptions,
) -> Result<Inversion> {
    let handle = spec_transform(spec, |_, fu| fu.inv());
    invert_laplace(&handle, t, method, opts)
}

/// Renewal function `U(t) = E S(t)`.
pub fn renewal_function(spec: &BernsteinSpec, t: f64) -> Result<f64> {
    renewal_function_with(spec, t, method_for(spec), &InversionOptions::default()).map(|i| i.value)
}

pub fn renewal_function_with(
    spec: &BernsteinSpec,
    t: f64,
    method: InversionMethod,
    opts: &InversionOptions,
) -> Result<Inversion> {
    let handle = spec_transform(spec, |u, fu| (u * fu).inv());
    invert_laplace(&handle, t, method, opts)
}

/// `∫_0^t U(s) ds`, the second antiderivative of the memory kernel.
pub fn renewal_integral(spec: &BernsteinSpec, t: f64) -> Result<f64> {
    let handle = spec_transform(spec, |u, fu| (u * u * fu).inv());
    invert_laplace(&handle, t, method_for(spec), &InversionOptions::default()).map(|i| i.value)
}

/// Repeated inversion at one fixed time with the contour (and `f` on it)
/// computed once. Used wherever `s(·, t)` is integrated over `x`.
#[derive(Debug, Clone)]
pub struct FixedTimeInverter {
    t: f64,
    /// Kept for analytic exponents so that far-tail densities can move the
    /// contour to the saddle point.
    spec: Option<BernsteinSpec>,
    /// `(node, weight, f(node))`; real nodes carry zero imaginary parts.
    terms: Vec<(Complex64, Complex64, Complex64)>,
}

impl FixedTimeInverter {
    pub fn new(spec: &BernsteinSpec, t: f64) -> Result<Self> {
        Self::with_terms(spec, t, InversionOptions::default().talbot_terms)
    }

    pub fn with_terms(spec: &BernsteinSpec, t: f64, talbot_terms: usize) -> Result<Self> {
        Self::shifted(spec, t, talbot_terms, 0.0)
    }

    /// Nodes moved right by `shift`, for transforms whose singularities
    /// reach into the right half-plane.
    pub fn shifted(spec: &BernsteinSpec, t: f64, talbot_terms: usize, shift: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain(format!("inversion time must be positive, got {t}")));
        }
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(Error::domain(format!("contour shift must be nonnegative, got {shift}")));
        }
        let terms = if spec.supports_complex() {
            talbot_terms_for(spec, t, talbot_terms, shift)
        } else {
            let n = InversionOptions::default().stehfest_terms;
            let a = LN_2 / t;
            stehfest_coefficients(n)
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    let u = shift + (i + 1) as f64 * a;
                    let fu = spec.eval_exponent(u)?;
                    let w = v * a * (shift * t).exp();
                    Ok((Complex64::new(u, 0.0), Complex64::new(w, 0.0), Complex64::new(fu, 0.0)))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self {
            t,
            spec: spec.supports_complex().then(|| spec.clone()),
            terms,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Inverts `g(u, f(u))` at the fixed time.
    pub fn invert(&self, g: impl Fn(Complex64, Complex64) -> Complex64) -> f64 {
        self.terms.iter().map(|&(s, w, fs)| (w * g(s, fs)).re).sum()
    }

    /// `s(x, t)` without the resolution check; small negatives clamped.
    pub fn density(&self, x: f64) -> f64 {
        self.tilted_density(x, 0.0)
    }

    /// `e^{θx} s(x, t)` as the inverse of `f(u)/u · e^{−(f(u)−θ)x}`.
    ///
    /// Rounding on a Talbot contour is relative to its largest term, and
    /// for large `x` the integrand also oscillates along it. Once the
    /// saddle `u*` of `ut − x f(u)` lies right of the Talbot node the
    /// inversion switches to a parabola through `u*`, which keeps far-tail
    /// values accurate relative to their own size.
    pub fn tilted_density(&self, x: f64, theta: f64) -> f64 {
        let g = |u: Complex64, fu: Complex64| fu / u * (-(fu - theta) * x).exp();
        if let Some(spec) = &self.spec {
            if let Some(saddle) = saddle_point(spec, self.t, x) {
                return clamp_noise(saddle_parabola(spec, self.t, x, theta, saddle));
            }
        }
        clamp_noise(self.invert(g))
    }
}

fn talbot_terms_for(spec: &BernsteinSpec, t: f64, terms: usize, shift: f64) -> Vec<(Complex64, Complex64, Complex64)> {
    let contour = TalbotContour::new(t, terms, shift);
    contour
        .nodes
        .iter()
        .zip(&contour.weights)
        .map(|(&s, &w)| (s, w, spec.exponent_complex(s).expect("analytic spec")))
        .collect()
}

/// Left end of the branch cut of `f`.
fn branch_point(spec: &BernsteinSpec) -> f64 {
    match spec.kind() {
        BernsteinKind::TemperedStable { temper, .. } => -temper,
        _ => 0.0,
    }
}

/// Inverse of `f(u)/u · e^{−(f(u)−θ)x}` at `t` along the parabola
/// `u(y) = b + (u* − b)(1 + iy)²` through the saddle `u*`, `b` the branch
/// point. For `f(u) = √(u − b) + const` this is the steepest-descent path
/// and `|e^{ut − x f}|` falls like `e^{−A y²}`, `A = t(u* − b)`; the step
/// and length of the trapezoid rule are set from `A` for about `e^{−36}`
/// relative error.
fn saddle_parabola(spec: &BernsteinSpec, t: f64, x: f64, theta: f64, saddle: f64) -> f64 {
    let b = branch_point(spec);
    let c = saddle - b;
    let a = t * c;
    let v = 0.8;
    let h = 2.0 * PI * v / (36.0 + a * v * v);
    let n = ((6.0 / a.sqrt()) / h).ceil() as usize + 1;
    let term = |y: f64| -> f64 {
        let z = Complex64::new(1.0, y);
        let s = z * z * c + b;
        let ds = Complex64::new(0.0, 2.0 * c) * z;
        let fs = spec.exponent_complex(s).expect("analytic spec");
        (fs / s * (s * t - (fs - theta) * x).exp() * ds).im
    };
    let mut acc = 0.5 * term(0.0);
    for k in 1..=n {
        acc += term(k as f64 * h);
    }
    acc * h / PI
}

/// Root `u*` of `x f'(u) = t`, provided `t (u* − b) ≥ 4` with `b` the
/// branch point; `f'` by complex step. `f'` decreases, so the root is
/// bracketed by doubling `u − b`.
fn saddle_point(spec: &BernsteinSpec, t: f64, x: f64) -> Option<f64> {
    if x <= 0.0 {
        return None;
    }
    let b = branch_point(spec);
    let slope = |w: f64| {
        let u = b + w;
        let h = 1e-30 * u.abs().max(1e-300);
        spec.exponent_complex(Complex64::new(u, h)).map(|v| v.im / h).unwrap_or(0.0)
    };
    let from = 4.0 / t;
    if x * slope(from) <= t {
        return None;
    }
    let mut lo = from;
    let mut hi = 2.0 * from;
    while x * slope(hi) > t {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..40 {
        let mid = (lo * hi).sqrt();
        if x * slope(mid) > t {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-4 {
            break;
        }
    }
    Some(b + (lo * hi).sqrt())
}

fn clamp_noise(v: f64) -> f64 {
    if v > -DENSITY_CLAMP {
        v.max(0.0)
    } else {
        v
    }
}

/// Value of `Φ_t g(t)` with its grid-halving error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiValue {
    pub value: f64,
    pub err_estimate: f64,
}

/// `(Φ_t g)(t) = d/dt ∫_0^t M(t−s) g(s) ds` for `g` sampled uniformly on
/// `[0, t]` (`g[0]` at `s = 0`, `g[n]` at `s = t`).
///
/// The convolution integrates the piecewise-linear interpolant of `g`
/// exactly against `M` (weights from the antiderivatives `U` and `∫U`),
/// which absorbs the kernel singularity at 0. The outer derivative is the
/// 4-point backward difference with step `t/n`. The estimate compares
/// against the same computation on every other sample.
pub fn apply_phi(spec: &BernsteinSpec, g: &[f64], t: f64, tol: f64) -> Result<PhiValue> {
    if g.len() < 64 {
        return Err(Error::Precondition(format!(
            "apply_phi needs at least 64 samples, got {}",
            g.len()
        )));
    }
    if !(t > 0.0) {
        return Err(Error::domain("apply_phi needs t > 0"));
    }
    let n = g.len() - 1;
    let weights = PhiWeights::new(spec, t, n)?;
    let fine = weights.apply(g);
    let err_estimate = if n.is_multiple_of(2) {
        let coarse: Vec<f64> = g.iter().step_by(2).copied().collect();
        let coarse_weights = PhiWeights::new(spec, t, n / 2)?;
        (fine - coarse_weights.apply(&coarse)).abs() / 3.0
    } else {
        // odd interval count: compare against the leading even sub-grid
        let sub = PhiWeights::new(spec, t * (n - 1) as f64 / n as f64, n - 1)?;
        (fine - sub.apply(&g[..n])).abs()
    };
    if !fine.is_finite() || err_estimate > tol * fine.abs().max(1.0) {
        return Err(Error::numeric("apply_phi grid too coarse", err_estimate));
    }
    Ok(PhiValue {
        value: fine,
        err_estimate,
    })
}

/// Product-integration weights of `Φ_t` on a uniform grid of `n`
/// intervals; reusable across many sampled functions on the same grid.
#[derive(Debug, Clone)]
pub struct PhiWeights {
    h: f64,
    k2: Vec<f64>,
    /// `U(t_m)` for `m = n, n−1, n−2, n−3`.
    k1: [f64; 4],
}

impl PhiWeights {
    pub fn new(spec: &BernsteinSpec, t: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Precondition("Φ grid needs at least 4 intervals".into()));
        }
        let h = t / n as f64;
        let mut k2 = Vec::with_capacity(n + 1);
        k2.push(0.0);
        for k in 1..=n {
            k2.push(renewal_integral(spec, k as f64 * h)?);
        }
        let mut k1 = [0.0; 4];
        for (j, slot) in k1.iter_mut().enumerate() {
            *slot = renewal_function(spec, (n - j) as f64 * h)?;
        }
        Ok(Self { h, k2, k1 })
    }

    fn conv(&self, g: &[f64], m: usize, k1: f64) -> f64 {
        // ∫_0^{t_m} M(τ) G(τ) dτ with G(τ) = g(t_m − τ), nodes τ_i = i h
        let h = self.h;
        let k2 = &self.k2;
        let mut acc = g[m] * k2[1] / h;
        for i in 1..m {
            acc += g[m - i] * (k2[i + 1] - 2.0 * k2[i] + k2[i - 1]) / h;
        }
        acc + g[0] * (k1 - (k2[m] - k2[m - 1]) / h)
    }

    pub fn apply(&self, g: &[f64]) -> f64 {
        let n = self.k2.len() - 1;
        debug_assert_eq!(g.len(), n + 1);
        let c: Vec<f64> = (0..4).map(|j| self.conv(g, n - j, self.k1[j])).collect();
        (11.0 * c[0] - 18.0 * c[1] + 9.0 * c[2] - 2.0 * c[3]) / (6.0 * self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma_fn;
    use approx::assert_relative_eq;

    fn opts() -> InversionOptions {
        InversionOptions::default()
    }

    #[test]
    fn elementary_pairs() {
        let one = TransformHandle::analytic(|u: Complex64| u.inv());
        let ramp = TransformHandle::analytic(|u: Complex64| (u * u).inv());
        let decay = TransformHandle::analytic(|u: Complex64| (u + 1.0).inv());
        let m = InversionMethod::FixedTalbot;
        assert!((invert_laplace(&one, 5.0, m, &opts()).unwrap().value - 1.0).abs() < 1e-8);
        assert!((invert_laplace(&ramp, 3.0, m, &opts()).unwrap().value - 3.0).abs() < 1e-8);
        assert!((invert_laplace(&decay, 2.0, m, &opts()).unwrap().value - (-2.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn stehfest_handles_real_only_transform() {
        // (u+1)^{-1/2} ↔ e^{−t}/√(πt)
        let f = TransformHandle::real_only(|u| 1.0 / (u + 1.0).sqrt());
        let inv = invert_laplace(&f, 0.5, InversionMethod::GaverStehfest, &opts()).unwrap();
        let expected = (-0.5f64).exp() / (PI * 0.5).sqrt();
        assert_relative_eq!(inv.value, expected, max_relative = 1e-6);
        assert!(invert_laplace(&f, 0.5, InversionMethod::FixedTalbot, &opts()).is_err());
    }

    #[test]
    fn stehfest_term_cap() {
        let decay = TransformHandle::real_only(|u| 1.0 / (u + 1.0));
        let o = InversionOptions {
            stehfest_terms: 20,
            ..opts()
        };
        assert!(matches!(
            invert_laplace(&decay, 2.0, InversionMethod::GaverStehfest, &o),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn resolution_disagreement_is_reported() {
        // oscillatory original sin(10 t) is outside the method's reach
        let osc = TransformHandle::analytic(|u: Complex64| Complex64::new(10.0, 0.0) / (u * u + 100.0))
            .with_regularity(Regularity::General);
        let r = invert_laplace(&osc, 1.0, InversionMethod::FixedTalbot, &opts());
        assert!(matches!(r, Err(Error::Disagreement { .. })));
    }

    #[test]
    fn stehfest_coefficients_sum_to_zero() {
        for n in [8, 12, 14, 16] {
            let s: f64 = stehfest_coefficients(n).iter().sum();
            assert!(s.abs() < 1e-6, "n={n} sum={s}");
        }
    }

    #[test]
    fn half_normal_density() {
        let spec = BernsteinSpec::scaled_stable(0.5, 2f64.sqrt()).unwrap();
        let expected = (2.0 / PI).sqrt();
        assert_relative_eq!(inverse_density(&spec, 0.0, 1.0).unwrap(), expected, max_relative = 1e-9);
    }

    #[test]
    fn negative_x_is_domain_error() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        assert!(matches!(inverse_density(&spec, -0.1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(inverse_density(&spec, 0.1, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn stable_memory_kernel() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let expected = 4f64.powf(-0.5) / gamma_fn(0.5);
        assert_relative_eq!(memory_kernel(&spec, 4.0).unwrap(), expected, max_relative = 1e-9);
        // homogeneity M(ct) = c^{α−1} M(t)
        for c in [0.1, 3.0, 17.0] {
            assert_relative_eq!(
                memory_kernel(&spec, c * 2.0).unwrap(),
                c.powf(-0.5) * memory_kernel(&spec, 2.0).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn tempered_kernel_dual_method() {
        let spec = BernsteinSpec::tempered_stable(0.5, 1.0).unwrap();
        let a = memory_kernel_with(&spec, 1.0, InversionMethod::FixedTalbot, &opts()).unwrap();
        let b = memory_kernel_with(&spec, 1.0, InversionMethod::GaverStehfest, &opts()).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-6);
    }

    #[test]
    fn stable_renewal_function() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        assert_relative_eq!(renewal_function(&spec, 1.0).unwrap(), 1.0 / gamma_fn(1.5), max_relative = 1e-9);
    }

    #[test]
    fn tempered_renewal_linear_growth() {
        let spec = BernsteinSpec::tempered_stable(0.5, 1.0).unwrap();
        let ratio = renewal_function(&spec, 1e3).unwrap() / 1e3;
        assert!((ratio - 2.0).abs() < 0.04, "U(t)/t = {ratio}");
        let mut prev = 0.0;
        for k in 1..40 {
            let u = renewal_function(&spec, 0.25 * k as f64).unwrap();
            assert!(u >= prev);
            prev = u;
        }
    }

    #[test]
    fn fixed_time_inverter_matches_checked_density() {
        let spec = BernsteinSpec::tempered_stable(0.5, 1.0).unwrap();
        let inv = FixedTimeInverter::new(&spec, 0.7).unwrap();
        for x in [0.0, 0.3, 1.1, 2.5] {
            assert_relative_eq!(inv.density(x), inverse_density(&spec, x, 0.7).unwrap(), max_relative = 1e-12);
        }
    }

    fn grid(t: f64, n: usize, g: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=n).map(|i| g(t * i as f64 / n as f64)).collect()
    }

    #[test]
    fn phi_riemann_liouville_linear() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let v = apply_phi(&spec, &grid(1.0, 128, |s| s), 1.0, 1e-4).unwrap();
        assert_relative_eq!(v.value, 1.0 / gamma_fn(1.5), max_relative = 1e-6);
    }

    #[test]
    fn phi_of_constant_is_kernel() {
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let v = apply_phi(&spec, &grid(1.0, 128, |_| 1.0), 1.0, 1e-4).unwrap();
        assert_relative_eq!(v.value, 1.0 / gamma_fn(0.5), max_relative = 1e-6);
    }

    #[test]
    fn phi_riemann_liouville_quadratic() {
        // D^{1/2} s² = Γ(3)/Γ(2.5) t^{1.5}
        let spec = BernsteinSpec::stable(0.5).unwrap();
        let v = apply_phi(&spec, &grid(2.0, 256, |s| s * s), 2.0, 1e-3).unwrap();
        let expected = 2.0 / gamma_fn(2.5) * 2f64.powf(1.5);
        assert_relative_eq!(v.value, expected, max_relative = 1e-4);
    }

    #[test]
    fn phi_of_zero_and_short_grid() {
        let spec = BernsteinSpec::tempered_stable(0.5, 1.0).unwrap();
        assert_eq!(apply_phi(&spec, &[0.0; 65], 1.0, 1e-4).unwrap().value, 0.0);
        assert!(matches!(apply_phi(&spec, &[0.0; 10], 1.0, 1e-4), Err(Error::Precondition(_))));
    }
}
