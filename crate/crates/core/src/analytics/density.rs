//! Densities and Feynman–Kac values of `B(S(t))` by mixing Gaussian
//! quantities against `s(y, t)`.

use std::f64::consts::PI;

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::laplace::{apply_phi, renewal_function, FixedTimeInverter};
use crate::quadrature::{integrate, integrate_log, QuadOptions};

use super::density_extent;

/// Lower end of the `y = e^z` substitution; the neglected piece is below
/// `s(0,t) √(2·1e-20/π)`.
const Y_FLOOR: f64 = 1e-20;

/// `p(x,t) = ∫_0^∞ (2πy)^{−1/2} e^{−x²/(2y)} s(y,t) dy`.
pub fn subordinated_density(spec: &BernsteinSpec, x: f64, t: f64) -> Result<f64> {
    let inv = FixedTimeInverter::new(spec, t)?;
    let scale = renewal_function(spec, t)?;
    density_with(&inv, scale, x)
}

fn density_with(inv: &FixedTimeInverter, scale: f64, x: f64) -> Result<f64> {
    let upper = density_extent(scale, |y| inv.density(y));
    let kernel = |y: f64| (-x * x / (2.0 * y)).exp() / (2.0 * PI * y).sqrt();
    let q = integrate_log(|y| kernel(y) * inv.density(y), Y_FLOOR, upper, QuadOptions::with_tol(1e-14, 1e-11))?;
    Ok(q.value.max(0.0))
}

/// `v(x0,t) = ∫_0^∞ e^{−h y} E g(x0 + B(y)) s(y,t) dy` for constant `h`.
pub fn fk_quadrature(spec: &BernsteinSpec, h_const: f64, g: &dyn Fn(f64) -> f64, x0: f64, t: f64) -> Result<f64> {
    if !(h_const >= 0.0) {
        return Err(Error::domain("h must be nonnegative"));
    }
    let inv = FixedTimeInverter::new(spec, t)?;
    let scale = renewal_function(spec, t)?;
    let upper = density_extent(scale, |y| inv.density(y));
    let inner_opts = QuadOptions::with_tol(1e-14, 1e-12);
    let gaussian_mean = |y: f64| -> Result<f64> {
        if y <= 0.0 {
            return Ok(g(x0));
        }
        let sd = y.sqrt();
        let q = integrate(
            |z| (-0.5 * z * z).exp() / (2.0 * PI).sqrt() * g(x0 + sd * z),
            -9.0,
            9.0,
            inner_opts,
        )?;
        Ok(q.value)
    };
    let mut failure = None;
    let q = integrate(
        |y| match gaussian_mean(y) {
            Ok(m) => (-h_const * y).exp() * m * inv.density(y),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        upper,
        QuadOptions::with_tol(1e-13, 1e-11),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(q.value)
}

/// Solution at `x0` of `(λ + h) w − ½ w'' = g` on the line, by second-order
/// finite differences on `[x0 − L, x0 + L]` with `w = g/(λ+h)` at both
/// ends; the boundary error decays like `e^{−√(2(λ+h)) L}`.
pub fn resolvent_fd(lambda: f64, h_const: f64, g: &dyn Fn(f64) -> f64, x0: f64, points: usize) -> Result<f64> {
    let k = lambda + h_const;
    if !(k > 0.0) {
        return Err(Error::domain("resolvent needs λ + h > 0"));
    }
    let half = 30.0 / (2.0 * k).sqrt();
    let n = points.max(101) | 1;
    let dx = 2.0 * half / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| x0 - half + i as f64 * dx).collect();
    // interior unknowns 1..n−1: −c w_{i−1} + d w_i − c w_{i+1} = g_i
    let c = 0.5 / (dx * dx);
    let d = k + 2.0 * c;
    let m = n - 2;
    let mut rhs: Vec<f64> = xs[1..n - 1].iter().map(|&x| g(x)).collect();
    rhs[0] += c * g(xs[0]) / k;
    rhs[m - 1] += c * g(xs[n - 1]) / k;
    // Thomas algorithm for the constant tridiagonal system
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = -c / d;
    dp[0] = rhs[0] / d;
    for i in 1..m {
        let denom = d + c * cp[i - 1];
        cp[i] = -c / denom;
        dp[i] = (rhs[i] + c * dp[i - 1]) / denom;
    }
    let mut w = vec![0.0; m];
    w[m - 1] = dp[m - 1];
    for i in (0..m - 1).rev() {
        w[i] = dp[i] - cp[i] * w[i + 1];
    }
    Ok(w[(n - 1) / 2 - 1])
}

/// Numerical Laplace transform of `t ↦ v(x0,t)` against the subordinated
/// resolvent `(f(u)/u) ŵ(x0, f(u))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkLaplaceCheck {
    pub numerical: f64,
    pub resolvent: f64,
    pub rel_diff: f64,
}

pub fn fk_laplace_check(
    spec: &BernsteinSpec,
    h_const: f64,
    g: &dyn Fn(f64) -> f64,
    x0: f64,
    u: f64,
) -> Result<FkLaplaceCheck> {
    let t_lo = 1e-10;
    let t_hi = 40.0 / u;
    let mut failure = None;
    let q = integrate_log(
        |t| match fk_quadrature(spec, h_const, g, x0, t) {
            Ok(v) => (-u * t).exp() * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        t_lo,
        t_hi,
        QuadOptions::with_tol(1e-12, 1e-8),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    // v(x0, t) → g(x0) as t → 0
    let numerical = q.value + g(x0) * t_lo;
    let fu = spec.eval_exponent(u)?;
    let resolvent = fu / u * resolvent_fd(fu, h_const, g, x0, 16_001)?;
    Ok(FkLaplaceCheck {
        numerical,
        resolvent,
        rel_diff: (numerical - resolvent).abs() / resolvent.abs(),
    })
}

/// Terms of `∂ₜp − ½ Φₜ ∂ₓₓp` at one `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdeResidual {
    pub time_derivative: f64,
    pub operator_term: f64,
    pub residual: f64,
    pub phi_err_estimate: f64,
}

/// Residual of the generalized diffusion equation for `p =
/// subordinated_density`: central differences in `x` (step `hx`) and `t`,
/// `Φₜ` on at least `grid` uniform intervals of `[0, t]`. Needs `x ≠ 0`
/// so that `∂ₓₓp(x, 0+) = 0`.
pub fn gde_residual(spec: &BernsteinSpec, x: f64, t: f64, hx: f64, grid: usize) -> Result<GdeResidual> {
    if x == 0.0 {
        return Err(Error::domain("residual is evaluated away from the origin"));
    }
    let ht = 1e-3 * t;
    let dt_p = (subordinated_density(spec, x, t + ht)? - subordinated_density(spec, x, t - ht)?) / (2.0 * ht);
    // the x-curvature has a sharp onset near s ≈ x², so the Φ grid is
    // doubled until its own halving check passes
    let mut n = grid.max(64);
    let phi = loop {
        let mut g = Vec::with_capacity(n + 1);
        g.push(0.0);
        for i in 1..=n {
            let s = t * i as f64 / n as f64;
            let inv = FixedTimeInverter::new(spec, s)?;
            let scale = renewal_function(spec, s)?;
            let p = |y: f64| density_with(&inv, scale, y);
            g.push((p(x + hx)? - 2.0 * p(x)? + p(x - hx)?) / (hx * hx));
        }
        match apply_phi(spec, &g, t, 1e-4) {
            Err(Error::Numeric { .. }) if n < 16 * grid.max(64) => n *= 2,
            other => break other?,
        }
    };
    let operator_term = 0.5 * phi.value;
    Ok(GdeResidual {
        time_derivative: dt_p,
        operator_term,
        residual: dt_p - operator_term,
        phi_err_estimate: phi.err_estimate,
    })
}
