//! Semi-analytic oracles built from the exponent alone.

mod density;
mod joint;
mod lil;
mod moments;

pub use density::{
    fk_laplace_check, fk_quadrature, gde_residual, resolvent_fd, subordinated_density, FkLaplaceCheck,
    GdeResidual,
};
pub use joint::{joint_laplace, joint_laplace_with, JointLaplace, JointOptions};
pub use lil::{lil_envelope, lil_h, LilEnvelope};
pub use moments::{moment_increment, RenewalMeasureTable};

use num_complex::Complex64;

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::laplace::{
    invert_laplace, method_for, renewal_function, FixedTimeInverter, Inversion, InversionOptions, TransformHandle,
};
use crate::quadrature::{integrate, QuadOptions};

/// Right end of the numerical support of a density-like `g`: the first
/// point past `scale` of a geometric scan where `g` has fallen below `1e-16`
/// of its largest value seen.
pub(crate) fn density_extent(scale: f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut x = scale.max(1e-6) / 64.0;
    let mut peak: f64 = 0.0;
    for _ in 0..400 {
        let v = g(x).abs();
        peak = peak.max(v);
        if x > scale && v <= 1e-16 * peak {
            return x;
        }
        x *= 1.25;
    }
    x
}

/// `E e^{θ S(τ)} = ∫_0^∞ e^{θx} s(x,τ) dx` by quadrature of the inverted
/// tilted density.
pub fn laplace_s_at(spec: &BernsteinSpec, theta: f64, tau: f64) -> Result<f64> {
    laplace_s_at_with_error(spec, theta, tau).map(|i| i.value)
}

pub fn laplace_s_at_with_error(spec: &BernsteinSpec, theta: f64, tau: f64) -> Result<Inversion> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!("tau must be positive, got {tau}")));
    }
    let scale = renewal_function(spec, tau)?;
    let opts = QuadOptions::with_tol(1e-12, 1e-9);
    // Stehfest nodes must sit where f > θ; Talbot contours move to the saddle
    let shift = if theta > 0.0 && !spec.supports_complex() { pole_of(spec, theta)? } else { 0.0 };
    let by_contour = |terms: usize| -> Result<(f64, f64)> {
        let inv = FixedTimeInverter::shifted(spec, tau, terms, shift)?;
        let g = |x: f64| inv.tilted_density(x, theta);
        let upper = density_extent(scale, g);
        let q = integrate(g, 0.0, upper, opts)?;
        Ok((q.value, q.error))
    };
    let (value, quad_err) = by_contour(InversionOptions::default().talbot_terms)?;
    let err_estimate = if spec.supports_complex() {
        let (check, _) = by_contour(InversionOptions::default().talbot_check_terms)?;
        quad_err + (value - check).abs()
    } else {
        quad_err
    };
    if !value.is_finite() || err_estimate > 1e-6 * value.abs().max(1e-300) {
        return Err(Error::numeric("E exp(θS(τ)) truncation/quadrature error above tolerance", err_estimate));
    }
    Ok(Inversion { value, err_estimate })
}

/// Root `u₀` of `f(u) = θ` for `θ > 0` (a pole of the τ-transform).
fn pole_of(spec: &BernsteinSpec, theta: f64) -> Result<f64> {
    spec.eta((2.0 * theta).sqrt())
}

/// `E e^{θ S(τ)}` (or `E e^{θ S̃(τ)}`) by inverting its transform in `τ`:
/// `f/(u(f−θ))`, respectively `1/u + θ f/(μ u² (f−θ))`.
pub fn laplace_s_transform(spec: &BernsteinSpec, theta: f64, tau: f64, stationary: bool) -> Result<Inversion> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!("tau must be positive, got {tau}")));
    }
    if theta == 0.0 {
        return Ok(Inversion { value: 1.0, err_estimate: 0.0 });
    }
    let mu = spec.mean_t1();
    if stationary && !mu.is_finite() {
        return Err(Error::Unsupported(format!(
            "{} has infinite mean; the stationary transform needs E T(1) < ∞",
            spec.label()
        )));
    }
    if theta > 0.0 && !spec.supports_complex() {
        if stationary {
            return Err(Error::Unsupported(
                "stationary transform with θ > 0 needs an analytic exponent".into(),
            ));
        }
        return laplace_s_at_with_error(spec, theta, tau);
    }
    // Stehfest nodes must sit where f > θ; Talbot contours move to the saddle
    let shift = if theta > 0.0 && !spec.supports_complex() { pole_of(spec, theta)? } else { 0.0 };
    let handle = if spec.supports_complex() {
        TransformHandle::analytic(move |u: Complex64| {
            let fu = spec.exponent_complex(u).expect("analytic spec");
            transform_value(u, fu, theta, mu, stationary)
        })
    } else {
        TransformHandle::real_only(move |u| {
            let fu = spec.eval_exponent(u).unwrap_or(f64::NAN);
            transform_value(Complex64::new(u, 0.0), Complex64::new(fu, 0.0), theta, mu, stationary).re
        })
    }
    .with_shift(shift);
    invert_laplace(&handle, tau, method_for(spec), &InversionOptions::default())
}

fn transform_value(u: Complex64, fu: Complex64, theta: f64, mu: f64, stationary: bool) -> Complex64 {
    if stationary {
        u.inv() + fu * theta / ((fu - theta) * u * u * mu)
    } else {
        fu / (u * (fu - theta))
    }
}

/// `E e^{θ S̃(τ)}` for the stationary modification.
pub fn laplace_s_tilde_at(spec: &BernsteinSpec, theta: f64, tau: f64) -> Result<f64> {
    laplace_s_transform(spec, theta, tau, true).map(|i| i.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_log;
    use approx::assert_relative_eq;

    fn stable() -> BernsteinSpec {
        BernsteinSpec::stable(0.5).unwrap()
    }

    fn tempered() -> BernsteinSpec {
        BernsteinSpec::tempered_stable(0.5, 1.0).unwrap()
    }

    #[test]
    fn normalization() {
        for spec in [stable(), tempered()] {
            for tau in [0.1, 1.0, 10.0] {
                assert_relative_eq!(laplace_s_at(&spec, 0.0, tau).unwrap(), 1.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn half_normal_moment_generating_function() {
        // f(u) = √(2u): S(τ) is half-normal with variance τ, so
        // E e^{θS} = 2 e^{θ²τ/2} Φ(θ√τ)
        let spec = BernsteinSpec::scaled_stable(0.5, 2f64.sqrt()).unwrap();
        let phi = |z: f64| 0.5 * statrs::function::erf::erfc(-z / 2f64.sqrt());
        for (theta, tau) in [(-1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            let expected = 2.0 * (theta * theta * tau / 2.0f64).exp() * phi(theta * tau.sqrt());
            assert_relative_eq!(laplace_s_at(&spec, theta, tau).unwrap(), expected, max_relative = 1e-8);
            let b = laplace_s_transform(&spec, theta, tau, false).unwrap().value;
            assert_relative_eq!(b, expected, max_relative = 1e-8);
        }
    }

    #[test]
    fn routes_agree() {
        for spec in [stable(), tempered()] {
            for (theta, tau) in [(-1.0, 1.0), (-0.5, 3.0), (1.0, 0.7)] {
                let a = laplace_s_at(&spec, theta, tau).unwrap();
                let b = laplace_s_transform(&spec, theta, tau, false).unwrap().value;
                assert_relative_eq!(a, b, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn exponential_time_identity() {
        // ∫ u e^{−uτ} E e^{θS(τ)} dτ = f(u)/(f(u) − θ): u = 16, f = 4, θ = 2
        let spec = stable();
        let u = 16.0;
        let q = integrate_log(
            |tau| u * (-u * tau).exp() * laplace_s_at(&spec, 2.0, tau).unwrap(),
            1e-12,
            40.0 / u,
            QuadOptions::with_tol(1e-12, 1e-8),
        )
        .unwrap();
        assert!((q.value - 2.0).abs() < 1e-4, "{}", q.value);
    }

    #[test]
    fn stationary_transform_limits() {
        let spec = tempered();
        assert_eq!(laplace_s_tilde_at(&spec, 0.0, 1.0).unwrap(), 1.0);
        // mean slope 1/μ: E S̃(τ) = τ/μ, so for small θ the transform ≈ 1 + θτ/μ
        let theta = 1e-4;
        let v = laplace_s_tilde_at(&spec, -theta, 3.0).unwrap();
        assert_relative_eq!((1.0 - v) / theta, 3.0 * 2.0, max_relative = 1e-3);
        assert!(matches!(laplace_s_tilde_at(&stable(), -1.0, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn tau_must_be_positive() {
        assert!(matches!(laplace_s_at(&stable(), -1.0, 0.0), Err(Error::Domain(_))));
    }
}
