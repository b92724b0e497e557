//! Special functions not covered by `statrs`.

use statrs::function::gamma::{gamma, gamma_ur};

pub use statrs::function::gamma::{gamma as gamma_fn, ln_gamma};

/// Upper incomplete gamma `Γ(s, z)` for real `s` (including negative,
/// non-integer `s`) and `z > 0`.
///
/// For `z > 1` the Legendre continued fraction is evaluated with the
/// modified Lentz method; below that, `s > 0` goes through the regularized
/// function and `s < 0` is lifted by the recurrence
/// `Γ(s, z) = (Γ(s + 1, z) − z^s e^{−z}) / s`.
pub fn upper_incomplete_gamma(s: f64, z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z > 1.0 {
        return continued_fraction(s, z);
    }
    if s > 0.0 {
        return gamma(s) * gamma_ur(s, z);
    }
    (upper_incomplete_gamma(s + 1.0, z) - z.powf(s) * (-z).exp()) / s
}

fn continued_fraction(s: f64, z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (s * z.ln() - z).exp() * h
}
