//! Joint transforms `E exp{Σ θⱼ S(τⱼ)}` by the renewal recursion
//!
//! ```text
//! J(θ₁..θ_M; τ₁..τ_M) = J(θ₂..; τ₂..)
//!     + ∫_0^{τ₁} J°(θ₂..; τ₂−x, …) dI(x),   I(x) = (θ₁/Σθ)(E e^{Σθ·S(x)} − 1)
//! ```
//!
//! where `J°` is always the plain (non-stationary) transform and the
//! integrator uses the plain or stationary single-time transform. When
//! `Σθ = 0` the integrator is the limit `θ₁ E S(x)`, i.e. `θ₁ U(x)`
//! respectively `θ₁ x/μ`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::laplace::renewal_function;

use super::laplace_s_transform;

#[derive(Debug, Clone, Copy)]
pub struct JointOptions {
    /// Table spacing and Stieltjes cell width per unit of τ.
    pub step: f64,
    /// Accepted relative change when the cell width is doubled.
    pub rel_tol: f64,
}

impl Default for JointOptions {
    fn default() -> Self {
        Self {
            step: 1.0 / 1024.0,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLaplace {
    pub value: f64,
    /// Change of the value when the Stieltjes cells are doubled.
    pub err_estimate: f64,
}

/// Uniformly tabulated function on `[0, span]`, linearly interpolated.
struct Table {
    h: f64,
    values: Vec<f64>,
}

impl Table {
    fn build(h: f64, span: f64, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let n = (span / h).ceil() as usize + 2;
        let values = (0..=n)
            .map(|k| if k == 0 { f(0.0) } else { f(k as f64 * h) })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { h, values })
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.values[0];
        }
        let pos = x / self.h;
        let k = (pos.floor() as usize).min(self.values.len() - 2);
        let frac = pos - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum TableKey {
    Transform { theta_bits: u64, stationary: bool },
    Renewal,
}

enum Integrator {
    Scaled { table: Rc<Table>, coef: f64 },
    Renewal { table: Rc<Table>, coef: f64 },
    Linear { slope: f64 },
}

impl Integrator {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Integrator::Scaled { table, coef } => coef * (table.eval(x) - 1.0),
            Integrator::Renewal { table, coef } => coef * table.eval(x),
            Integrator::Linear { slope } => slope * x,
        }
    }
}

struct Recursion<'a> {
    spec: &'a BernsteinSpec,
    mu: f64,
    step: f64,
    span: f64,
    tables: RefCell<HashMap<TableKey, Rc<Table>>>,
}

impl<'a> Recursion<'a> {
    fn table(&self, key: TableKey) -> Result<Rc<Table>> {
        if let Some(t) = self.tables.borrow().get(&key) {
            return Ok(Rc::clone(t));
        }
        let spec = self.spec;
        let table = Rc::new(match key {
            TableKey::Transform { theta_bits, stationary } => {
                let theta = f64::from_bits(theta_bits);
                Table::build(self.step, self.span, |x| {
                    if x == 0.0 {
                        Ok(1.0)
                    } else {
                        laplace_s_transform(spec, theta, x, stationary).map(|i| i.value)
                    }
                })?
            }
            TableKey::Renewal => Table::build(self.step, self.span, |x| {
                if x == 0.0 {
                    Ok(0.0)
                } else {
                    renewal_function(spec, x)
                }
            })?,
        });
        self.tables.borrow_mut().insert(key, Rc::clone(&table));
        Ok(table)
    }

    fn transform_table(&self, theta: f64, stationary: bool) -> Result<Rc<Table>> {
        self.table(TableKey::Transform {
            theta_bits: theta.to_bits(),
            stationary,
        })
    }

    fn integrator(&self, theta1: f64, sum: f64, stationary: bool) -> Result<Integrator> {
        if sum.abs() > 1e-12 {
            Ok(Integrator::Scaled {
                table: self.transform_table(sum, stationary)?,
                coef: theta1 / sum,
            })
        } else if stationary {
            Ok(Integrator::Linear { slope: theta1 / self.mu })
        } else {
            Ok(Integrator::Renewal {
                table: self.table(TableKey::Renewal)?,
                coef: theta1,
            })
        }
    }

    fn eval(&self, thetas: &[f64], taus: &[f64], stationary: bool, stride: usize) -> Result<f64> {
        match thetas.len() {
            0 => return Ok(1.0),
            1 => return Ok(self.transform_table(thetas[0], stationary)?.eval(taus[0])),
            _ => {}
        }
        let base = self.eval(&thetas[1..], &taus[1..], stationary, stride)?;
        let tau1 = taus[0];
        if tau1 <= 0.0 {
            return Ok(base);
        }
        let sum: f64 = thetas.iter().sum();
        let integrator = self.integrator(thetas[0], sum, stationary)?;
        let cells = ((tau1 / (self.step * stride as f64)) - 1e-9).ceil().max(1.0) as usize;
        let w = tau1 / cells as f64;
        let rest_thetas = &thetas[1..];
        let mut shifted = taus[1..].to_vec();
        let mut acc = 0.0;
        let mut i_prev = integrator.eval(0.0);
        let single = if rest_thetas.len() == 1 {
            Some(self.transform_table(rest_thetas[0], false)?)
        } else {
            None
        };
        for k in 0..cells {
            let x_next = (k + 1) as f64 * w;
            let i_next = integrator.eval(x_next);
            let mid = (k as f64 + 0.5) * w;
            let inner = match &single {
                Some(table) => table.eval(taus[1] - mid),
                None => {
                    for (s, t) in shifted.iter_mut().zip(&taus[1..]) {
                        *s = t - mid;
                    }
                    self.eval(rest_thetas, &shifted, false, stride)?
                }
            };
            acc += inner * (i_next - i_prev);
            i_prev = i_next;
        }
        Ok(base + acc)
    }
}

/// `E exp{Σ θⱼ S(τⱼ)}` (or with `S̃` when `stationary`), checked by
/// doubling the Stieltjes cell width.
pub fn joint_laplace(spec: &BernsteinSpec, thetas: &[f64], taus: &[f64], stationary: bool) -> Result<f64> {
    joint_laplace_with(spec, thetas, taus, stationary, &JointOptions::default()).map(|j| j.value)
}

pub fn joint_laplace_with(
    spec: &BernsteinSpec,
    thetas: &[f64],
    taus: &[f64],
    stationary: bool,
    opts: &JointOptions,
) -> Result<JointLaplace> {
    if thetas.is_empty() || thetas.len() != taus.len() {
        return Err(Error::Precondition("thetas and taus must be nonempty and of equal length".into()));
    }
    if taus.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("taus must be nonnegative and nondecreasing".into()));
    }
    let mu = spec.mean_t1();
    if stationary && !mu.is_finite() {
        return Err(Error::Unsupported(format!(
            "{} has infinite mean; the stationary recursion needs E T(1) < ∞",
            spec.label()
        )));
    }
    if thetas.len() == 1 {
        if taus[0] == 0.0 {
            return Ok(JointLaplace { value: 1.0, err_estimate: 0.0 });
        }
        let single = laplace_s_transform(spec, thetas[0], taus[0], stationary)?;
        return Ok(JointLaplace {
            value: single.value,
            err_estimate: single.err_estimate,
        });
    }
    let recursion = Recursion {
        spec,
        mu,
        step: opts.step,
        span: *taus.last().unwrap(),
        tables: RefCell::new(HashMap::new()),
    };
    let fine = recursion.eval(thetas, taus, stationary, 1)?;
    let coarse = recursion.eval(thetas, taus, stationary, 2)?;
    let err_estimate = (fine - coarse).abs();
    if !fine.is_finite() || err_estimate > opts.rel_tol * fine.abs() {
        return Err(Error::numeric("joint transform changed under grid refinement", err_estimate));
    }
    Ok(JointLaplace {
        value: fine,
        err_estimate,
    })
}
