//! Brownian motion run on the clock of an inverse subordinator: Bernstein
//! exponents, Laplace-domain analytics, path simulation and statistical
//! diagnostics.

// `!(x > 0.0)` guards reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod bernstein;
pub mod diagnostics;
pub mod error;
pub mod inverse;
pub mod laplace;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;
pub mod subdiffusion;
pub mod subordinator;

pub use bernstein::{BernsteinKind, BernsteinSpec, LevyTail, MixingAtom};
pub use error::{Error, Result};
