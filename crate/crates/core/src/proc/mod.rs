//! Distributions, special functions, quadrature and the contact process.

pub mod contact;
pub mod dist;
pub mod quad;
pub mod rng;
pub mod series;
pub mod zeta;

pub use contact::{sample_contact_process, ContactSeries, NodeId, Quantity};
pub use dist::{Dist, DistSpec, Moments, Which};
pub use rng::{RandomStream, StreamRng};
pub use zeta::{hurwitz_zeta, zeta_combination};

use crate::error::Result;

/// Evaluate the pdf, cdf or ccdf of `d` at `x ≥ 0`.
pub fn dist_eval(d: &DistSpec, which: Which, x: f64) -> Result<f64> {
    d.build()?.eval(which, x)
}

pub fn dist_moments(d: &DistSpec) -> Result<Moments> {
    Ok(d.build()?.moments())
}

/// `P(Z + S ≤ x)` with `Z ~ Unif(0, w)`.
pub fn uniform_plus_dist_cdf(w: f64, d: &DistSpec, x: f64) -> Result<f64> {
    d.build()?.uniform_plus_cdf(w, x)
}
