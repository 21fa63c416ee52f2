//! Model parameters and the alignment kinetics.
//!
//! Working variables are the total density `u = u_r + u_l` and the
//! polarization `w = u_r - u_l`. After rescaling time and space by the
//! alignment strength, the PDE depends on the single diffusion parameter
//! `a = alpha * epsilon`, and the alignment term is
//!
//! ```text
//! f0(u, w) = w (1 - w^2/u^2) exp(-beta^2 u^2)
//! ```
//!
//! with stable zeros at the fully polarized states `w = +-u` and an unstable
//! zero at `w = 0`. The exponential factor models crowding: alignment shuts
//! down at high density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Density floor below which the guarded alignment evaluation returns 0.
///
/// On the invariant region |w| <= u the product form is bounded by u, so 0 is
/// the continuous limit; the guard only avoids 0/0 in the depletion zone of
/// PDE runs. ODE-side callers keep the strict u > 0 domain.
pub const DENSITY_FLOOR: f64 = 1e-30;

/// Parameters of the rescaled model.
///
/// The rescaled diffusion `a` is always recomputed from `alpha * epsilon`,
/// never stored, so the two representations cannot drift apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Alignment strength (dimensionless after rescaling).
    pub alpha: f64,
    /// Diffusion coefficient.
    pub epsilon: f64,
    /// Crowding parameter in the exponential damping factor.
    pub beta: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, epsilon: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, epsilon, beta };
        p.validate()?;
        Ok(p)
    }

    /// Rescaled diffusion a = alpha * epsilon.
    pub fn a(&self) -> f64 {
        self.alpha * self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("epsilon", self.epsilon),
            ("beta", self.beta),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "model parameter {name} = {v} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

impl Default for ModelParams {
    /// Defaults match the sweep setting: no crowding, a = 0.1.
    fn default() -> Self {
        Self { alpha: 1.0, epsilon: 0.1, beta: 0.0 }
    }
}

/// A physical state (u, w) of the PDE, restricted to the invariant region
/// |w| <= u of positive density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysState {
    pub u: f64,
    pub w: f64,
}

impl PhysState {
    pub fn new(u: f64, w: f64) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() || !w.is_finite() {
            return Err(Error::Domain(format!("density u = {u} must be positive and finite")));
        }
        if w.abs() > u {
            return Err(Error::Domain(format!(
                "polarization w = {w} outside the invariant region |w| <= u = {u}"
            )));
        }
        Ok(Self { u, w })
    }
}

/// Alignment rate f0(u, w).
///
/// Evaluated in the product form `w (u - w)(u + w) / u^2 * exp(-beta^2 u^2)`,
/// which is exactly odd in w and exactly zero on the rays w = 0, +-u.
///
/// Errors with [`Error::Domain`] for u <= 0.
pub fn alignment(u: f64, w: f64, beta: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("alignment requires u > 0, got u = {u}")));
    }
    Ok(alignment_unchecked(u, w, beta))
}

/// Guarded alignment for the PDE right-hand side: returns 0 below
/// [`DENSITY_FLOOR`] so the depletion zone (u -> 0 with |w| <= u) is handled
/// without a 0/0.
#[inline]
pub fn alignment_clamped(u: f64, w: f64, beta: f64) -> f64 {
    if u < DENSITY_FLOOR {
        0.0
    } else {
        alignment_unchecked(u, w, beta)
    }
}

#[inline]
fn alignment_unchecked(u: f64, w: f64, beta: f64) -> f64 {
    let bu = beta * u;
    w * ((u - w) * (u + w)) / (u * u) * (-bu * bu).exp()
}

/// Exact partial derivatives (df0/du, df0/dw) of the alignment rate.
///
/// At the equilibrium rays these reduce to the closed forms used by the
/// linearization: (0, g) at w = 0 and (+-2g, -2g) at w = +-u, with
/// g = exp(-beta^2 u^2).
pub fn alignment_partials(u: f64, w: f64, beta: f64) -> Result<(f64, f64)> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!(
            "alignment_partials requires u > 0, got u = {u}"
        )));
    }
    let r2 = (w / u) * (w / u);
    let damp = (-(beta * u) * (beta * u)).exp();
    let f_u = damp * (2.0 * w * r2 / u - 2.0 * beta * beta * u * w * (1.0 - r2));
    let f_w = damp * (1.0 - 3.0 * r2);
    Ok((f_u, f_w))
}
