//! Traveling-wave ODE systems and their structure.
//!
//! In the wave variable `xi = x - c t` the PDE reduces to a fast-slow system
//! of four first-order equations for (U, W, Z = U', V = W'). Integrating the
//! U-equation once restricts the flow to the invariant hyperplane
//! `a Z + c U - W = C1`, leaving a three-dimensional reduced system in
//! (U, W, V). This module provides
//!
//! * the right-hand sides of the hyperbolic-limit, full, and reduced systems,
//! * the critical manifold of the fast-slow splitting and the layer problem,
//! * the characteristic cubic of the reduced linearization, closed-form
//!   eigenvalues at the polarized equilibria, eigenvalue-region
//!   classification, and the critical speeds bounding the oscillatory band
//!   ([`cubic`]),
//! * orbit integration with outcome classification and the shooting
//!   bisection that brackets the inversion-wave speed ([`orbit`]).

pub mod cubic;
pub mod orbit;

pub use cubic::{
    bifurcation_raster, characteristic_cubic, classify_equilibrium, critical_speeds, hopf_locus,
    outer_eigenvalues, CriticalSpeeds, CubicSpec, EigenSet, HopfPoint, PolarizedSide, RasterPoint,
    Sign, Spectrum,
};
pub use orbit::{
    integrate_orbit, inversion_speed, unstable_start, InversionBracket, OrbitClass, OrbitOutcome,
    OrbitRun, OrbitSettings, ShootingOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{alignment, alignment_clamped};

/// Threshold below which |c^2 - 1| counts as the singular particle speed.
const SPEED_SINGULARITY_TOL: f64 = 1e-12;

/// State of the full four-dimensional traveling-wave system, defined on the
/// half space U > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    pub u: f64,
    pub w: f64,
    /// U' with respect to the wave variable.
    pub z: f64,
    /// W' with respect to the wave variable.
    pub v: f64,
}

/// State of the reduced system on an invariant hyperplane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub u: f64,
    pub w: f64,
    /// W' with respect to the wave variable.
    pub v: f64,
}

impl ReducedState {
    pub fn new(u: f64, w: f64, v: f64) -> Self {
        Self { u, w, v }
    }

    pub(crate) fn to_array(self) -> [f64; 3] {
        [self.u, self.w, self.v]
    }

    pub(crate) fn from_array(y: [f64; 3]) -> Self {
        Self { u: y[0], w: y[1], v: y[2] }
    }
}

/// A traveling-wave problem instance: speed, diffusion, hyperplane constant,
/// and crowding parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSpec {
    pub c: f64,
    pub a: f64,
    /// Constant of integration of the invariant hyperplane a Z + c U - W.
    pub c1: f64,
    pub beta: f64,
}

impl WaveSpec {
    pub fn new(c: f64, a: f64, c1: f64, beta: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::SingularPerturbation(a));
        }
        if !c.is_finite() || !c1.is_finite() || !beta.is_finite() || beta < 0.0 {
            return Err(Error::Config(format!(
                "invalid wave spec: c = {c}, c1 = {c1}, beta = {beta}"
            )));
        }
        Ok(Self { c, a, c1, beta })
    }

    /// Gauge the hyperplane by the density U1 of the non-polarized
    /// equilibrium: C1 = c U1.
    pub fn with_gauge(c: f64, a: f64, u1: f64, beta: f64) -> Result<Self> {
        if !(u1 > 0.0) {
            return Err(Error::Domain(format!("gauge density u1 = {u1} must be positive")));
        }
        Self::new(c, a, c * u1, beta)
    }

    /// Density of the non-polarized equilibrium (U1, 0, 0).
    pub fn u1(&self) -> Result<f64> {
        if self.c == 0.0 {
            return Err(Error::DegenerateSpeed(self.c));
        }
        Ok(self.c1 / self.c)
    }

    /// Density of the opposed polarized equilibrium (U2, -U2, 0).
    pub fn u2(&self) -> Result<f64> {
        if (self.c + 1.0).abs() < SPEED_SINGULARITY_TOL {
            return Err(Error::DegenerateSpeed(self.c));
        }
        Ok(self.c1 / (self.c + 1.0))
    }

    /// Density of the aligned polarized equilibrium (U3, U3, 0).
    pub fn u3(&self) -> Result<f64> {
        if (self.c - 1.0).abs() < SPEED_SINGULARITY_TOL {
            return Err(Error::DegenerateSpeed(self.c));
        }
        Ok(self.c1 / (self.c - 1.0))
    }
}

fn check_nonsingular_speed(c: f64) -> Result<f64> {
    let denom = 1.0 - c * c;
    if denom.abs() < SPEED_SINGULARITY_TOL {
        return Err(Error::SingularSpeed(c));
    }
    Ok(denom)
}

/// Right-hand side of the hyperbolic-limit (a = 0) traveling-wave system:
///
/// ```text
/// U' = f0 / (1 - c^2),    W' = c f0 / (1 - c^2)
/// ```
///
/// All orbits are straight lines of slope 1/c in the W-U plane.
pub fn hyperbolic_rhs(u: f64, w: f64, c: f64, beta: f64) -> Result<(f64, f64)> {
    let denom = check_nonsingular_speed(c)?;
    let f = alignment(u, w, beta)?;
    Ok((f / denom, c * f / denom))
}

/// Right-hand side of the full four-dimensional system
///
/// ```text
/// U' = Z,  W' = V,  a Z' = V - c Z,  a V' = Z - c V - f0(U, W)
/// ```
///
/// with the division by `a` performed. Requires `spec.a > 0`.
pub fn full_rhs(s: &FullState, spec: &WaveSpec) -> Result<FullState> {
    if !(spec.a > 0.0) {
        return Err(Error::SingularPerturbation(spec.a));
    }
    let f = alignment(s.u, s.w, spec.beta)?;
    Ok(FullState {
        u: s.z,
        w: s.v,
        z: (s.v - spec.c * s.z) / spec.a,
        v: (s.z - spec.c * s.v - f) / spec.a,
    })
}

/// Right-hand side of the reduced three-dimensional system on the invariant
/// hyperplane, with Z eliminated as (C1 - c U + W)/a:
///
/// ```text
/// U' = (-c U + W + C1)/a
/// W' = V
/// V' = (-c U + W + C1)/a^2 - c V / a - f0(U, W)/a
/// ```
pub fn reduced_rhs(s: &ReducedState, spec: &WaveSpec) -> Result<ReducedState> {
    if !(spec.a > 0.0) {
        return Err(Error::SingularPerturbation(spec.a));
    }
    let f = alignment(s.u, s.w, spec.beta)?;
    Ok(ReducedState::from_array(reduced_rhs_arr(
        &s.to_array(),
        spec.c,
        spec.a,
        spec.c1,
        f,
    )))
}

/// Total (guarded) variant used inside the orbit integrator: the alignment
/// term is evaluated in clamped form so escaping trajectories that leave the
/// half space produce finite values until the domain-exit event fires.
#[inline]
pub(crate) fn reduced_rhs_clamped(y: &[f64; 3], spec: &WaveSpec) -> [f64; 3] {
    let f = alignment_clamped(y[0], y[1], spec.beta);
    reduced_rhs_arr(y, spec.c, spec.a, spec.c1, f)
}

#[inline]
fn reduced_rhs_arr(y: &[f64; 3], c: f64, a: f64, c1: f64, f: f64) -> [f64; 3] {
    let slope = -c * y[0] + y[1] + c1;
    [slope / a, y[2], slope / (a * a) - c * y[2] / a - f / a]
}

/// Point of the critical manifold above (U, W): the graph
/// `h(U, W) = f0(U, W)/(1 - c^2) * (1, c)` giving (Z, V).
pub fn slow_manifold_lift(u: f64, w: f64, c: f64, beta: f64) -> Result<(f64, f64)> {
    let denom = check_nonsingular_speed(c)?;
    let f = alignment(u, w, beta)?;
    let q = f / denom;
    Ok((q, c * q))
}

/// Equilibrium of the layer problem with frozen (Ubar, Wbar):
///
/// ```text
/// Z_inf = fbar/(1 - c^2),   V_inf = c fbar/(1 - c^2)
/// ```
///
/// These vanish exactly when fbar = f0(Ubar, Wbar) = 0 and always lie on the
/// critical manifold.
pub fn layer_equilibrium(ubar: f64, wbar: f64, c: f64, beta: f64) -> Result<(f64, f64)> {
    let denom = check_nonsingular_speed(c)?;
    let fbar = alignment(ubar, wbar, beta)?;
    Ok((fbar / denom, c * fbar / denom))
}

/// Eigenvalues (-c + 1, -c - 1) of the layer problem's coefficient matrix.
///
/// Both negative for c > 1 (attracting manifold), both positive for c < -1
/// (repelling), opposite signs for |c| < 1 (saddle type).
pub fn layer_eigenvalues(c: f64) -> (f64, f64) {
    (-c + 1.0, -c - 1.0)
}

/// Heteroclinic connection families, one per admissible speed range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectionCase {
    /// W = 0 to W = U, for c < -1.
    ZeroToPlus,
    /// W = U to W = 0, for -1 < c < 0.
    PlusToZero,
    /// W = 0 to W = -U, for 0 < c < 1.
    ZeroToMinus,
    /// W = -U to W = 0, for c > 1.
    MinusToZero,
}

/// Which connection exists at wave speed `c`; the excluded speeds
/// {-1, 0, 1} are degenerate.
pub fn expected_connection(c: f64) -> Result<ConnectionCase> {
    if c == 0.0 || c.abs() == 1.0 {
        return Err(Error::DegenerateSpeed(c));
    }
    Ok(if c < -1.0 {
        ConnectionCase::ZeroToPlus
    } else if c < 0.0 {
        ConnectionCase::PlusToZero
    } else if c < 1.0 {
        ConnectionCase::ZeroToMinus
    } else {
        ConnectionCase::MinusToZero
    })
}

/// Plateau densities behind a front of speed `c` invading a non-polarized
/// state of density `u1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauLevels {
    /// Density of the state polarized against the direction of motion:
    /// U2 = U1 c/(c + 1). Exists for every admissible c > 0.
    pub u2: f64,
    /// Density of the state polarized along the direction of motion:
    /// U3 = U1 c/(c - 1). Only fast fronts (c > 1) leave this state behind.
    pub u3: Option<f64>,
}

/// Mass-balance plateau relations for a front of speed `c > 0`, `c != 1`,
/// invading a non-polarized state of density `u1 > 0`. A front swallowing
/// particles at rate `c U1` and shedding a fully polarized state fixes the
/// plateau densities.
pub fn plateau_relations(c: f64, u1: f64) -> Result<PlateauLevels> {
    if !(u1 > 0.0) {
        return Err(Error::Domain(format!("ahead density u1 = {u1} must be positive")));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("front speed c = {c} must be positive")));
    }
    if c == 1.0 {
        return Err(Error::DegenerateSpeed(c));
    }
    let u2 = u1 * c / (c + 1.0);
    let u3 = (c > 1.0).then(|| u1 * c / (c - 1.0));
    Ok(PlateauLevels { u2, u3 })
}

/// Mass balance across an inversion front of speed `ctilde > 1`.
///
/// `u_behind` is the density of the fully polarized state the front leaves
/// behind (aligned with its motion, the larger plateau); the returned value
/// is the density of the oppositely polarized state it consumes ahead:
/// `u_ahead = u_behind (ctilde - 1)/(ctilde + 1)`.
pub fn inversion_relation(ctilde: f64, u_behind: f64) -> Result<f64> {
    if !(ctilde > 1.0) {
        return Err(Error::Domain(format!(
            "inversion-front speed ctilde = {ctilde} must exceed 1"
        )));
    }
    if !(u_behind > 0.0) {
        return Err(Error::Domain(format!("density {u_behind} must be positive")));
    }
    Ok(u_behind * (ctilde - 1.0) / (ctilde + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(c: f64, a: f64, c1: f64) -> WaveSpec {
        WaveSpec::new(c, a, c1, 0.0).unwrap()
    }

    #[test]
    fn hyperbolic_rhs_examples() {
        assert_eq!(hyperbolic_rhs(1.0, 0.0, 2.0, 0.0).unwrap(), (0.0, 0.0));
        let (du, dw) = hyperbolic_rhs(1.0, 0.5, 2.0, 0.0).unwrap();
        assert_relative_eq!(du, -0.125, max_relative = 1e-14);
        assert_relative_eq!(dw, -0.25, max_relative = 1e-14);
        assert_eq!(hyperbolic_rhs(1.0, 1.0, 0.5, 1.0).unwrap(), (0.0, 0.0));
        assert!(matches!(
            hyperbolic_rhs(1.0, 0.5, 1.0, 0.0),
            Err(Error::SingularSpeed(_))
        ));
    }

    #[test]
    fn full_rhs_examples() {
        // zeros of f0 on the U-axis are equilibria for any beta
        let s = FullState { u: 0.7, w: 0.0, z: 0.0, v: 0.0 };
        let d = full_rhs(&s, &spec(2.0, 1.0, 1.4)).unwrap();
        assert_eq!((d.u, d.w, d.z, d.v), (0.0, 0.0, 0.0, 0.0));

        let s = FullState { u: 1.0, w: 0.5, z: 0.0, v: 0.0 };
        let d = full_rhs(&s, &spec(2.0, 1.0, 2.0)).unwrap();
        assert_eq!((d.u, d.w, d.z), (0.0, 0.0, 0.0));
        assert_relative_eq!(d.v, -0.375, max_relative = 1e-14);

        // hand substitution: Z' = (V - cZ)/a = (0.6 - 0.6)/0.5,
        // V' = (Z - cV - f0)/a = (0.3 - 1.2 - 0)/0.5
        let s = FullState { u: 1.0, w: 1.0, z: 0.3, v: 0.6 };
        let d = full_rhs(&s, &spec(2.0, 0.5, 2.0)).unwrap();
        assert_eq!((d.u, d.w), (0.3, 0.6));
        assert_relative_eq!(d.z, 0.0, epsilon = 1e-15);
        assert_relative_eq!(d.v, -1.8, max_relative = 1e-14);

        let bad = WaveSpec::new(2.0, 0.0, 2.0, 0.0);
        assert!(matches!(bad, Err(Error::SingularPerturbation(_))));
    }

    #[test]
    fn reduced_rhs_examples() {
        // equilibrium on the U-axis at U1 = C1/c
        let sp = spec(2.0, 1.0, 2.0);
        let d = reduced_rhs(&ReducedState::new(1.0, 0.0, 0.0), &sp).unwrap();
        assert_eq!((d.u, d.w, d.v), (0.0, 0.0, 0.0));

        let d = reduced_rhs(&ReducedState::new(1.0, 0.5, 0.0), &sp).unwrap();
        assert_relative_eq!(d.u, 0.5, max_relative = 1e-14);
        assert_eq!(d.w, 0.0);
        assert_relative_eq!(d.v, 0.125, max_relative = 1e-12);

        // aligned equilibrium with (c-1) U3 = c U1
        let d = reduced_rhs(&ReducedState::new(2.0, 2.0, 0.0), &sp).unwrap();
        assert_eq!((d.u, d.w, d.v), (0.0, 0.0, 0.0));
    }

    #[test]
    fn manifold_lift_and_layer_equilibrium_agree() {
        assert_eq!(slow_manifold_lift(1.0, 0.0, 2.0, 0.0).unwrap(), (0.0, 0.0));
        let (z, v) = slow_manifold_lift(1.0, 0.5, 2.0, 0.0).unwrap();
        assert_relative_eq!(z, -0.125, max_relative = 1e-14);
        assert_relative_eq!(v, -0.25, max_relative = 1e-14);
        assert_eq!(slow_manifold_lift(3.0, -3.0, 0.5, 1.0).unwrap(), (0.0, 0.0));

        let (z, v) = layer_equilibrium(1.0, 0.5, 2.0, 0.0).unwrap();
        assert_relative_eq!(z, -0.125, max_relative = 1e-14);
        assert_relative_eq!(v, -0.25, max_relative = 1e-14);
        assert_eq!(layer_equilibrium(1.0, 0.0, 5.0, 0.2).unwrap(), (0.0, 0.0));
        let (z, v) = layer_equilibrium(2.0, 1.0, 3.0, 0.0).unwrap();
        assert_relative_eq!(z, -0.09375, max_relative = 1e-14);
        assert_relative_eq!(v, -0.28125, max_relative = 1e-14);
    }

    #[test]
    fn layer_eigenvalue_signs() {
        assert_eq!(layer_eigenvalues(2.0), (-1.0, -3.0));
        assert_eq!(layer_eigenvalues(0.0), (1.0, -1.0));
        assert_eq!(layer_eigenvalues(-2.0), (3.0, 1.0));
    }

    #[test]
    fn connection_taxonomy() {
        assert_eq!(expected_connection(2.0).unwrap(), ConnectionCase::MinusToZero);
        assert_eq!(expected_connection(0.5).unwrap(), ConnectionCase::ZeroToMinus);
        assert_eq!(expected_connection(-0.5).unwrap(), ConnectionCase::PlusToZero);
        assert_eq!(expected_connection(-2.0).unwrap(), ConnectionCase::ZeroToPlus);
        for c in [-1.0, 0.0, 1.0] {
            assert!(matches!(expected_connection(c), Err(Error::DegenerateSpeed(_))));
        }
    }

    #[test]
    fn plateau_relation_values() {
        let p = plateau_relations(2.0, 1.0).unwrap();
        assert_relative_eq!(p.u2, 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(p.u3.unwrap(), 2.0, max_relative = 1e-14);

        let p = plateau_relations(1.5, 2.0).unwrap();
        assert_relative_eq!(p.u2, 1.2, max_relative = 1e-14);
        assert_relative_eq!(p.u3.unwrap(), 6.0, max_relative = 1e-14);

        // infinitely fast fronts carry no density change
        let p = plateau_relations(1e12, 1.0).unwrap();
        assert_relative_eq!(p.u2, 1.0, max_relative = 1e-10);
        assert_relative_eq!(p.u3.unwrap(), 1.0, max_relative = 1e-10);

        // slow fronts only shed the opposed state
        let p = plateau_relations(0.5, 1.0).unwrap();
        assert_relative_eq!(p.u2, 1.0 / 3.0, max_relative = 1e-14);
        assert!(p.u3.is_none());

        assert!(plateau_relations(-0.5, 1.0).is_err());
        assert!(plateau_relations(1.0, 1.0).is_err());
    }

    #[test]
    fn inversion_relation_values() {
        assert_relative_eq!(inversion_relation(1.5, 1.0).unwrap(), 0.2, max_relative = 1e-14);
        assert_relative_eq!(inversion_relation(3.0, 2.0).unwrap(), 1.0, max_relative = 1e-14);
        assert!(inversion_relation(1.0 + 1e-12, 1.0).unwrap() < 1e-11);
        assert!(matches!(inversion_relation(1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(inversion_relation(0.5, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn wavespec_equilibria() {
        let sp = spec(2.0, 0.1, 2.0);
        assert_relative_eq!(sp.u1().unwrap(), 1.0);
        assert_relative_eq!(sp.u2().unwrap(), 2.0 / 3.0);
        assert_relative_eq!(sp.u3().unwrap(), 2.0);
    }

    proptest! {
        /// Points of the critical manifold are equilibria of the layer flow:
        /// lifting any (U, W) must zero the fast components of the full field.
        #[test]
        fn manifold_points_are_layer_equilibria(
            u in 0.05f64..5.0,
            frac in -1.0f64..1.0,
            c in prop_oneof![1.1f64..4.0, -4.0f64..-1.1, -0.9f64..0.9],
            a in 0.01f64..1.0,
            beta in 0.0f64..1.0,
        ) {
            let w = frac * u;
            let (z, v) = slow_manifold_lift(u, w, c, beta).unwrap();
            let d = full_rhs(
                &FullState { u, w, z, v },
                &WaveSpec::new(c, a, 0.0, beta).unwrap(),
            )
            .unwrap();
            let f = alignment(u, w, beta).unwrap();
            let scale = ((1.0 + f.abs()) / a).max(1.0);
            prop_assert!(d.z.abs() <= 1e-12 * scale);
            prop_assert!(d.v.abs() <= 1e-12 * scale);
        }

        /// Equilibria of the reduced flow are exactly the alignment zeros cut
        /// by the hyperplane gauge.
        #[test]
        fn reduced_equilibria_from_gauge(
            c in 1.05f64..4.0,
            a in 0.01f64..1.0,
            u1 in 0.1f64..3.0,
            beta in 0.0f64..1.0,
        ) {
            let sp = WaveSpec::with_gauge(c, a, u1, beta).unwrap();
            let (u2, u3) = (sp.u2().unwrap(), sp.u3().unwrap());
            for s in [
                ReducedState::new(u1, 0.0, 0.0),
                ReducedState::new(u2, -u2, 0.0),
                ReducedState::new(u3, u3, 0.0),
            ] {
                let d = reduced_rhs(&s, &sp).unwrap();
                let scale = (1.0 + u3.abs()) / (a * a);
                prop_assert!(d.u.abs() <= 1e-12 * scale);
                prop_assert!(d.w.abs() <= 1e-12 * scale);
                prop_assert!(d.v.abs() <= 1e-11 * scale);
            }
        }
    }
}
