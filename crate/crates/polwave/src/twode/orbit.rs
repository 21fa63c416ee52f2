//! Orbit integration in the reduced phase space and the shooting bisection
//! for the inversion-wave speed.
//!
//! Trajectories launched along the unstable manifold of the aligned saddle
//! (U3, U3, 0) either run into the central equilibrium (monotonically for
//! fast speeds, spiraling inside the oscillatory band) or blow up after
//! passing the opposed saddle. The switch between spiraling in and escaping
//! happens at exactly one speed in (1, c*): the inversion-wave speed, which
//! the bisection brackets to a requested width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Halt, Integrator};
use crate::twode::cubic::critical_speeds;
use crate::twode::{reduced_rhs_clamped, ReducedState, WaveSpec};

/// Qualitative outcome of an integrated orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitClass {
    /// Entered the capture ball around the central equilibrium after the
    /// polarization changed sign: an oscillatory approach.
    SpiralIn,
    /// Entered the capture ball with the polarization staying one-signed.
    MonotoneIn,
    /// Entered the ball around the opposed saddle (U2, -U2, 0).
    HitOpposite,
    /// Left the escape radius or the admissible half space.
    Escape,
    /// Ran out of integration span without any event.
    Inconclusive,
}

/// Outcome with the terminal state and the wave-variable value it occurred
/// at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitOutcome {
    pub class: OrbitClass,
    pub state: ReducedState,
    pub xi: f64,
}

/// An integrated orbit: samples at every accepted step plus the outcome.
#[derive(Debug, Clone)]
pub struct OrbitRun {
    pub outcome: OrbitOutcome,
    /// (xi, state) at each accepted step, starting with the initial point.
    pub trajectory: Vec<(f64, ReducedState)>,
}

/// Event geometry and integration limits for orbit classification.
#[derive(Debug, Clone)]
pub struct OrbitSettings {
    /// Radius of the capture ball around (U1, 0, 0).
    pub capture_radius: f64,
    /// Radius of the ball around (U2, -U2, 0); `None` disables the event
    /// (required during shooting, where grazing passes are expected).
    pub opposite_radius: Option<f64>,
    /// Norm beyond which the orbit counts as escaped.
    pub escape_radius: f64,
    /// Integration span in the wave variable.
    pub max_xi: f64,
    /// Relative offset of the start point along the unstable eigenvector.
    pub start_offset: f64,
    /// Polarization undershoot below which an approach counts as spiraling.
    pub spiral_w_tol: f64,
    pub integrator: Integrator,
}

impl OrbitSettings {
    /// Defaults derived from the equilibrium geometry of `spec`: capture
    /// radius 1e-3 U1 (both target balls), escape radius 1e3 max(U1, U2, U3).
    pub fn for_spec(spec: &WaveSpec) -> Result<Self> {
        let u1 = spec.u1()?;
        let u2 = spec.u2()?;
        let u3 = spec.u3()?;
        if !(u1 > 0.0) {
            return Err(Error::Domain(format!("gauge density u1 = {u1} must be positive")));
        }
        let r_cap = 1e-3 * u1;
        Ok(Self {
            capture_radius: r_cap,
            opposite_radius: Some(r_cap),
            escape_radius: 1e3 * u1.max(u2.abs()).max(u3.abs()),
            max_xi: 1e4,
            start_offset: 1e-6,
            spiral_w_tol: 1e-6 * u1,
            integrator: Integrator::default(),
        })
    }
}

/// Start point on the unstable manifold of the aligned saddle (U3, U3, 0),
/// offset along the analytic unstable eigenvector and oriented toward
/// decreasing polarization.
///
/// The linearization there has exactly one positive scaled eigenvalue
/// mu = -((1+c) - sqrt((1+c)^2 + 8 a g))/2 with eigenvector
/// (1, c + mu, lambda (c + mu)), lambda = mu / a.
pub fn unstable_start(spec: &WaveSpec, offset_rel: f64) -> Result<ReducedState> {
    let u3 = spec.u3()?;
    if !(u3 > 0.0) {
        return Err(Error::Domain(format!(
            "aligned equilibrium density u3 = {u3} must be positive; need c > 1 with positive gauge"
        )));
    }
    let g = (-(spec.beta * u3) * (spec.beta * u3)).exp();
    let half = 0.5 * (1.0 + spec.c);
    let mu = -half + (half * half + 2.0 * spec.a * g).sqrt();
    debug_assert!(mu > 0.0);
    let lambda = mu / spec.a;
    let v = [1.0, spec.c + mu, lambda * (spec.c + mu)];
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    // orient toward decreasing W: v[1] = c + mu > 0 for c > 1, so negate
    let scale = -offset_rel * u3 * std::f64::consts::SQRT_2 / norm;
    Ok(ReducedState::new(
        u3 + scale * v[0],
        u3 + scale * v[1],
        scale * v[2],
    ))
}

const EV_CAPTURE: usize = 0;
const EV_ESCAPE: usize = 1;
const EV_FLOOR: usize = 2;
const EV_OPPOSITE: usize = 3;

fn run_orbit(
    spec: &WaveSpec,
    start: ReducedState,
    settings: &OrbitSettings,
    mut record: Option<&mut Vec<(f64, ReducedState)>>,
) -> Result<OrbitOutcome> {
    if !(spec.a > 0.0) {
        return Err(Error::SingularPerturbation(spec.a));
    }
    let u1 = spec.u1()?;
    let u2 = spec.u2()?;
    if !(start.u > 0.0) {
        return Err(Error::Domain(format!(
            "orbit start density {} must be positive",
            start.u
        )));
    }

    let r_cap = settings.capture_radius;
    let r_esc = settings.escape_radius;
    let floor = 1e-9 * u1;

    let capture = move |_: f64, y: &[f64; 3]| {
        let (du, dw, dv) = (y[0] - u1, y[1], y[2]);
        (du * du + dw * dw + dv * dv).sqrt() - r_cap
    };
    let escape = move |_: f64, y: &[f64; 3]| {
        r_esc - (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt()
    };
    let floor_ev = move |_: f64, y: &[f64; 3]| y[0] - floor;
    let r_opp = settings.opposite_radius;
    let opposite = move |_: f64, y: &[f64; 3]| match r_opp {
        Some(r) => {
            let (du, dw, dv) = (y[0] - u2, y[1] + u2, y[2]);
            (du * du + dw * dw + dv * dv).sqrt() - r
        }
        None => 1.0,
    };

    let events: [&dyn Fn(f64, &[f64; 3]) -> f64; 4] = [&capture, &escape, &floor_ev, &opposite];

    let mut w_min = f64::INFINITY;
    let rhs = |_: f64, y: &[f64; 3]| reduced_rhs_clamped(y, spec);
    let sol = settings.integrator.solve(
        rhs,
        0.0,
        start.to_array(),
        settings.max_xi,
        &events,
        |xi, y| {
            w_min = w_min.min(y[1]);
            if let Some(tr) = record.as_deref_mut() {
                tr.push((xi, ReducedState::from_array(*y)));
            }
        },
    )?;

    Ok(match sol.halt {
        Halt::Event { index: EV_CAPTURE, t, y } => OrbitOutcome {
            class: if w_min < -settings.spiral_w_tol {
                OrbitClass::SpiralIn
            } else {
                OrbitClass::MonotoneIn
            },
            state: ReducedState::from_array(y),
            xi: t,
        },
        Halt::Event { index: EV_ESCAPE, t, y } | Halt::Event { index: EV_FLOOR, t, y } => {
            OrbitOutcome { class: OrbitClass::Escape, state: ReducedState::from_array(y), xi: t }
        }
        Halt::Event { index: EV_OPPOSITE, t, y } => OrbitOutcome {
            class: OrbitClass::HitOpposite,
            state: ReducedState::from_array(y),
            xi: t,
        },
        Halt::Event { index, .. } => unreachable!("unknown event index {index}"),
        Halt::End { t, y } => OrbitOutcome {
            class: OrbitClass::Inconclusive,
            state: ReducedState::from_array(y),
            xi: t,
        },
    })
}

/// Integrate one orbit of the reduced system with event classification,
/// recording the trajectory at every accepted step.
pub fn integrate_orbit(
    spec: &WaveSpec,
    start: ReducedState,
    settings: &OrbitSettings,
) -> Result<OrbitRun> {
    let mut trajectory = Vec::new();
    let outcome = run_orbit(spec, start, settings, Some(&mut trajectory))?;
    Ok(OrbitRun { outcome, trajectory })
}

/// Orbit class of the saddle's unstable-manifold trajectory at speed `c`,
/// without recording the trajectory. The opposed-saddle event is disabled so
/// grazing passes near (U2, -U2, 0) resolve into spiral-in or escape.
fn classify_speed(c: f64, a: f64, beta: f64, u1: f64) -> Result<OrbitClass> {
    let spec = WaveSpec::with_gauge(c, a, u1, beta)?;
    let mut settings = OrbitSettings::for_spec(&spec)?;
    settings.opposite_radius = None;
    let start = unstable_start(&spec, settings.start_offset)?;
    Ok(run_orbit(&spec, start, &settings, None)?.class)
}

/// Options for the inversion-speed bisection.
#[derive(Debug, Clone)]
pub struct ShootingOptions {
    /// Final bracket width.
    pub bracket_tol: f64,
    /// Lower end of the initial bracket, as an offset above 1.
    pub c_lo_margin: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { bracket_tol: 1e-7, c_lo_margin: 1e-3 }
    }
}

/// A bracket around the inversion-wave speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionBracket {
    pub c_lo: f64,
    pub c_hi: f64,
    pub outcome_lo: OrbitClass,
    pub outcome_hi: OrbitClass,
    /// Fast critical speed bounding the search interval from above.
    pub c_star: f64,
    pub bisections: usize,
}

impl InversionBracket {
    pub fn width(&self) -> f64 {
        self.c_hi - self.c_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.c_lo + self.c_hi)
    }
}

/// Bracket the inversion-wave speed for diffusion `a` by bisecting the
/// spiral-in/escape dichotomy of the saddle connection over (1, c*(a)).
///
/// The gauge is U1 = `u1`; the effective diffusion entering the critical
/// speed is a exp(-beta^2 u1^2).
pub fn inversion_speed(
    a: f64,
    beta: f64,
    u1: f64,
    opts: &ShootingOptions,
) -> Result<InversionBracket> {
    if !(a > 0.0) {
        return Err(Error::SingularPerturbation(a));
    }
    if !(u1 > 0.0) {
        return Err(Error::Domain(format!("gauge density u1 = {u1} must be positive")));
    }
    let ag = a * (-(beta * u1) * (beta * u1)).exp();
    let c_star = critical_speeds(ag)?.c_fast;

    let mut c_lo = 1.0 + opts.c_lo_margin;
    let mut c_hi = c_star;
    if c_lo >= c_hi {
        return Err(Error::Config(format!(
            "empty shooting interval: 1 + {} >= c* = {c_star}",
            opts.c_lo_margin
        )));
    }

    let lo_class = classify_speed(c_lo, a, beta, u1)?;
    let hi_class = classify_speed(c_hi, a, beta, u1)?;
    let is_in = |cl: OrbitClass| matches!(cl, OrbitClass::SpiralIn | OrbitClass::MonotoneIn);
    if lo_class != OrbitClass::Escape || !is_in(hi_class) {
        return Err(Error::Config(format!(
            "shooting dichotomy not detected: c = {c_lo} gave {lo_class:?}, c = {c_hi} gave {hi_class:?}"
        )));
    }

    let mut outcome_lo = lo_class;
    let mut outcome_hi = hi_class;
    let mut bisections = 0;
    while c_hi - c_lo > opts.bracket_tol {
        let mid = 0.5 * (c_lo + c_hi);
        let class = classify_speed(mid, a, beta, u1)?;
        bisections += 1;
        if is_in(class) {
            c_hi = mid;
            outcome_hi = class;
        } else if class == OrbitClass::Escape {
            c_lo = mid;
            outcome_lo = class;
        } else {
            return Err(Error::Config(format!(
                "orbit at c = {mid} classified {class:?}; cannot bisect"
            )));
        }
        if bisections > 200 {
            return Err(Error::Config("bisection failed to converge".into()));
        }
    }

    Ok(InversionBracket { c_lo, c_hi, outcome_lo, outcome_hi, c_star, bisections })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twode::reduced_rhs;

    const A: f64 = 0.1;

    fn spec_at(c: f64) -> WaveSpec {
        WaveSpec::with_gauge(c, A, 1.0, 0.0).unwrap()
    }

    #[test]
    fn unstable_start_points_along_the_flow() {
        let spec = spec_at(1.4);
        let start = unstable_start(&spec, 1e-6).unwrap();
        let u3 = spec.u3().unwrap();
        assert!(start.w < u3 && start.u < u3);
        // the field at the start must carry the state further from the saddle
        let d = reduced_rhs(&start, &spec).unwrap();
        let dist0 = ((start.u - u3).powi(2) + (start.w - u3).powi(2) + start.v.powi(2)).sqrt();
        let h = 1e-3 * dist0 / (d.u.powi(2) + d.w.powi(2) + d.v.powi(2)).sqrt();
        let next = ReducedState::new(start.u + h * d.u, start.w + h * d.w, start.v + h * d.v);
        let dist1 = ((next.u - u3).powi(2) + (next.w - u3).powi(2) + next.v.powi(2)).sqrt();
        assert!(dist1 > dist0, "flow does not leave the saddle: {dist0} -> {dist1}");
    }

    #[test]
    fn fast_speed_gives_monotone_connection() {
        let bracket = inversion_speed(A, 0.0, 1.0, &ShootingOptions::default()).unwrap();
        let c = bracket.c_star + 0.3;
        let spec = spec_at(c);
        let mut settings = OrbitSettings::for_spec(&spec).unwrap();
        settings.opposite_radius = None;
        let start = unstable_start(&spec, settings.start_offset).unwrap();
        let run = integrate_orbit(&spec, start, &settings).unwrap();
        assert_eq!(run.outcome.class, OrbitClass::MonotoneIn, "{:?}", run.outcome);
        // terminal state sits on the capture ball
        let u1 = spec.u1().unwrap();
        let s = run.outcome.state;
        let dist = ((s.u - u1).powi(2) + s.w.powi(2) + s.v.powi(2)).sqrt();
        assert!((dist - settings.capture_radius).abs() < 1e-6 * u1);
    }

    #[test]
    fn band_speeds_spiral_and_low_speeds_escape() {
        let bracket = inversion_speed(A, 0.0, 1.0, &ShootingOptions::default()).unwrap();
        assert!(bracket.width() <= 1e-7);
        assert!(bracket.c_lo > 1.0 && bracket.c_hi < bracket.c_star);
        assert_eq!(bracket.outcome_lo, OrbitClass::Escape);
        assert_eq!(bracket.outcome_hi, OrbitClass::SpiralIn);

        let mid_band = 0.5 * (bracket.c_hi + bracket.c_star);
        assert_eq!(classify(mid_band), OrbitClass::SpiralIn);
        let below = 0.5 * (1.0 + bracket.c_lo);
        assert_eq!(classify(below), OrbitClass::Escape);
    }

    fn classify(c: f64) -> OrbitClass {
        let spec = spec_at(c);
        let mut settings = OrbitSettings::for_spec(&spec).unwrap();
        settings.opposite_radius = None;
        let start = unstable_start(&spec, settings.start_offset).unwrap();
        integrate_orbit(&spec, start, &settings).unwrap().outcome.class
    }

    #[test]
    fn near_connection_orbit_hits_opposite_saddle() {
        let bracket = inversion_speed(A, 0.0, 1.0, &ShootingOptions::default()).unwrap();
        // with the opposed-saddle ball enabled, a speed inside the bracket
        // passes within the capture radius of (U2, -U2, 0)
        let spec = spec_at(bracket.midpoint());
        let settings = OrbitSettings::for_spec(&spec).unwrap();
        let start = unstable_start(&spec, settings.start_offset).unwrap();
        let run = integrate_orbit(&spec, start, &settings).unwrap();
        assert_eq!(run.outcome.class, OrbitClass::HitOpposite, "{:?}", run.outcome);
    }

    #[test]
    fn trajectory_keeps_hyperplane_gauge() {
        // cU - W + aU' must stay equal to C1 along reduced trajectories
        let spec = spec_at(1.35);
        let mut settings = OrbitSettings::for_spec(&spec).unwrap();
        settings.opposite_radius = None;
        let start = unstable_start(&spec, settings.start_offset).unwrap();
        let run = integrate_orbit(&spec, start, &settings).unwrap();
        for &(_, s) in run.trajectory.iter().step_by(7) {
            let du = reduced_rhs(&s, &spec).map(|d| d.u);
            if let Ok(du) = du {
                let c1 = spec.c * s.u - s.w + spec.a * du;
                assert!(
                    (c1 - spec.c1).abs() < 1e-9 * (1.0 + spec.c1.abs()),
                    "gauge drift: {c1} vs {}",
                    spec.c1
                );
            }
        }
    }

    #[test]
    fn inversion_speed_is_monotone_in_diffusion() {
        let mut prev = 1.0;
        for a in [0.01, 0.05, 0.1, 0.2, 0.35, 0.5] {
            let b = inversion_speed(a, 0.0, 1.0, &ShootingOptions::default()).unwrap();
            let mid = b.midpoint();
            assert!(mid > 1.0 && mid < b.c_star, "ctilde({a}) = {mid} outside (1, c*)");
            assert!(mid > prev, "ctilde({a}) = {mid} not above {prev}");
            prev = mid;
        }
    }

    #[test]
    fn bracket_tightens_with_tolerance() {
        let coarse = inversion_speed(A, 0.0, 1.0, &ShootingOptions { bracket_tol: 1e-4, c_lo_margin: 1e-3 })
            .unwrap();
        let fine = inversion_speed(A, 0.0, 1.0, &ShootingOptions::default()).unwrap();
        assert!(fine.width() < coarse.width());
        assert!(fine.c_lo >= coarse.c_lo - 1e-12 && fine.c_hi <= coarse.c_hi + 1e-12);
    }
}

