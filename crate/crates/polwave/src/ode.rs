//! Adaptive Dormand-Prince 5(4) integration with event detection.
//!
//! The traveling-wave systems are non-stiff for moderate diffusion but carry
//! 1/a and 1/a^2 factors, so step adaptivity is required for the shooting
//! dichotomy to be resolved reliably. Events are scalar functions of the
//! state that halt the integration when they cross from positive to
//! non-positive; the crossing is localized inside the step by bisection on a
//! cubic Hermite interpolant.

use crate::error::{Error, Result};

/// Scalar event function. The solver halts the first time the value crosses
/// from > 0 to <= 0 along the trajectory.
pub type EventFn<'a, const N: usize> = &'a dyn Fn(f64, &[f64; N]) -> f64;

/// Why the integration stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Halt<const N: usize> {
    /// An event function crossed zero; carries the event index and the
    /// localized crossing point.
    Event { index: usize, t: f64, y: [f64; N] },
    /// The end of the integration interval was reached.
    End { t: f64, y: [f64; N] },
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub halt: Halt<N>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Dormand-Prince 5(4) integrator configuration.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen from the interval length when `None`.
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: None,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

// Butcher tableau, Dormand & Prince (1980).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights equal the last A row (FSAL); these are the 4th-order ones.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Integrator {
    /// Integrate `dy/dt = rhs(t, y)` from `(t0, y0)` toward `t_end > t0`.
    ///
    /// `observer` receives the initial point and every accepted step
    /// (including the localized event point, which replaces the overshooting
    /// step end).
    pub fn solve<const N: usize>(
        &self,
        rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        events: &[EventFn<'_, N>],
        mut observer: impl FnMut(f64, &[f64; N]),
    ) -> Result<Solution<N>> {
        assert!(t_end > t0, "integration interval must be forward");
        let mut t = t0;
        let mut y = y0;
        let mut f = rhs(t, &y);
        observer(t, &y);

        // An event may already be active at the initial point.
        for (index, ev) in events.iter().enumerate() {
            if ev(t, &y) <= 0.0 {
                return Ok(Solution {
                    halt: Halt::Event { index, t, y },
                    accepted_steps: 0,
                    rejected_steps: 0,
                });
            }
        }

        let mut g_prev: Vec<f64> = events.iter().map(|ev| ev(t, &y)).collect();
        let mut h = self
            .h_init
            .unwrap_or(((t_end - t0) / 1e4).min(1e-2))
            .min(self.h_max);
        let mut accepted = 0usize;
        let mut rejected = 0usize;

        for _ in 0..self.max_steps {
            if t >= t_end {
                return Ok(Solution {
                    halt: Halt::End { t, y },
                    accepted_steps: accepted,
                    rejected_steps: rejected,
                });
            }
            h = h.min(t_end - t).min(self.h_max);
            if h < self.h_min {
                return Err(Error::Stiffness { t, h });
            }

            let mut k = [[0.0; N]; 7];
            k[0] = f;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..N {
                            ys[i] += h * a * kj[i];
                        }
                    }
                }
                k[s] = rhs(t + C[s] * h, &ys);
            }

            // 5th-order solution is stage 7's argument; recompute it directly.
            let mut y_new = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                let a = A[6][j];
                if a != 0.0 {
                    for i in 0..N {
                        y_new[i] += h * a * kj[i];
                    }
                }
            }

            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    let db = (if j < 6 { A[6][j] } else { 0.0 }) - B4[j];
                    e += db * kj[i];
                }
                e *= h;
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            err = (err / N as f64).sqrt();

            if !err.is_finite() {
                rejected += 1;
                h *= 0.25;
                continue;
            }
            if err > 1.0 {
                rejected += 1;
                h *= (0.9 * err.powf(-0.2)).max(0.2);
                continue;
            }

            // Accepted. FSAL: k7 is the derivative at the new point.
            let f_new = k[6];
            let t_new = t + h;

            let mut fired: Option<(usize, f64)> = None; // (event, theta)
            for (index, ev) in events.iter().enumerate() {
                let g1 = ev(t_new, &y_new);
                if g_prev[index] > 0.0 && g1 <= 0.0 {
                    let theta = locate_crossing(ev, t, h, &y, &f, &y_new, &f_new);
                    if fired.map_or(true, |(_, th)| theta < th) {
                        fired = Some((index, theta));
                    }
                }
                g_prev[index] = g1;
            }

            if let Some((index, theta)) = fired {
                let (te, ye) = hermite(t, h, &y, &f, &y_new, &f_new, theta);
                observer(te, &ye);
                return Ok(Solution {
                    halt: Halt::Event { index, t: te, y: ye },
                    accepted_steps: accepted + 1,
                    rejected_steps: rejected,
                });
            }

            t = t_new;
            y = y_new;
            f = f_new;
            accepted += 1;
            observer(t, &y);
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        }

        Err(Error::Instability(format!(
            "integration exceeded {} steps at t = {t}",
            self.max_steps
        )))
    }
}

/// Cubic Hermite interpolation on an accepted step. `theta` in [0, 1].
fn hermite<const N: usize>(
    t: f64,
    h: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    y1: &[f64; N],
    f1: &[f64; N],
    theta: f64,
) -> (f64, [f64; N]) {
    let th2 = theta * theta;
    let th3 = th2 * theta;
    let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
    let h10 = th3 - 2.0 * th2 + theta;
    let h01 = -2.0 * th3 + 3.0 * th2;
    let h11 = th3 - th2;
    let mut y = [0.0; N];
    for i in 0..N {
        y[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    (t + theta * h, y)
}

/// Bisect the Hermite interpolant for the first sign change of `ev`.
fn locate_crossing<const N: usize>(
    ev: EventFn<'_, N>,
    t: f64,
    h: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    y1: &[f64; N],
    f1: &[f64; N],
) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (tm, ym) = hermite(t, h, y0, f0, y1, f1, mid);
        if ev(tm, &ym) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_meets_tolerance() {
        let integ = Integrator::default();
        let sol = integ
            .solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &[], |_, _| {})
            .unwrap();
        match sol.halt {
            Halt::End { t, y } => {
                assert_eq!(t, 5.0);
                assert!((y[0] - (-5.0f64).exp()).abs() < 1e-9);
            }
            other => panic!("unexpected halt {other:?}"),
        }
    }

    #[test]
    fn harmonic_oscillator_returns_home() {
        let integ = Integrator::default();
        let tau = 2.0 * std::f64::consts::PI;
        let sol = integ
            .solve(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [1.0, 0.0],
                tau,
                &[],
                |_, _| {},
            )
            .unwrap();
        match sol.halt {
            Halt::End { y, .. } => {
                assert!((y[0] - 1.0).abs() < 1e-7, "y = {y:?}");
                assert!(y[1].abs() < 1e-7);
            }
            other => panic!("unexpected halt {other:?}"),
        }
    }

    #[test]
    fn event_is_localized() {
        // y' = 1 starting at 0; the event y - 1 <= 0 ... fires where y = 1.
        let integ = Integrator::default();
        let ev = |_: f64, y: &[f64; 1]| 1.0 - y[0];
        let sol = integ
            .solve(|_, _: &[f64; 1]| [1.0], 0.0, [0.0], 10.0, &[&ev], |_, _| {})
            .unwrap();
        match sol.halt {
            Halt::Event { index, t, y } => {
                assert_eq!(index, 0);
                assert!((t - 1.0).abs() < 1e-9, "t = {t}");
                assert!((y[0] - 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected halt {other:?}"),
        }
    }

    #[test]
    fn event_active_at_start_halts_immediately() {
        let integ = Integrator::default();
        let ev = |_: f64, y: &[f64; 1]| -y[0];
        let sol = integ
            .solve(|_, _: &[f64; 1]| [1.0], 0.0, [2.0], 1.0, &[&ev], |_, _| {})
            .unwrap();
        assert!(matches!(sol.halt, Halt::Event { index: 0, t, .. } if t == 0.0));
    }

    #[test]
    fn finite_time_blowup_reports_stiffness() {
        let integ = Integrator::default();
        let res = integ.solve(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &[], |_, _| {});
        assert!(matches!(res, Err(Error::Stiffness { .. })), "{res:?}");
    }

    #[test]
    fn observer_sees_monotone_times() {
        let integ = Integrator::default();
        let mut last = f64::NEG_INFINITY;
        integ
            .solve(
                |_, y: &[f64; 1]| [-y[0]],
                0.0,
                [1.0],
                1.0,
                &[],
                |t, _| {
                    assert!(t > last || (t == 0.0 && last == f64::NEG_INFINITY));
                    last = t;
                },
            )
            .unwrap();
        assert_eq!(last, 1.0);
    }
}
