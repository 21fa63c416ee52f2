//! Explicit method-of-lines solver for the rescaled PDE system on a 1-D
//! interval, in the characteristic variables (u_r, u_l):
//!
//! ```text
//! d/dt u_r + d/dx u_r = a d2/dx2 u_r + f0(u, w)/2
//! d/dt u_l - d/dx u_l = a d2/dx2 u_l - f0(u, w)/2
//! ```
//!
//! First-order upwind advection at unit speed, second-order central
//! diffusion, explicit reaction, forward Euler in time. Under the time-step
//! bound the update is a convex combination plus a reaction that vanishes on
//! the boundary of the invariant region, so both species stay non-negative.
//!
//! The per-cell update is data parallel; with the `parallel` feature the
//! sweep over cells runs on rayon in fixed-size chunks and produces results
//! bit-identical to the sequential path.

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{alignment_clamped, ModelParams};

/// Cells per parallel work item.
const CHUNK: usize = 2048;

/// Cells between a front and a non-periodic boundary below which a run
/// aborts (5 front widths at 10 cells each).
const BOUNDARY_GUARD_CELLS: usize = 50;

/// Relative deviation that counts as "a front reached the guard window".
const BOUNDARY_GUARD_TOL: f64 = 1e-7;

/// Uniform grid of cell centers on [-L, L].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Half-width L of the domain.
    pub half_width: f64,
    /// Number of cells.
    pub cells: usize,
}

impl Grid {
    pub fn new(half_width: f64, cells: usize) -> Result<Self> {
        let g = Self { half_width, cells };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 16 {
            return Err(Error::Config(format!("grid needs at least 16 cells, got {}", self.cells)));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::Config(format!("invalid half width {}", self.half_width)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    /// Cell center, computed symmetrically so that x(i) = -x(n-1-i) exactly.
    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - 0.5 * self.cells as f64) * self.dx()
    }
}

/// Discretized characteristic fields. Total density and polarization are
/// always derived as u = u_r + u_l and w = u_r - u_l, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub ur: Vec<f64>,
    pub ul: Vec<f64>,
}

impl FieldPair {
    pub fn len(&self) -> usize {
        self.ur.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ur.is_empty()
    }

    pub fn u(&self, i: usize) -> f64 {
        self.ur[i] + self.ul[i]
    }

    pub fn w(&self, i: usize) -> f64 {
        self.ur[i] - self.ul[i]
    }

    pub fn u_profile(&self) -> Vec<f64> {
        self.ur.iter().zip(&self.ul).map(|(r, l)| r + l).collect()
    }

    pub fn w_profile(&self) -> Vec<f64> {
        self.ur.iter().zip(&self.ul).map(|(r, l)| r - l).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Zero-gradient ghost cells; mass leaves through advection.
    Outflow,
    /// Wrap-around; conserves total mass to roundoff.
    Periodic,
}

/// Initial-condition shapes: a Gaussian notch or excess on the homogeneous
/// non-polarized background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Dip,
    Bump,
}

/// Solver configuration. `dt` must satisfy the stability bound; use
/// [`cfl_dt`] to derive it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: ModelParams,
    pub grid: Grid,
    pub dt: f64,
    pub t_final: f64,
    /// Snapshot cadence in time units.
    pub snapshot_every: f64,
    pub boundary: Boundary,
    /// Alignment reaction toggle; off gives the pure advection-diffusion
    /// system.
    pub reaction: bool,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.validate()?;
        let dx = self.grid.dx();
        let a = self.params.a();
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("invalid dt = {}", self.dt)));
        }
        if self.dt > cfl_dt(dx, a, 1.0) * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} violates the advection/diffusion bound {}",
                self.dt,
                cfl_dt(dx, a, 1.0)
            )));
        }
        // monotonicity of the explicit update: nu + 2 mu <= 1
        let nu = self.dt / dx;
        let mu = a * self.dt / (dx * dx);
        if nu + 2.0 * mu > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "dt = {} loses positivity: dt/dx + 2 a dt/dx^2 = {} > 1",
                self.dt,
                nu + 2.0 * mu
            )));
        }
        if !(self.t_final > 0.0) || !(self.snapshot_every > 0.0) {
            return Err(Error::Config(format!(
                "t_final = {} and snapshot_every = {} must be positive",
                self.t_final, self.snapshot_every
            )));
        }
        Ok(())
    }
}

/// Stable time step for the scheme: `safety * min(dx, dx^2 / (2a))`.
/// Advection speed is 1 in the rescaled variables; the diffusion bound takes
/// over for a > dx/2. The combined positivity bound needs safety <= 0.5
/// whenever both terms are active.
pub fn cfl_dt(dx: f64, a: f64, safety: f64) -> f64 {
    assert!(dx > 0.0 && a >= 0.0 && safety > 0.0 && safety <= 1.0);
    if a == 0.0 {
        safety * dx
    } else {
        safety * dx.min(dx * dx / (2.0 * a))
    }
}

/// Build symmetric initial data: `u = u0 -+ A exp(-x^2 / (2 sigma^2))` (dip
/// resp. bump), zero polarization, species split equally.
pub fn make_initial(
    kind: InitialKind,
    u0: f64,
    amplitude: f64,
    sigma: f64,
    grid: &Grid,
) -> Result<FieldPair> {
    grid.validate()?;
    if !(u0 > 0.0) {
        return Err(Error::Config(format!("background density u0 = {u0} must be positive")));
    }
    if !(amplitude >= 0.0) || !(sigma > 0.0) {
        return Err(Error::Config(format!(
            "invalid perturbation: amplitude = {amplitude}, sigma = {sigma}"
        )));
    }
    if kind == InitialKind::Dip && amplitude >= u0 {
        return Err(Error::Config(format!(
            "dip amplitude {amplitude} >= background {u0} produces nonpositive density"
        )));
    }
    let n = grid.cells;
    let mut ur = Vec::with_capacity(n);
    for i in 0..n {
        let x = grid.cell_center(i);
        let g = (-x * x / (2.0 * sigma * sigma)).exp();
        let u = match kind {
            InitialKind::Dip => u0 - amplitude * g,
            InitialKind::Bump => u0 + amplitude * g,
        };
        ur.push(0.5 * u);
    }
    let ul = ur.clone();
    Ok(FieldPair { ur, ul })
}

/// Total mass `sum (u_r + u_l) dx`.
pub fn total_mass(f: &FieldPair, grid: &Grid) -> f64 {
    let dx = grid.dx();
    f.ur.iter().zip(&f.ul).map(|(r, l)| r + l).sum::<f64>() * dx
}

struct StepCoeffs {
    nu: f64,
    mu: f64,
    half_dt: f64,
    beta: f64,
    boundary: Boundary,
    n: usize,
}

impl StepCoeffs {
    fn from_config(cfg: &SolverConfig) -> Self {
        let dx = cfg.grid.dx();
        Self {
            nu: cfg.dt / dx,
            mu: cfg.params.a() * cfg.dt / (dx * dx),
            half_dt: if cfg.reaction { 0.5 * cfg.dt } else { 0.0 },
            beta: cfg.params.beta,
            boundary: cfg.boundary,
            n: cfg.grid.cells,
        }
    }
}

/// Update cells [start, start + out_ur.len()) and return the minimum new
/// value over both species in the range.
fn step_chunk(
    src_ur: &[f64],
    src_ul: &[f64],
    out_ur: &mut [f64],
    out_ul: &mut [f64],
    start: usize,
    co: &StepCoeffs,
) -> f64 {
    let n = co.n;
    let mut lowest = f64::INFINITY;
    for j in 0..out_ur.len() {
        let i = start + j;
        let im = if i == 0 {
            match co.boundary {
                Boundary::Periodic => n - 1,
                Boundary::Outflow => 0,
            }
        } else {
            i - 1
        };
        let ip = if i == n - 1 {
            match co.boundary {
                Boundary::Periodic => 0,
                Boundary::Outflow => n - 1,
            }
        } else {
            i + 1
        };

        let r = src_ur[i];
        let l = src_ul[i];
        // symmetric grouping keeps the mirror symmetry of the scheme exact
        let adv_r = co.nu * (src_ur[im] - r);
        let adv_l = co.nu * (src_ul[ip] - l);
        let dif_r = co.mu * ((src_ur[im] + src_ur[ip]) - 2.0 * r);
        let dif_l = co.mu * ((src_ul[im] + src_ul[ip]) - 2.0 * l);
        let react = if co.half_dt != 0.0 {
            co.half_dt * alignment_clamped(r + l, r - l, co.beta)
        } else {
            0.0
        };
        let new_r = r + adv_r + dif_r + react;
        let new_l = l + adv_l + dif_l - react;
        out_ur[j] = new_r;
        out_ul[j] = new_l;
        lowest = lowest.min(new_r).min(new_l);
    }
    lowest
}

#[doc(hidden)]
pub fn step_into_serial(src: &FieldPair, dst: &mut FieldPair, cfg: &SolverConfig) -> f64 {
    let co = StepCoeffs::from_config(cfg);
    step_chunk(&src.ur, &src.ul, &mut dst.ur, &mut dst.ul, 0, &co)
}

#[cfg(feature = "parallel")]
#[doc(hidden)]
pub fn step_into_parallel(src: &FieldPair, dst: &mut FieldPair, cfg: &SolverConfig) -> f64 {
    use rayon::prelude::*;
    let co = StepCoeffs::from_config(cfg);
    dst.ur
        .par_chunks_mut(CHUNK)
        .zip(dst.ul.par_chunks_mut(CHUNK))
        .enumerate()
        .map(|(k, (cur, cul))| step_chunk(&src.ur, &src.ul, cur, cul, k * CHUNK, &co))
        .reduce(|| f64::INFINITY, f64::min)
}

fn step_into(src: &FieldPair, dst: &mut FieldPair, cfg: &SolverConfig) -> f64 {
    #[cfg(feature = "parallel")]
    {
        step_into_parallel(src, dst, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        step_into_serial(src, dst, cfg)
    }
}

/// One forward-Euler step. Validates the configuration before stepping.
pub fn step(f: &FieldPair, cfg: &SolverConfig) -> Result<FieldPair> {
    cfg.validate()?;
    if f.len() != cfg.grid.cells {
        return Err(Error::Config(format!(
            "field has {} cells, grid {}",
            f.len(),
            cfg.grid.cells
        )));
    }
    let mut out = f.clone();
    step_into(f, &mut out, cfg);
    Ok(out)
}

/// State of the fields at one time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub fields: FieldPair,
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    /// (time, total mass) at every snapshot.
    pub mass_ledger: Vec<(f64, f64)>,
    /// Smallest species value seen over the whole run.
    pub min_density: f64,
    pub steps: u64,
}

/// Run the solver from `initial` to `t_final`, collecting snapshots at the
/// configured cadence (always including the initial and final states).
///
/// Aborts with [`Error::Instability`] if a species drops below the
/// positivity tolerance, values stop being finite, or a front reaches the
/// guard window of a non-periodic boundary.
pub fn run(cfg: &SolverConfig, initial: FieldPair) -> Result<RunOutput> {
    cfg.validate()?;
    let n = cfg.grid.cells;
    if initial.len() != n {
        return Err(Error::Config(format!(
            "initial field has {} cells, grid {}",
            initial.len(),
            n
        )));
    }

    let max_initial = initial
        .ur
        .iter()
        .zip(&initial.ul)
        .map(|(r, l)| r + l)
        .fold(0.0, f64::max);
    let tol_pos = 1e-12 * max_initial;
    let guard = n.min(BOUNDARY_GUARD_CELLS);
    let edge_u = initial.u(0).max(initial.u(n - 1));
    let guard_tol = BOUNDARY_GUARD_TOL * max_initial.max(1e-300);

    let mut cur = initial;
    let mut next = cur.clone();
    let mut t = 0.0;
    let mut steps = 0u64;
    let mut min_density = f64::INFINITY;
    let mut snapshots = vec![Snapshot { time: 0.0, fields: cur.clone() }];
    let mut mass_ledger = vec![(0.0, total_mass(&cur, &cfg.grid))];
    let mut next_snap = cfg.snapshot_every;

    while t < cfg.t_final - 1e-12 * cfg.t_final {
        let dt = cfg.dt.min(cfg.t_final - t);
        let lowest = if dt == cfg.dt {
            step_into(&cur, &mut next, cfg)
        } else {
            // shortened final step
            let short = SolverConfig { dt, ..cfg.clone() };
            step_into(&cur, &mut next, &short)
        };
        std::mem::swap(&mut cur, &mut next);
        t += dt;
        steps += 1;
        min_density = min_density.min(lowest);

        if !lowest.is_finite() {
            return Err(Error::Instability(format!(
                "non-finite field value at t = {t} after {steps} steps"
            )));
        }
        if lowest < -tol_pos {
            let cell = worst_cell(&cur);
            return Err(Error::Instability(format!(
                "positivity lost at t = {t}: cell {cell} holds {lowest:e} (tolerance {tol_pos:e})"
            )));
        }
        if cfg.boundary == Boundary::Outflow {
            if let Some(cell) = boundary_breach(&cur, guard, edge_u, guard_tol) {
                return Err(Error::Instability(format!(
                    "front reached the boundary guard window at t = {t} (cell {cell}); \
                     enlarge the domain or shorten the run"
                )));
            }
        }

        if t + 0.5 * cfg.dt >= next_snap || t >= cfg.t_final - 1e-12 * cfg.t_final {
            snapshots.push(Snapshot { time: t, fields: cur.clone() });
            mass_ledger.push((t, total_mass(&cur, &cfg.grid)));
            while next_snap <= t + 0.5 * cfg.dt {
                next_snap += cfg.snapshot_every;
            }
        }
    }

    Ok(RunOutput { snapshots, mass_ledger, min_density, steps })
}

fn worst_cell(f: &FieldPair) -> usize {
    let mut cell = 0;
    let mut worst = f64::INFINITY;
    for i in 0..f.len() {
        let m = f.ur[i].min(f.ul[i]);
        if m < worst {
            worst = m;
            cell = i;
        }
    }
    cell
}

fn boundary_breach(f: &FieldPair, guard: usize, edge_u: f64, tol: f64) -> Option<usize> {
    let n = f.len();
    for i in (0..guard).chain(n - guard..n) {
        if (f.u(i) - edge_u).abs() > tol || f.w(i).abs() > tol {
            return Some(i);
        }
    }
    None
}
