//! Characteristic cubic of the reduced linearization and everything built on
//! it: closed-form eigenvalues at the polarized equilibria, real/complex
//! region classification, the critical speeds bounding the oscillatory band,
//! and the locus of purely imaginary pairs.
//!
//! Scaling the linearization matrix by `a` turns the eigenvalue problem into
//! a monic cubic in the scaled eigenvalue `mu = a * lambda`:
//!
//! ```text
//! mu (mu + c)^2 + (a f_W - 1)(mu + c) + c + a f_U = 0
//! ```
//!
//! whose coefficients stay O(1) as `a` shrinks. All classification happens in
//! the `mu` variable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monic characteristic cubic in the scaled eigenvalue, together with the
/// parameters it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicSpec {
    pub c: f64,
    pub a: f64,
    pub f_u: f64,
    pub f_w: f64,
}

/// Build the characteristic cubic from speed, diffusion, and alignment
/// partials at the equilibrium.
pub fn characteristic_cubic(c: f64, a: f64, f_u: f64, f_w: f64) -> CubicSpec {
    CubicSpec { c, a, f_u, f_w }
}

impl CubicSpec {
    /// Non-leading monic coefficients (b2, b1, b0) of
    /// mu^3 + b2 mu^2 + b1 mu + b0.
    pub fn coefficients(&self) -> (f64, f64, f64) {
        let Self { c, a, f_u, f_w } = *self;
        (2.0 * c, c * c - 1.0 + a * f_w, a * (c * f_w + f_u))
    }

    /// Evaluate the expanded monic form.
    pub fn eval(&self, mu: Complex64) -> Complex64 {
        let (b2, b1, b0) = self.coefficients();
        ((mu + b2) * mu + b1) * mu + b0
    }

    /// Evaluate the factored defining form; agrees with [`Self::eval`] up to
    /// roundoff and is used to pin the expansion.
    pub fn eval_defining(&self, mu: Complex64) -> Complex64 {
        let Self { c, a, f_u, f_w } = *self;
        let shifted = mu + c;
        mu * shifted * shifted + (a * f_w - 1.0) * shifted + (c + a * f_u)
    }

    /// Discriminant of the monic cubic; positive means three distinct real
    /// roots, negative one real root and a conjugate pair.
    pub fn discriminant(&self) -> f64 {
        let (b2, b1, b0) = self.coefficients();
        18.0 * b2 * b1 * b0 - 4.0 * b2 * b2 * b2 * b0 + b2 * b2 * b1 * b1
            - 4.0 * b1 * b1 * b1
            - 27.0 * b0 * b0
    }

    /// All three roots, closed form plus a Newton polish, sorted by real part
    /// then imaginary part. Complex roots come in exact conjugate pairs.
    pub fn roots(&self) -> [Complex64; 3] {
        let (b2, b1, b0) = self.coefficients();
        solve_monic_cubic(b2, b1, b0)
    }

    /// Roots plus region classification and real-part sign pattern.
    pub fn eigenset(&self) -> EigenSet {
        EigenSet::from_roots(self.roots(), self)
    }
}

/// Spectral type of the linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spectrum {
    AllReal,
    ComplexPair,
}

/// Sign of a real part, with a zero band for purely imaginary pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    fn of(x: f64, tol: f64) -> Self {
        if x > tol {
            Sign::Pos
        } else if x < -tol {
            Sign::Neg
        } else {
            Sign::Zero
        }
    }

    pub fn symbol(&self) -> char {
        match self {
            Sign::Neg => '-',
            Sign::Zero => '0',
            Sign::Pos => '+',
        }
    }
}

/// Roots of a characteristic cubic with their classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSet {
    /// Sorted by real part, then imaginary part.
    pub roots: [Complex64; 3],
    pub spectrum: Spectrum,
    /// Real-part signs in the same order as `roots`.
    pub signs: [Sign; 3],
    /// max |p(root)| / max(1, |b2|, |b1|, |b0|).
    pub residual: f64,
}

impl EigenSet {
    fn from_roots(roots: [Complex64; 3], cubic: &CubicSpec) -> Self {
        let (b2, b1, b0) = cubic.coefficients();
        let coef_scale = 1.0_f64.max(b2.abs()).max(b1.abs()).max(b0.abs());
        let residual = roots
            .iter()
            .map(|&r| cubic.eval(r).norm())
            .fold(0.0, f64::max)
            / coef_scale;
        let root_scale = 1.0 + roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
        let tol = 1e-9 * root_scale;
        let spectrum = if roots.iter().any(|r| r.im.abs() > tol) {
            Spectrum::ComplexPair
        } else {
            Spectrum::AllReal
        };
        let signs = [
            Sign::of(roots[0].re, tol),
            Sign::of(roots[1].re, tol),
            Sign::of(roots[2].re, tol),
        ];
        Self { roots, spectrum, signs, residual }
    }

    fn from_real_roots(mut re: [f64; 3], cubic: &CubicSpec) -> Self {
        re.sort_by(f64::total_cmp);
        Self::from_roots(re.map(|r| Complex64::new(r, 0.0)), cubic)
    }

    /// Sign pattern as a compact string, e.g. `"--+"`.
    pub fn sign_pattern(&self) -> String {
        self.signs.iter().map(Sign::symbol).collect()
    }
}

/// Solve mu^3 + b2 mu^2 + b1 mu + b0 = 0.
fn solve_monic_cubic(b2: f64, b1: f64, b0: f64) -> [Complex64; 3] {
    if b0 == 0.0 {
        // factor the exact zero root, solve the quadratic stably
        let mut roots = [Complex64::new(0.0, 0.0); 3];
        let disc = b2 * b2 - 4.0 * b1;
        if disc >= 0.0 {
            let s = disc.sqrt();
            let q = -0.5 * (b2 + s.copysign(b2));
            let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q, b1 / q) };
            roots[1] = Complex64::new(r1, 0.0);
            roots[2] = Complex64::new(r2, 0.0);
        } else {
            let im = (-disc).sqrt() * 0.5;
            roots[1] = Complex64::new(-0.5 * b2, -im);
            roots[2] = Complex64::new(-0.5 * b2, im);
        }
        roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        return roots;
    }

    // depressed form t^3 + p t + q with mu = t - b2/3
    let shift = b2 / 3.0;
    let p = b1 - b2 * b2 / 3.0;
    let q = 2.0 * b2 * b2 * b2 / 27.0 - b2 * b1 / 3.0 + b0;
    let quarter_disc = 0.25 * q * q + p * p * p / 27.0;

    let mut roots: [Complex64; 3];
    if quarter_disc <= 0.0 {
        // three real roots, trigonometric form
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = if m == 0.0 { -1.0 } else { (3.0 * q / (p * m)).clamp(-1.0, 1.0) };
        let phi = arg.acos() / 3.0;
        let mut rs = [0.0; 3];
        for (k, r) in rs.iter_mut().enumerate() {
            *r = m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift;
        }
        for r in rs.iter_mut() {
            *r = polish_real(*r, b2, b1, b0);
        }
        rs.sort_by(f64::total_cmp);
        roots = rs.map(|r| Complex64::new(r, 0.0));
    } else {
        // one real root and a conjugate pair, Cardano with a stable branch
        let s = quarter_disc.sqrt();
        let u = if q >= 0.0 { (-0.5 * q - s).cbrt() } else { (-0.5 * q + s).cbrt() };
        let v = if u == 0.0 { 0.0 } else { -p / (3.0 * u) };
        let real = polish_real(u + v - shift, b2, b1, b0);
        // deflate: mu^2 + (b2 + r) mu + (b1 + r(b2 + r)) holds the pair
        let pb = b2 + real;
        let pc = b1 + real * pb;
        let disc = pb * pb - 4.0 * pc;
        let pair = if disc < 0.0 {
            Complex64::new(-0.5 * pb, 0.5 * (-disc).sqrt())
        } else {
            // polishing pushed us across the boundary; fall back to the
            // unpolished Cardano pair
            Complex64::new(-0.5 * (u + v) - shift, 0.5 * 3.0f64.sqrt() * (u - v))
        };
        let pair = polish_complex(pair, b2, b1, b0);
        roots = [
            Complex64::new(real, 0.0),
            Complex64::new(pair.re, -pair.im.abs()),
            Complex64::new(pair.re, pair.im.abs()),
        ];
        roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    }
    roots
}

fn polish_real(mut r: f64, b2: f64, b1: f64, b0: f64) -> f64 {
    for _ in 0..2 {
        let f = ((r + b2) * r + b1) * r + b0;
        let df = (3.0 * r + 2.0 * b2) * r + b1;
        if df.abs() < 1e-100 {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        r -= step;
    }
    r
}

fn polish_complex(mut z: Complex64, b2: f64, b1: f64, b0: f64) -> Complex64 {
    for _ in 0..2 {
        let f = ((z + b2) * z + b1) * z + b0;
        let df = (3.0 * z + 2.0 * b2) * z + b1;
        if df.norm() < 1e-100 {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        z -= step;
    }
    z
}

/// Which fully polarized equilibrium ray a linearization sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolarizedSide {
    /// W = +U.
    Plus,
    /// W = -U.
    Minus,
}

/// Closed-form scaled eigenvalues at a fully polarized equilibrium of
/// density `u`, with crowding damping g = exp(-beta^2 u^2):
///
/// ```text
/// W = +U:  mu1 = 1 - c,    mu2/3 = -(1 + c +- sqrt((1+c)^2 + 8 a g))/2
/// W = -U:  mu1 = -(1 + c), mu2/3 =  (1 - c +- sqrt((1-c)^2 + 8 a g))/2
/// ```
///
/// All three are real for every admissible (c, a); mu2 and mu3 have opposite
/// signs, so the polarized equilibria are saddles.
pub fn outer_eigenvalues(
    c: f64,
    a: f64,
    u: f64,
    beta: f64,
    side: PolarizedSide,
) -> Result<EigenSet> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("equilibrium density u = {u} must be positive")));
    }
    if !(a > 0.0) {
        return Err(Error::SingularPerturbation(a));
    }
    let g = (-(beta * u) * (beta * u)).exp();
    let (f_u, f_w, mu1, half_trace) = match side {
        PolarizedSide::Plus => (2.0 * g, -2.0 * g, 1.0 - c, -(1.0 + c)),
        PolarizedSide::Minus => (-2.0 * g, -2.0 * g, -(1.0 + c), 1.0 - c),
    };
    let s = (half_trace * half_trace + 8.0 * a * g).sqrt();
    let mu2 = 0.5 * (half_trace + s);
    let mu3 = 0.5 * (half_trace - s);
    let cubic = characteristic_cubic(c, a, f_u, f_w);
    Ok(EigenSet::from_real_roots([mu1, mu2, mu3], &cubic))
}

/// Classify the linearization about the non-polarized equilibrium in terms
/// of the effective diffusion `ag = a * exp(-beta^2 U1^2)`.
///
/// The alignment partials there are (f_U, f_W) = (0, g), so only the product
/// `ag` enters. `ag = 0` reproduces the hyperbolic-limit factorization with
/// roots {0, 1 - c, -1 - c}.
pub fn classify_equilibrium(c: f64, ag: f64) -> Result<EigenSet> {
    if c == 0.0 || c.abs() == 1.0 {
        return Err(Error::DegenerateSpeed(c));
    }
    if !(ag >= 0.0) || !ag.is_finite() {
        return Err(Error::Domain(format!("effective diffusion ag = {ag} must be >= 0")));
    }
    if ag == 0.0 {
        let cubic = characteristic_cubic(c, 0.0, 0.0, 1.0);
        return Ok(cubic.eigenset());
    }
    Ok(characteristic_cubic(c, ag, 0.0, 1.0).eigenset())
}

/// Whether the W = 0 cubic has three real roots at (c, ag). Falls back to
/// root classification when the discriminant is too close to zero to trust.
fn all_real(c: f64, ag: f64) -> bool {
    let cubic = characteristic_cubic(c, ag, 0.0, 1.0);
    let disc = cubic.discriminant();
    let (b2, b1, b0) = cubic.coefficients();
    let scale = 1.0 + b2.abs().max(b1.abs().sqrt()).max(b0.abs().cbrt());
    let scale6 = scale.powi(6);
    if disc.abs() >= 1e-14 * scale6 {
        return disc > 0.0;
    }
    // near-degenerate: decide by the total imaginary mass of the roots
    let roots = cubic.roots();
    let im_sum: f64 = roots.iter().map(|r| r.im.abs()).sum();
    im_sum <= 1e-9 * scale
}

/// The two critical speeds bounding the complex-eigenvalue band of the
/// non-polarized equilibrium at effective diffusion `ag > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSpeeds {
    /// Largest c in (0, 1) below which all eigenvalues stay real; `None`
    /// when the spectrum is already complex as c -> 0+ (ag >= 1).
    pub c_slow: Option<f64>,
    /// Smallest c > 1 above which all eigenvalues are real.
    pub c_fast: f64,
}

/// Find the critical speeds by bisecting the sign of the cubic discriminant.
/// Both tend to 1 as ag -> 0+.
pub fn critical_speeds(ag: f64) -> Result<CriticalSpeeds> {
    if !(ag > 0.0) || !ag.is_finite() {
        return Err(Error::Domain(format!(
            "effective diffusion ag = {ag} must be positive"
        )));
    }

    // fast branch: complex just above c = 1, real for large c
    let lo0 = 1.0 + 1e-12;
    if all_real(lo0, ag) {
        return Err(Error::Domain(format!(
            "no complex band above c = 1 at ag = {ag}; critical speed undefined"
        )));
    }
    let mut hi = 1.5;
    while !all_real(hi, ag) {
        hi = 1.0 + 2.0 * (hi - 1.0);
        if hi > 1e9 {
            return Err(Error::Domain(format!(
                "no real-spectrum recovery found above c = 1 at ag = {ag}"
            )));
        }
    }
    let mut lo = lo0;
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if all_real(mid, ag) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let c_fast = hi;

    // slow branch: real near c = 0 only when ag < 1
    let c_slow = if all_real(1e-9, ag) {
        let mut lo = 1e-9;
        let mut hi = 1.0 - 1e-12;
        if all_real(hi, ag) {
            // no sign change left of 1; treat the whole interval as real
            Some(hi)
        } else {
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if all_real(mid, ag) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(lo)
        }
    } else {
        None
    };

    Ok(CriticalSpeeds { c_slow, c_fast })
}

/// A point of the locus where the non-polarized linearization carries a
/// purely imaginary conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub c: f64,
    /// a = 2 (1 - c^2).
    pub a: f64,
    /// Pair frequency, omega^2 = 1 - c^2.
    pub omega: f64,
}

impl HopfPoint {
    /// |p(i omega)| for the W = 0 cubic with g = 1 at this point.
    pub fn residual(&self) -> f64 {
        characteristic_cubic(self.c, self.a, 0.0, 1.0)
            .eval(Complex64::new(0.0, self.omega))
            .norm()
    }
}

/// Purely imaginary pair locus a = 2 (1 - c^2) for 0 < c < 1.
pub fn hopf_locus(c: f64) -> Result<HopfPoint> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("hopf locus requires 0 < c < 1, got c = {c}")));
    }
    let a = 2.0 * (1.0 - c * c);
    let omega = (1.0 - c * c).sqrt();
    Ok(HopfPoint { c, a, omega })
}

/// One cell of a (c, ag) classification raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterPoint {
    pub c: f64,
    pub ag: f64,
    /// `None` at degenerate speeds c in {-1, 0, 1}.
    pub spectrum: Option<Spectrum>,
    /// Sign pattern string, e.g. "--+"; empty when degenerate.
    pub signs: String,
}

fn raster_point(c: f64, ag: f64) -> RasterPoint {
    match classify_equilibrium(c, ag) {
        Ok(set) => RasterPoint {
            c,
            ag,
            spectrum: Some(set.spectrum),
            signs: set.sign_pattern(),
        },
        Err(_) => RasterPoint { c, ag, spectrum: None, signs: String::new() },
    }
}

/// Classify a regular (c, ag) grid, row-major in ag then c. Runs on rayon
/// with the `parallel` feature.
pub fn bifurcation_raster(
    c_range: (f64, f64),
    ag_range: (f64, f64),
    nc: usize,
    nag: usize,
) -> Result<Vec<RasterPoint>> {
    if nc < 2 || nag < 2 {
        return Err(Error::Config(format!(
            "raster resolution {nc}x{nag} too small; need at least 2x2"
        )));
    }
    if !(c_range.1 > c_range.0) || !(ag_range.1 > ag_range.0) || ag_range.0 < 0.0 {
        return Err(Error::Config(format!(
            "invalid raster ranges c = {c_range:?}, ag = {ag_range:?}"
        )));
    }
    #[cfg(feature = "parallel")]
    {
        Ok(raster_parallel(c_range, ag_range, nc, nag))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(raster_serial(c_range, ag_range, nc, nag))
    }
}

fn raster_cell(c_range: (f64, f64), ag_range: (f64, f64), nc: usize, nag: usize, idx: usize) -> RasterPoint {
    let (i, j) = (idx / nc, idx % nc);
    let ag = ag_range.0 + (ag_range.1 - ag_range.0) * i as f64 / (nag - 1) as f64;
    let c = c_range.0 + (c_range.1 - c_range.0) * j as f64 / (nc - 1) as f64;
    raster_point(c, ag)
}

#[doc(hidden)]
pub fn raster_serial(
    c_range: (f64, f64),
    ag_range: (f64, f64),
    nc: usize,
    nag: usize,
) -> Vec<RasterPoint> {
    (0..nc * nag)
        .map(|idx| raster_cell(c_range, ag_range, nc, nag, idx))
        .collect()
}

#[cfg(feature = "parallel")]
#[doc(hidden)]
pub fn raster_parallel(
    c_range: (f64, f64),
    ag_range: (f64, f64),
    nc: usize,
    nag: usize,
) -> Vec<RasterPoint> {
    use rayon::prelude::*;
    (0..nc * nag)
        .into_par_iter()
        .map(|idx| raster_cell(c_range, ag_range, nc, nag, idx))
        .collect()
}
