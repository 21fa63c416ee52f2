//! Numerics for a two-species alignment-advection-diffusion system in one
//! space dimension.
//!
//! The model tracks densities of right- and left-moving particles that drift
//! at unit speed, diffuse weakly, and align with the local majority. This
//! crate provides
//!
//! * the alignment kinetics and their exact partial derivatives ([`model`]),
//! * the traveling-wave ODE systems, their equilibria, eigenvalue
//!   classification, critical speeds, and the shooting procedure that brackets
//!   the polarization-inversion wave speed ([`twode`]),
//! * an explicit method-of-lines solver for the PDE in characteristic
//!   variables ([`pdesim`]),
//! * front tracking, speed fitting, plateau extraction, and verification of
//!   the speed/plateau mass-balance relations ([`waveanalysis`]),
//! * experiment drivers (single runs, parameter sweeps, speed curves,
//!   bifurcation rasters) shared by the CLI ([`experiment`]).
//!
//! The data-parallel inner loops (PDE cell updates, raster classification,
//! sweep jobs) run on rayon when the default `parallel` feature is enabled
//! and fall back to equivalent sequential loops without it. Both paths
//! produce bit-identical results.

pub mod error;
pub mod experiment;
pub mod model;
pub mod ode;
pub mod pdesim;
pub mod twode;
pub mod waveanalysis;

pub use error::{Error, Result};
