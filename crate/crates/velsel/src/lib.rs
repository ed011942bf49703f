//! 1-D velocity selection of laser-cooled atoms.
//!
//! A suddenly switched-on potential — a linear magnetic gradient plus a
//! Gaussian optical barrier — traps the low-energy tail of a thermal cloud
//! in a shallow well. This crate predicts the selection efficiency, the
//! pseudo-temperature of the selected atoms, and the sharp velocity cutoff,
//! both analytically (closed forms and phase-space quadrature) and by Monte
//! Carlo simulation of the full capture/hold/release protocol.
//!
//! Module map:
//! - [`physics`]: SI constants and lab-unit conversions (μK, G/cm, μm, ms, cm/s)
//! - [`potential`]: the composed 1-D potential, its force, and well geometry
//! - [`theory`]: closed-form and quadrature predictions (η, T_s, β)
//! - [`ensemble`]: thermal-cloud sampling, trapped/escaped classification,
//!   velocity-Verlet trajectory integration
//! - [`observables`]: density profiles, time-of-flight thermometry,
//!   efficiency measurement, velocity-distribution deconvolution
//! - [`experiments`]: end-to-end selection runs and parameter sweeps
//!
//! All internal computation is in SI units; lab units appear only at I/O
//! boundaries. All stochastic operations are deterministic for a fixed seed,
//! independent of thread count.

pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod observables;
pub mod physics;
pub mod potential;
pub mod quad;
pub mod rng;
pub mod svg;
pub mod theory;

pub use error::{Error, Result};
pub use physics::PhysicalConstants;
pub use potential::{PotentialConfig, WellGeometry};
pub use theory::{CloudSpec, TheoryPrediction};
