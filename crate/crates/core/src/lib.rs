//! Coupled unresolved CFD-DEM engine for simulating sand production from a
//! cemented granular pack under non-Newtonian (power-law) polymer injection.
//!
//! The crate is organized along the physics pipeline:
//!
//! - [`rheology`]: power-law constitutive model and rheometer-sweep fitting
//! - [`dem`]: discrete-element solid phase (contacts, cohesive bonds, walls)
//! - [`cfd`]: finite-volume solver for the locally averaged Navier-Stokes
//!   equations on a structured grid with variable void fraction
//! - [`coupling`]: two-way momentum exchange between the two phases
//! - [`scenario`]: staged experiment driver (generate, compact, confine, inject)
//! - [`analysis`]: dimensionless production curves and verification metrics

pub mod analysis;
pub mod cfd;
pub mod coupling;
pub mod dem;
pub mod rheology;
pub mod scenario;

/// 3-component double-precision vector used for positions, velocities and forces.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Standard gravity magnitude (m/s^2).
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Pascals per psi, used for confining-stress inputs quoted in psi.
pub const PA_PER_PSI: f64 = 6894.757293168;
