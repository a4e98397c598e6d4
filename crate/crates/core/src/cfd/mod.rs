//! Finite-volume solver for the locally averaged incompressible Navier-Stokes
//! equations on a structured Cartesian grid, with variable void fraction and
//! power-law apparent viscosity.

pub mod boundary;
pub mod grid;
pub mod solver;

pub use boundary::{BoundarySpec, FaceBc, OutletMask};
pub use grid::FluidGrid;
pub use solver::{
    boundary_fluxes, march_to_steady, shear_rate_field, solve_step, FluidProps, SolveStats,
    SolverOptions,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CfdError {
    #[error("pressure-correction loop did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("pressure solve failed: {0}")]
    PressureSolveFailed(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid boundary specification: {0}")]
    InvalidBoundary(String),
}

/// Default Courant limit for the CFL admissibility check.
pub const DEFAULT_COURANT_MAX: f64 = 0.5;

/// Threshold of the cell-to-particle size ratio below which a grid cannot be
/// treated as unresolved (each cell must span several particles).
pub const UNRESOLVED_RATIO_MIN: f64 = 3.0;

/// Courant number `C = U dt / dh` (minimum cell edge) and whether it satisfies
/// `C < c_max`.
pub fn check_cfd_timestep(grid: &FluidGrid, u_ref: f64, dt: f64, c_max: f64) -> (f64, bool) {
    let courant = u_ref * dt / grid.min_cell_edge();
    (courant, courant < c_max)
}

/// Unresolved-coupling ratio `dh / d_mean` and whether it exceeds 3. When it
/// does not, the engine warns but may proceed.
pub fn check_unresolved(grid: &FluidGrid, mean_particle_diameter: f64) -> (f64, bool) {
    let ratio = grid.min_cell_edge() / mean_particle_diameter;
    (ratio, ratio > UNRESOLVED_RATIO_MIN)
}
