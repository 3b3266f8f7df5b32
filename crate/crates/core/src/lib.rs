//! Numerical toolkit for traveling waves of the cubic-quintic Schrodinger
//! equation `i Psi_t - Lap Psi = (-a1 + a3|Psi|^2 - a5|Psi|^4) Psi`.
//!
//! * [`params`]: coefficient validation, reduction to the normalized problem
//!   `i c d_x1 psi + Lap psi + psi(|psi|^2-1)(2A+1-3|psi|^2) = 0`, and the
//!   explicit sup-norm constants.
//! * [`grid`] and [`snapshot`]: slab discretization and binary persistence.
//! * [`functionals`]: energy, momentum, Lagrangian, variations, residuals.
//! * [`solvers`]: ansatz families, mountain-pass paths, descent and Newton.
//! * [`dynamics`]: Strang split-step time integration.
//! * [`verify`]: automated checks of the analytic claims.

pub mod dynamics;
pub mod functionals;
pub mod grid;
mod linalg;
pub mod params;
pub mod snapshot;
pub mod solvers;
pub mod verify;

pub use grid::{make_grid, ComplexField, Grid, PerturbationField, C64};
pub use params::{CubicQuinticParams, ReducedParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Params(#[from] params::ParamsError),
    #[error(transparent)]
    Grid(#[from] grid::GridError),
    #[error(transparent)]
    Snapshot(#[from] snapshot::SnapshotError),
    #[error(transparent)]
    Solver(#[from] solvers::SolverError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
}

/// Scientific notation with 17 significant digits.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}
