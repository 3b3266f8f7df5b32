//! Ansatz construction, mountain-pass path search and iterative refinement
//! of slab traveling waves.

mod ansatz;
mod continuation;
mod descent;
mod path;
mod precond;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::functionals::Diagnostics;
use crate::grid::ComplexField;

pub use ansatz::{make_ansatz, winding_number};
pub use continuation::{continuation, ContinuationStep};
pub use descent::{descend, newton_refine};
pub use path::{find_negative_endpoint, golden_section_max, path_max, EndpointSearch, NegativeEndpoint, PathMax};
pub use precond::helmholtz_inverse;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("ansatz family {family} needs d = 2, grid has d = {dim}")]
    FamilyDimensionMismatch { family: AnsatzFamily, dim: usize },
    #[error("invalid ansatz: {0}")]
    InvalidAnsatz(String),
    #[error("no negative endpoint after {evaluations} evaluations; best I^c = {best}")]
    NotFound { best: f64, evaluations: usize },
    #[error("step underflow after {} iterations at residual {:e}", .report.iterations, .report.diagnostics.residual_norm)]
    Stagnation { report: Box<SolveReport> },
    #[error("linear solve stalled at relative residual {rel_residual:e} after {iterations} iterations")]
    LinearSolveFailure { iterations: usize, rel_residual: f64 },
    #[error("residual grew from {from:e} to {to:e} over {window} Newton steps")]
    Divergence { from: f64, to: f64, window: usize },
    #[error("speed c = {c} must lie in [0, {sound_speed})")]
    SubsonicRequired { c: f64, sound_speed: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzFamily {
    AmplitudeDip,
    VortexPair,
}

impl fmt::Display for AnsatzFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnsatzFamily::AmplitudeDip => "amplitude_dip",
            AnsatzFamily::VortexPair => "vortex_pair",
        })
    }
}

impl FromStr for AnsatzFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "amplitude_dip" => Ok(AnsatzFamily::AmplitudeDip),
            "vortex_pair" => Ok(AnsatzFamily::VortexPair),
            other => Err(format!(
                "unknown ansatz family {other:?} (expected amplitude_dip or vortex_pair)"
            )),
        }
    }
}

/// Parameters of a perturbation `phi` with `psi = 1 + phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnsatzSpec {
    pub family: AnsatzFamily,
    pub amplitude: f64,
    pub width: f64,
    /// Core distance of the vortex pair; ignored by `amplitude_dip`.
    pub separation: f64,
    /// Phase tilt of the dip; positive values give positive momentum.
    pub slope: f64,
    /// `(x1, x2, x3)` of the center.
    pub center: [f64; 3],
}

impl AnsatzSpec {
    pub fn dip(amplitude: f64, width: f64) -> Self {
        Self {
            family: AnsatzFamily::AmplitudeDip,
            amplitude,
            width,
            separation: 0.0,
            slope: 0.0,
            center: [0.0; 3],
        }
    }

    pub fn vortex_pair(amplitude: f64, width: f64, separation: f64) -> Self {
        Self {
            family: AnsatzFamily::VortexPair,
            amplitude,
            width,
            separation,
            slope: 0.0,
            center: [0.0; 3],
        }
    }

    pub fn with_slope(mut self, slope: f64) -> Self {
        self.slope = slope;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    InverseHelmholtz,
}

impl FromStr for Preconditioner {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Preconditioner::None),
            "inverse_helmholtz" => Ok(Preconditioner::InverseHelmholtz),
            other => Err(format!(
                "unknown preconditioner {other:?} (expected none or inverse_helmholtz)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub step0: f64,
    pub tol_residual: f64,
    pub backtrack: f64,
    pub preconditioner: Preconditioner,
    /// Residual below which Newton takes over from descent.
    pub newton_switch: f64,
    pub max_linear_iters: usize,
    pub gmres_restart: usize,
    /// Damp Newton steps so that the residual never grows.
    pub line_search: bool,
    /// Continue with descent when a Newton iteration fails.
    pub fallback_to_descent: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            step0: 1.0,
            tol_residual: 1e-8,
            backtrack: 0.5,
            preconditioner: Preconditioner::InverseHelmholtz,
            newton_switch: 10.0,
            max_linear_iters: 400,
            gmres_restart: 60,
            line_search: true,
            fallback_to_descent: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol_residual > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "tol_residual must be > 0, got {}",
                self.tol_residual
            )));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "backtrack must lie in (0, 1), got {}",
                self.backtrack
            )));
        }
        if !(self.step0 > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "step0 must be > 0, got {}",
                self.step0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Descent,
    Newton,
}

/// Why a Newton run handed over to descent.
#[derive(Debug, Clone, PartialEq)]
pub enum Fallback {
    LinearSolveFailure { iterations: usize, rel_residual: f64 },
    LineSearchFailure,
    Divergence { from: f64, to: f64 },
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub field: ComplexField,
    pub c: f64,
    pub a: f64,
    pub iterations: usize,
    /// Residual norm after each accepted iterate, starting with the initial field.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub method: Method,
    pub fallback: Option<Fallback>,
    pub diagnostics: Diagnostics,
}

impl SolveReport {
    /// Whether the exit field differs from `psi = 1`.
    pub fn is_nonconstant(&self) -> bool {
        self.field.distance_from_one() > 1e-6
    }
}
