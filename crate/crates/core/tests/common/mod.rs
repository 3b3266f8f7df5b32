#![allow(dead_code)]

use cqnls::solvers::{
    continuation, find_negative_endpoint, newton_refine, path_max, ContinuationStep, EndpointSearch, SolveReport,
    SolverConfig, SolverError,
};
use cqnls::{make_grid, ComplexField, Grid};

pub const A: f64 = 0.5;

pub fn solver_config() -> SolverConfig {
    SolverConfig {
        tol_residual: 1e-9,
        ..SolverConfig::default()
    }
}

/// Peak of the straight mountain-pass path at `c = 0`.
pub fn rest_start(grid: &Grid) -> Result<ComplexField, SolverError> {
    let ep = find_negative_endpoint(0.0, A, grid, &EndpointSearch::default())?;
    let pm = path_max(&ep.psi0, 0.0, A, 41);
    Ok(pm.peak_field(&ep.psi0))
}

pub fn bubble_2d() -> Result<SolveReport, SolverError> {
    let g = make_grid(2, 8.0, 20.0, 81, 128).unwrap();
    newton_refine(&rest_start(&g)?, 0.0, A, &solver_config())
}

pub fn bubble_3d() -> Result<SolveReport, SolverError> {
    let g = make_grid(3, 8.0, 16.0, 65, 32).unwrap();
    let cfg = SolverConfig {
        newton_switch: 1e3,
        ..solver_config()
    };
    newton_refine(&rest_start(&g)?, 0.0, A, &cfg)
}

/// Continuation from the rest bubble to `c_to` in `steps` solves.
pub fn moving_branch(grid: &Grid, c_to: f64, steps: usize) -> Result<Vec<ContinuationStep>, SolverError> {
    Ok(continuation(0.0, c_to, steps, A, &rest_start(grid)?, &solver_config()))
}

/// The branch `c = 0, 0.2, 0.4, 0.6` on a wide transverse box.
pub fn wide_branch() -> Result<Vec<ContinuationStep>, SolverError> {
    moving_branch(&make_grid(2, 8.0, 40.0, 81, 256).unwrap(), 0.6, 4)
}

/// Every converged nonconstant solution produced for the checks, labeled.
pub fn ci_solutions() -> (Vec<(String, SolveReport)>, Vec<String>) {
    let mut ok = Vec::new();
    let mut reported = Vec::new();
    let mut take = |label: String, r: Result<SolveReport, SolverError>| match r {
        Ok(rep) if rep.converged && rep.is_nonconstant() => ok.push((label, rep)),
        Ok(rep) => reported.push(format!(
            "{label}: not converged, residual {:e}",
            rep.diagnostics.residual_norm
        )),
        Err(e) => reported.push(format!("{label}: {e}")),
    };
    take("bubble d=2".into(), bubble_2d());
    take("bubble d=3".into(), bubble_3d());
    match wide_branch() {
        Ok(steps) => {
            for s in steps {
                take(format!("branch c={}", s.c), s.outcome);
            }
        }
        Err(e) => take("branch".into(), Err(e)),
    }
    (ok, reported)
}
