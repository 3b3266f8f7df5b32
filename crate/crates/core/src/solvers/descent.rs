use super::{helmholtz_inverse, Fallback, Method, Preconditioner, SolveReport, SolverConfig, SolverError};
use crate::functionals::{diagnostics, gradient, hessian_apply_with, interior_dot};
use crate::grid::{ComplexField, Grid, TransverseFft, C64};
use crate::linalg::gmres;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
const DIVERGENCE_WINDOW: usize = 5;
const DIVERGENCE_FACTOR: f64 = 10.0;

struct Problem {
    g: Grid,
    fft: TransverseFft,
    c: f64,
    a: f64,
    preconditioner: Preconditioner,
}

impl Problem {
    fn new(psi: &ComplexField, c: f64, a: f64, preconditioner: Preconditioner) -> Self {
        let g = *psi.grid();
        Self {
            g,
            fft: TransverseFft::new(&g),
            c,
            a,
            preconditioner,
        }
    }

    fn residual(&self, psi: &ComplexField) -> Vec<C64> {
        gradient(psi, self.c, self.a).into_values()
    }

    fn norm(&self, v: &[C64]) -> f64 {
        interior_dot(&self.g, v, v).sqrt()
    }

    fn hessian(&self, psi: &ComplexField, w: &[C64]) -> Vec<C64> {
        hessian_apply_with(&self.g, &self.fft, psi.values(), w, self.c, self.a)
    }

    fn precondition(&self, v: &[C64]) -> Vec<C64> {
        match self.preconditioner {
            Preconditioner::None => {
                let mut out = v.to_vec();
                let r = self.g.row_len();
                for i in 0..self.g.n1() {
                    if self.g.is_boundary_row(i) {
                        out[i * r..(i + 1) * r].fill(C64::new(0.0, 0.0));
                    }
                }
                out
            }
            Preconditioner::InverseHelmholtz => helmholtz_inverse(&self.g, &self.fft, self.a, v),
        }
    }
}

fn shifted(psi: &ComplexField, dir: &[C64], s: f64) -> ComplexField {
    let mut out = psi.clone();
    for (v, d) in out.values_mut().iter_mut().zip(dir) {
        *v += d * s;
    }
    out
}

fn report(
    field: ComplexField,
    c: f64,
    a: f64,
    iterations: usize,
    residual_history: Vec<f64>,
    tol: f64,
    method: Method,
) -> SolveReport {
    let diagnostics = diagnostics(&field, c, a);
    SolveReport {
        converged: diagnostics.residual_norm <= tol,
        field,
        c,
        a,
        iterations,
        residual_history,
        method,
        fallback: None,
        diagnostics,
    }
}

/// Preconditioned gradient descent on `Omega = 1/2 |R(psi)|^2` with
/// Armijo backtracking. `Omega` never increases between accepted iterates.
pub fn descend(psi_init: &ComplexField, c: f64, a: f64, cfg: &SolverConfig) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let mut psi = psi_init.clone();
    psi.enforce_boundary();
    let p = Problem::new(&psi, c, a, cfg.preconditioner);
    let mut res = p.residual(&psi);
    let mut r = p.norm(&res);
    let mut history = vec![r];
    let mut step = cfg.step0;
    let mut iterations = 0;
    while iterations < cfg.max_iters && r > cfg.tol_residual {
        let grad = p.hessian(&psi, &res);
        let dir: Vec<C64> = p.precondition(&p.precondition(&grad)).iter().map(|v| -v).collect();
        let slope = interior_dot(&p.g, &grad, &dir);
        let omega = 0.5 * r * r;
        let mut s = step;
        let accepted = loop {
            if !(slope < 0.0) || s < cfg.step0 * 1e-14 {
                break None;
            }
            let trial = shifted(&psi, &dir, s);
            let trial_res = p.residual(&trial);
            let tr = p.norm(&trial_res);
            if tr.is_finite() && 0.5 * tr * tr <= omega + ARMIJO * s * slope {
                break Some((trial, trial_res, tr));
            }
            s *= cfg.backtrack;
        };
        let Some((trial, trial_res, tr)) = accepted else {
            let rep = report(psi, c, a, iterations, history, cfg.tol_residual, Method::Descent);
            return Err(SolverError::Stagnation { report: Box::new(rep) });
        };
        psi = trial;
        res = trial_res;
        r = tr;
        history.push(r);
        iterations += 1;
        step = s / cfg.backtrack;
    }
    Ok(report(
        psi,
        c,
        a,
        iterations,
        history,
        cfg.tol_residual,
        Method::Descent,
    ))
}

/// Inexact Newton on `R(psi) = 0` with GMRES solves of the second-variation
/// operator. Starts with descent when the residual is above
/// `cfg.newton_switch`; hands over to descent on failure when
/// `cfg.fallback_to_descent` is set.
pub fn newton_refine(psi: &ComplexField, c: f64, a: f64, cfg: &SolverConfig) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let mut psi = psi.clone();
    psi.enforce_boundary();
    let p = Problem::new(&psi, c, a, cfg.preconditioner);
    let mut res = p.residual(&psi);
    let mut r = p.norm(&res);
    let mut history = vec![r];
    let mut iterations = 0;

    if r > cfg.newton_switch && r > cfg.tol_residual {
        let pre_cfg = SolverConfig {
            tol_residual: cfg.newton_switch,
            ..*cfg
        };
        let pre = descend(&psi, c, a, &pre_cfg)?;
        if !pre.converged {
            return Ok(SolveReport {
                converged: pre.diagnostics.residual_norm <= cfg.tol_residual,
                ..pre
            });
        }
        history = pre.residual_history;
        iterations = pre.iterations;
        psi = pre.field;
        res = p.residual(&psi);
        r = p.norm(&res);
    }

    let newton_start = history.len() - 1;
    let mut newton_steps = 0;
    while newton_steps < cfg.max_iters && r > cfg.tol_residual {
        let rhs: Vec<C64> = res.iter().map(|v| -v).collect();
        let eta = r.clamp(1e-12, 1e-2);
        let out = gmres(
            |w| p.hessian(&psi, w),
            |v| p.precondition(v),
            |x, y| interior_dot(&p.g, x, y),
            &rhs,
            eta,
            cfg.gmres_restart,
            cfg.max_linear_iters,
        );
        if !out.converged {
            let reason = Fallback::LinearSolveFailure {
                iterations: out.iterations,
                rel_residual: out.rel_residual,
            };
            return fall_back(psi, c, a, cfg, history, iterations, reason);
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = shifted(&psi, &out.solution, lambda);
            let trial_res = p.residual(&trial);
            let tr = p.norm(&trial_res);
            if tr.is_finite() && (!cfg.line_search || tr <= (1.0 - ARMIJO * lambda) * r) {
                accepted = Some((trial, trial_res, tr));
                break;
            }
            lambda *= 0.5;
        }
        let Some((trial, trial_res, tr)) = accepted else {
            return fall_back(psi, c, a, cfg, history, iterations, Fallback::LineSearchFailure);
        };
        psi = trial;
        res = trial_res;
        r = tr;
        history.push(r);
        iterations += 1;
        newton_steps += 1;
        let n = history.len() - 1;
        if n >= newton_start + DIVERGENCE_WINDOW {
            let from = history[n - DIVERGENCE_WINDOW];
            if r > DIVERGENCE_FACTOR * from {
                return fall_back(
                    psi,
                    c,
                    a,
                    cfg,
                    history,
                    iterations,
                    Fallback::Divergence { from, to: r },
                );
            }
        }
    }
    Ok(report(psi, c, a, iterations, history, cfg.tol_residual, Method::Newton))
}

fn fall_back(
    psi: ComplexField,
    c: f64,
    a: f64,
    cfg: &SolverConfig,
    history: Vec<f64>,
    iterations: usize,
    reason: Fallback,
) -> Result<SolveReport, SolverError> {
    if !cfg.fallback_to_descent {
        return Err(match reason {
            Fallback::LinearSolveFailure {
                iterations,
                rel_residual,
            } => SolverError::LinearSolveFailure {
                iterations,
                rel_residual,
            },
            Fallback::Divergence { from, to } => SolverError::Divergence {
                from,
                to,
                window: DIVERGENCE_WINDOW,
            },
            Fallback::LineSearchFailure => {
                let rep = report(psi, c, a, iterations, history, cfg.tol_residual, Method::Newton);
                SolverError::Stagnation { report: Box::new(rep) }
            }
        });
    }
    let mut rep = match descend(&psi, c, a, cfg) {
        Ok(rep) => rep,
        Err(SolverError::Stagnation { report }) => *report,
        Err(e) => return Err(e),
    };
    let mut full = history;
    full.extend_from_slice(&rep.residual_history[1..]);
    rep.residual_history = full;
    rep.iterations += iterations;
    rep.fallback = Some(reason);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth_bump(g: Grid, eps: f64) -> ComplexField {
        let n = g.half_length();
        ComplexField::from_fn(g, |x1, xt| {
            let w = (std::f64::consts::PI * x1 / (2.0 * n)).cos().powi(2);
            let b = (-(x1 * x1 + xt[0] * xt[0]) / 4.0).exp();
            C64::new(1.0 + eps * w * b, 0.5 * eps * w * b * x1)
        })
    }

    #[test]
    fn constant_is_converged_immediately() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let one = ComplexField::ones(g);
        let cfg = SolverConfig::default();
        let rep = descend(&one, 0.5, 0.25, &cfg).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        let rep = newton_refine(&one, 0.5, 0.25, &cfg).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn descent_returns_to_constant() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut psi = smooth_bump(g, 1e-2);
        for v in psi.values_mut() {
            *v += C64::new(rng.gen_range(-1e-4..1e-4), 0.0);
        }
        let cfg = SolverConfig {
            max_iters: 3000,
            tol_residual: 1e-7,
            ..SolverConfig::default()
        };
        let start = psi.distance_from_one();
        let rep = descend(&psi, 0.0, 0.25, &cfg).unwrap();
        assert!(rep.converged, "residual {:e}", rep.diagnostics.residual_norm);
        assert!(rep.field.distance_from_one() < 1e-2 * start);
        assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn newton_converges_quadratically() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let psi = smooth_bump(g, 1e-3);
        let cfg = SolverConfig {
            tol_residual: 1e-11,
            ..SolverConfig::default()
        };
        let rep = newton_refine(&psi, 0.0, 0.25, &cfg).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.method, Method::Newton);
        assert!(rep.field.distance_from_one() < 1e-9);
        let h = &rep.residual_history;
        for w in h.windows(2) {
            if w[1] > 1e-12 {
                assert!(w[1] / (w[0] * w[0]) < 1e3, "{h:?}");
            }
        }
    }

    #[test]
    fn starved_linear_solve_falls_back() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let psi = smooth_bump(g, 1e-2);
        let cfg = SolverConfig {
            max_linear_iters: 1,
            max_iters: 50,
            tol_residual: 1e-9,
            ..SolverConfig::default()
        };
        let rep = newton_refine(&psi, 0.3, 0.25, &cfg).unwrap();
        assert!(matches!(rep.fallback, Some(Fallback::LinearSolveFailure { .. })));
        let strict = SolverConfig {
            fallback_to_descent: false,
            ..cfg
        };
        assert!(matches!(
            newton_refine(&psi, 0.3, 0.25, &strict),
            Err(SolverError::LinearSolveFailure { .. })
        ));
    }
}
