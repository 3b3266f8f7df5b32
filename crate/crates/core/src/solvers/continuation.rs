use super::{newton_refine, SolveReport, SolverConfig, SolverError};
use crate::grid::ComplexField;
use crate::params::sound_speed;

#[derive(Debug)]
pub struct ContinuationStep {
    pub c: f64,
    pub outcome: Result<SolveReport, SolverError>,
}

impl ContinuationStep {
    /// `(E, P)` of a converged step.
    pub fn energy_momentum(&self) -> Option<(f64, f64)> {
        match &self.outcome {
            Ok(rep) if rep.converged => Some((rep.diagnostics.energy, rep.diagnostics.momentum)),
            _ => None,
        }
    }
}

/// Marches the speed from `c_from` to `c_to` in `steps` equally spaced
/// solves (`steps = 1` solves at `c_from` only). Each solve starts from the
/// last converged field; failed steps are kept in the output and skipped
/// as starting points.
pub fn continuation(
    c_from: f64,
    c_to: f64,
    steps: usize,
    a: f64,
    init: &ComplexField,
    cfg: &SolverConfig,
) -> Vec<ContinuationStep> {
    let vs = sound_speed(a);
    let mut guess = init.clone();
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let c = if steps == 1 {
            c_from
        } else {
            c_from + (c_to - c_from) * k as f64 / (steps - 1) as f64
        };
        let outcome = if (0.0..vs).contains(&c) {
            newton_refine(&guess, c, a, cfg)
        } else {
            Err(SolverError::SubsonicRequired { c, sound_speed: vs })
        };
        if let Ok(rep) = &outcome {
            if rep.converged {
                guess = rep.field.clone();
            }
        }
        out.push(ContinuationStep { c, outcome });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn constant_branch_is_trivial() {
        let g = make_grid(2, 4.0, 8.0, 17, 8).unwrap();
        let one = ComplexField::ones(g);
        let steps = continuation(0.1, 1.2, 5, 0.25, &one, &SolverConfig::default());
        assert_eq!(steps.len(), 5);
        assert!((steps[4].c - 1.2).abs() < 1e-15);
        for s in &steps {
            let rep = s.outcome.as_ref().unwrap();
            assert!(rep.converged);
            assert_eq!(rep.iterations, 0);
            assert_eq!(s.energy_momentum(), Some((0.0, 0.0)));
        }
        let single = continuation(0.4, 1.0, 1, 0.25, &one, &SolverConfig::default());
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].c, 0.4);
    }

    #[test]
    fn supersonic_steps_are_flagged() {
        let g = make_grid(2, 4.0, 8.0, 17, 8).unwrap();
        let one = ComplexField::ones(g);
        let steps = continuation(1.5, 1.9, 2, 0.25, &one, &SolverConfig::default());
        assert!(steps[0].outcome.is_ok());
        assert!(matches!(steps[1].outcome, Err(SolverError::SubsonicRequired { .. })));
    }
}
