use super::{make_ansatz, AnsatzFamily, AnsatzSpec, SolverError};
use crate::functionals::{lagrangian, momentum};
use crate::grid::{embed, ComplexField, Grid, C64};
use crate::params::sound_speed;

/// Candidate set scanned by [`find_negative_endpoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointSearch {
    pub family: AnsatzFamily,
    pub amplitudes: Vec<f64>,
    pub widths: Vec<f64>,
    pub slopes: Vec<f64>,
    /// Core distance of the vortex pair.
    pub separation: f64,
    pub center: [f64; 3],
    /// Rays are scanned on `t in (0, t_max]` with `n_t` points.
    pub t_max: f64,
    pub n_t: usize,
    /// Maximal number of functional evaluations.
    pub budget: usize,
}

impl Default for EndpointSearch {
    fn default() -> Self {
        Self {
            family: AnsatzFamily::AmplitudeDip,
            amplitudes: vec![1.0],
            widths: vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0],
            slopes: vec![0.0, 0.5, 1.0],
            separation: 4.0,
            center: [0.0; 3],
            t_max: 1.0,
            n_t: 20,
            budget: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NegativeEndpoint {
    pub psi0: ComplexField,
    pub t_star: f64,
    pub spec: AnsatzSpec,
    pub lagrangian: f64,
    pub momentum: f64,
    pub evaluations: usize,
}

/// Scans rays `1 + t phi` over the candidate ansatz parameters and returns
/// the first field with `I^c < 0`.
pub fn find_negative_endpoint(
    c: f64,
    a: f64,
    grid: &Grid,
    search: &EndpointSearch,
) -> Result<NegativeEndpoint, SolverError> {
    let vs = sound_speed(a);
    if !(0.0..vs).contains(&c) {
        return Err(SolverError::SubsonicRequired { c, sound_speed: vs });
    }
    let mut best = 0.0f64;
    let mut evaluations = 0;
    if search.budget == 0 || search.n_t == 0 {
        return Err(SolverError::NotFound { best, evaluations });
    }
    for &amplitude in &search.amplitudes {
        for &width in &search.widths {
            for &slope in &search.slopes {
                let spec = AnsatzSpec {
                    family: search.family,
                    amplitude,
                    width,
                    separation: search.separation,
                    slope,
                    center: search.center,
                };
                let phi = make_ansatz(&spec, grid)?;
                for j in 1..=search.n_t {
                    if evaluations >= search.budget {
                        return Err(SolverError::NotFound { best, evaluations });
                    }
                    let t = search.t_max * j as f64 / search.n_t as f64;
                    let psi = embed(&phi.scaled(t));
                    let value = lagrangian(&psi, c, a);
                    evaluations += 1;
                    best = best.min(value);
                    if value < 0.0 {
                        return Ok(NegativeEndpoint {
                            momentum: momentum(&psi),
                            psi0: psi,
                            t_star: t,
                            spec,
                            lagrangian: value,
                            evaluations,
                        });
                    }
                }
            }
        }
    }
    Err(SolverError::NotFound { best, evaluations })
}

/// Maximizes a unimodal `f` on `[lo, hi]` by golden-section search; on
/// plateaus the left point wins.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone)]
pub struct PathMax {
    pub t_peak: f64,
    pub chi: f64,
    /// `(t, I^c(1 + t (psi0 - 1)))` on the sampling grid.
    pub samples: Vec<(f64, f64)>,
}

impl PathMax {
    /// The field at the peak of the straight path.
    pub fn peak_field(&self, psi0: &ComplexField) -> ComplexField {
        path_point(psi0, self.t_peak)
    }
}

fn path_point(psi0: &ComplexField, t: f64) -> ComplexField {
    let mut out = psi0.clone();
    for v in out.values_mut() {
        *v = C64::new(1.0, 0.0) + (*v - 1.0) * t;
    }
    out
}

/// Maximum of `I^c` along the straight path from `1` to `psi0`, sampled on
/// `n_t` points of `[0, 1]` and refined by golden-section search.
pub fn path_max(psi0: &ComplexField, c: f64, a: f64, n_t: usize) -> PathMax {
    let n_t = n_t.max(3);
    let f = |t: f64| lagrangian(&path_point(psi0, t), c, a);
    let samples: Vec<(f64, f64)> = (0..n_t)
        .map(|j| {
            let t = j as f64 / (n_t - 1) as f64;
            (t, f(t))
        })
        .collect();
    let mut best = 0;
    for (j, s) in samples.iter().enumerate() {
        if s.1 > samples[best].1 {
            best = j;
        }
    }
    let lo = samples[best.saturating_sub(1)].0;
    let hi = samples[(best + 1).min(n_t - 1)].0;
    let (t_ref, f_ref) = golden_section_max(f, lo, hi, 1e-10);
    let (t_peak, chi) = if f_ref >= samples[best].1 {
        (t_ref, f_ref)
    } else {
        samples[best]
    };
    PathMax { t_peak, chi, samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn golden_section_on_quadratic() {
        let (x, fx) = golden_section_max(|t| 2.0 - 3.0 * (t - 0.3141592653589793).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.3141592653589793).abs() < 1e-8);
        assert!((fx - 2.0).abs() < 1e-14);
    }

    #[test]
    fn plateau_prefers_left() {
        let (x, _) = golden_section_max(|t| if t < 0.5 { t } else { 0.5 }, 0.0, 1.0, 1e-10);
        assert!((x - 0.5).abs() < 1e-6);
        let (x, _) = golden_section_max(|_| 1.0, 0.0, 1.0, 1e-10);
        assert!(x < 1e-6);
    }

    #[test]
    fn zero_budget_is_not_found() {
        let g = make_grid(2, 6.0, 12.0, 25, 16).unwrap();
        let search = EndpointSearch {
            budget: 0,
            ..EndpointSearch::default()
        };
        assert!(matches!(
            find_negative_endpoint(0.5, 0.25, &g, &search),
            Err(SolverError::NotFound { evaluations: 0, .. })
        ));
        assert!(matches!(
            find_negative_endpoint(2.0, 0.25, &g, &search),
            Err(SolverError::SubsonicRequired { .. })
        ));
    }

    #[test]
    fn small_amplitudes_stay_positive_at_rest() {
        let g = make_grid(2, 6.0, 12.0, 49, 32).unwrap();
        let search = EndpointSearch {
            amplitudes: vec![0.05, 0.1],
            widths: vec![1.0, 2.0],
            slopes: vec![0.0, 0.5],
            n_t: 5,
            ..EndpointSearch::default()
        };
        match find_negative_endpoint(0.0, 0.25, &g, &search) {
            Err(SolverError::NotFound { best, evaluations }) => {
                assert_eq!(evaluations, 40);
                assert_eq!(best, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
