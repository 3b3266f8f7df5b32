use std::f64::consts::PI;

use super::{AnsatzFamily, AnsatzSpec, SolverError};
use crate::grid::{ComplexField, Grid, PerturbationField, C64};

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

/// Smooth window equal to 1 at the center of the slab and 0 at `x1 = +-N`.
fn x1_window(g: &Grid, x1: f64) -> f64 {
    (0.5 * PI * x1 / g.half_length()).cos().powi(2)
}

/// Unit-winding vortex profile centered at `(z1, z2)`.
fn vortex(x1: f64, x2: f64, z1: f64, z2: f64, core: f64, sign: f64) -> C64 {
    let (dx, dy) = (x1 - z1, x2 - z2);
    let r2 = dx * dx + dy * dy;
    C64::new(dx, sign * dy) / (r2 + core * core).sqrt()
}

/// Builds the perturbation `phi` of the requested family; `1 + phi` equals 1
/// on the Dirichlet rows.
pub fn make_ansatz(spec: &AnsatzSpec, grid: &Grid) -> Result<PerturbationField, SolverError> {
    if !(spec.width > 0.0) || !spec.width.is_finite() {
        return Err(SolverError::InvalidAnsatz(format!(
            "width must be > 0, got {}",
            spec.width
        )));
    }
    if !spec.amplitude.is_finite() {
        return Err(SolverError::InvalidAnsatz(format!(
            "amplitude must be finite, got {}",
            spec.amplitude
        )));
    }
    let g = *grid;
    let [c1, c2, c3] = spec.center;
    let (amp, w) = (spec.amplitude, spec.width);
    let field = match spec.family {
        AnsatzFamily::AmplitudeDip => {
            let slope = spec.slope;
            ComplexField::from_fn(g, |x1, xt| {
                let xi = (x1 - c1) / w;
                let rho = ((xt[0] - c2).powi(2) + (xt[1] - c3).powi(2)).sqrt() / w;
                let s = sech2(xi) * sech2(rho) * x1_window(&g, x1);
                C64::new(-amp * s, amp * slope * xi * s)
            })
        }
        AnsatzFamily::VortexPair => {
            if g.dim() != 2 {
                return Err(SolverError::FamilyDimensionMismatch {
                    family: spec.family,
                    dim: g.dim(),
                });
            }
            if !(spec.separation > 0.0) {
                return Err(SolverError::InvalidAnsatz(format!(
                    "separation must be > 0, got {}",
                    spec.separation
                )));
            }
            let half = 0.5 * spec.separation;
            let l = g.period();
            ComplexField::from_fn(g, |x1, xt| {
                // +1 winding below, -1 above; this orientation carries positive momentum
                let v = vortex(x1, xt[0], c1, c2 - half, w, 1.0) * vortex(x1, xt[0], c1, c2 + half, w, -1.0);
                let wt = (PI * (xt[0] - c2) / l).cos().powi(2);
                (v - 1.0) * (amp * x1_window(&g, x1) * wt)
            })
        }
    };
    Ok(PerturbationField::from_field(field))
}

/// Phase circulation, in units of `2 pi`, around the node rectangle
/// `[i0, i1] x [k0, k1]` of a two-dimensional field.
pub fn winding_number(psi: &ComplexField, i0: usize, i1: usize, k0: usize, k1: usize) -> i64 {
    let g = psi.grid();
    assert_eq!(g.dim(), 2, "winding number is defined for d = 2");
    assert!(i0 < i1 && k0 < k1 && i1 < g.n1() && k1 < g.nt());
    let r = g.row_len();
    let at = |i: usize, k: usize| psi.values()[i * r + k];
    let mut loop_nodes = Vec::new();
    loop_nodes.extend((i0..i1).map(|i| (i, k0)));
    loop_nodes.extend((k0..k1).map(|k| (i1, k)));
    loop_nodes.extend((i0 + 1..=i1).rev().map(|i| (i, k1)));
    loop_nodes.extend((k0 + 1..=k1).rev().map(|k| (i0, k)));
    let mut total = 0.0;
    for (n, &(i, k)) in loop_nodes.iter().enumerate() {
        let (j, l) = loop_nodes[(n + 1) % loop_nodes.len()];
        total += (at(j, l) / at(i, k)).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{lagrangian, momentum};
    use crate::grid::{embed, make_grid};

    #[test]
    fn zero_amplitude_is_trivial() {
        let g = make_grid(2, 10.0, 20.0, 41, 16).unwrap();
        let phi = make_ansatz(&AnsatzSpec::dip(0.0, 2.0), &g).unwrap();
        assert!(phi.values().iter().all(|v| *v == C64::new(0.0, 0.0)));
        assert_eq!(lagrangian(&embed(&phi), 0.5, 0.25), 0.0);
    }

    #[test]
    fn dip_vanishes_on_boundary_rows() {
        let g = make_grid(2, 10.0, 20.0, 101, 32).unwrap();
        let phi = make_ansatz(&AnsatzSpec::dip(1.0, 2.0).with_slope(0.5), &g).unwrap();
        let r = g.row_len();
        let n = phi.values().len();
        assert!(phi.values()[..r]
            .iter()
            .chain(&phi.values()[n - r..])
            .all(|v| v.norm() == 0.0));
        assert!(momentum(&embed(&phi)) > 0.0);
    }

    #[test]
    fn vortex_pair_windings() {
        let g = make_grid(2, 10.0, 20.0, 101, 100).unwrap();
        let spec = AnsatzSpec::vortex_pair(1.0, 0.5, 4.0);
        let psi = embed(&make_ansatz(&spec, &g).unwrap());
        // cores at x2 = -2 and x2 = +2, x1 = 0; node spacing 0.2
        let i = |x: f64| ((x + 10.0) / g.h1()).round() as usize;
        let k = |x: f64| ((x + 10.0) / g.ht()).round() as usize;
        assert_eq!(winding_number(&psi, i(-1.0), i(1.0), k(-3.0), k(-1.0)), 1);
        assert_eq!(winding_number(&psi, i(-1.0), i(1.0), k(1.0), k(3.0)), -1);
        assert_eq!(winding_number(&psi, i(-1.0), i(1.0), k(-5.0), k(5.0)), 0);
        assert!(momentum(&psi) > 0.0);
    }

    #[test]
    fn vortex_pair_needs_two_dimensions() {
        let g = make_grid(3, 4.0, 8.0, 17, 8).unwrap();
        assert!(matches!(
            make_ansatz(&AnsatzSpec::vortex_pair(1.0, 0.5, 2.0), &g),
            Err(SolverError::FamilyDimensionMismatch { .. })
        ));
    }
}
