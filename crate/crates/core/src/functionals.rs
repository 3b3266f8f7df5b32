//! Variational quantities on discrete fields.
//!
//! The discrete Lagrangian is built so that its exact gradient is the
//! discrete Euler-Lagrange residual:
//!
//! * the `x1` kinetic term is the edge sum `1/2 sum |psi_{i+1} - psi_i|^2 / h1`,
//!   whose gradient is the three-point Laplacian;
//! * the transverse kinetic term uses the spectral gradient;
//! * the momentum uses centered differences on the interior rows.
//!
//! With `psi = 1` on the Dirichlet rows, first and second variations along
//! interior-supported directions are therefore exact derivatives of
//! [`lagrangian`], up to rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{d1_centered, laplacian, ComplexField, Grid, TransverseFft, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub energy: f64,
    pub momentum: f64,
    pub lagrangian: f64,
    pub a_poho: f64,
    pub b_poho: f64,
    pub residual_norm: f64,
    pub sup_mod: f64,
    pub pohozaev_residual: f64,
}

impl Diagnostics {
    pub const CSV_HEADER: &'static str = "E,P,Ic,Apoho,Bpoho,residual_norm,sup_mod,pohozaev_residual";

    pub fn csv_row(&self) -> String {
        [
            self.energy,
            self.momentum,
            self.lagrangian,
            self.a_poho,
            self.b_poho,
            self.residual_norm,
            self.sup_mod,
            self.pohozaev_residual,
        ]
        .iter()
        .map(|x| crate::fmt_g17(*x))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// `1/2 sum_edges cell |psi_{i+1} - psi_i|^2 / h1^2`.
pub fn kinetic_x1(psi: &ComplexField) -> f64 {
    let g = psi.grid();
    let r = g.row_len();
    let n1 = g.n1();
    let edges = if g.is_periodic() { n1 } else { n1 - 1 };
    let v = psi.values();
    let mut acc = 0.0;
    for i in 0..edges {
        let j = (i + 1) % n1;
        acc += v[i * r..(i + 1) * r]
            .iter()
            .zip(&v[j * r..(j + 1) * r])
            .map(|(a, b)| (b - a).norm_sqr())
            .sum::<f64>();
    }
    0.5 * acc * g.transverse_cell() / g.h1()
}

fn row_weighted_sum(g: &Grid, f: impl Fn(usize, usize) -> f64) -> f64 {
    let r = g.row_len();
    let mut acc = 0.0;
    for i in 0..g.n1() {
        let s: f64 = (0..r).map(|t| f(i, i * r + t)).sum();
        acc += g.x1_weight(i) * s;
    }
    acc * g.transverse_cell()
}

/// `A(psi) = 1/2 sum_j>=2 int |d_j psi|^2` with spectral transverse derivatives.
pub fn kinetic_transverse(psi: &ComplexField) -> f64 {
    let g = *psi.grid();
    let fft = TransverseFft::new(&g);
    let mut acc = 0.0;
    for axis in 0..g.dim() - 1 {
        let d = fft.derivative(psi.values(), axis);
        acc += row_weighted_sum(&g, |_, k| d[k].norm_sqr());
    }
    0.5 * acc
}

/// `1/2 int (|psi|^2 - 1)^2 (|psi|^2 - A)`.
pub fn potential_energy(psi: &ComplexField, a: f64) -> f64 {
    let v = psi.values();
    0.5 * row_weighted_sum(psi.grid(), |_, k| {
        let rho = v[k].norm_sqr();
        (rho - 1.0) * (rho - 1.0) * (rho - a)
    })
}

pub fn energy(psi: &ComplexField, a: f64) -> f64 {
    kinetic_x1(psi) + kinetic_transverse(psi) + potential_energy(psi, a)
}

/// Interior-row sum `sum cell f(k)` (all rows on a periodic grid).
fn interior_sum(g: &Grid, f: impl Fn(usize) -> f64) -> f64 {
    let r = g.row_len();
    let mut acc = 0.0;
    for i in g.interior_rows() {
        acc += (0..r).map(|t| f(i * r + t)).sum::<f64>();
    }
    acc * g.cell()
}

/// `int d_x1(Im psi) (Re psi - 1)`, the integrand of the momentum without its sign.
fn momentum_integral(psi: &ComplexField) -> f64 {
    let g = *psi.grid();
    let v = psi.values();
    let dx = d1_centered(&g, v);
    interior_sum(&g, |k| dx[k].im * (v[k].re - 1.0))
}

/// `P(psi) = -int d_x1(Im psi) (Re psi - 1)`.
pub fn momentum(psi: &ComplexField) -> f64 {
    -momentum_integral(psi)
}

/// `I^c = E - c P`.
pub fn lagrangian(psi: &ComplexField, c: f64, a: f64) -> f64 {
    energy(psi, a) - c * momentum(psi)
}

/// `I^c` assembled from the expanded form `E + c int d_x1(Im psi)(Re psi - 1)`.
pub fn lagrangian_expanded(psi: &ComplexField, c: f64, a: f64) -> f64 {
    kinetic_x1(psi) + kinetic_transverse(psi) + potential_energy(psi, a) + c * momentum_integral(psi)
}

/// Gradient `G(psi) = -Lap psi - i c d_x1 psi + (|psi|^2-1)(3|psi|^2-2A-1) psi`
/// on the interior rows; zero on the Dirichlet rows.
pub fn gradient(psi: &ComplexField, c: f64, a: f64) -> ComplexField {
    let g = *psi.grid();
    let fft = TransverseFft::new(&g);
    let v = psi.values();
    let lap = laplacian(&g, &fft, v);
    let dx = d1_centered(&g, v);
    let r = g.row_len();
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for i in g.interior_rows() {
        for k in i * r..(i + 1) * r {
            let rho = v[k].norm_sqr();
            out[k] = -lap[k] - C64::new(0.0, c) * dx[k] + v[k] * ((rho - 1.0) * (3.0 * rho - 2.0 * a - 1.0));
        }
    }
    ComplexField::from_values(g, out).expect("shape")
}

/// `H(psi) w`, the second variation as an operator, for `w` zero on the Dirichlet rows.
pub fn hessian_apply(psi: &ComplexField, w: &[C64], c: f64, a: f64) -> Vec<C64> {
    let g = *psi.grid();
    let fft = TransverseFft::new(&g);
    hessian_apply_with(&g, &fft, psi.values(), w, c, a)
}

pub(crate) fn hessian_apply_with(g: &Grid, fft: &TransverseFft, v: &[C64], w: &[C64], c: f64, a: f64) -> Vec<C64> {
    let lap = laplacian(g, fft, w);
    let dx = d1_centered(g, w);
    let r = g.row_len();
    let mut out = vec![C64::new(0.0, 0.0); w.len()];
    for i in g.interior_rows() {
        for k in i * r..(i + 1) * r {
            let rho = v[k].norm_sqr();
            let proj = v[k].re * w[k].re + v[k].im * w[k].im;
            out[k] = -lap[k] - C64::new(0.0, c) * dx[k]
                + w[k] * ((rho - 1.0) * (3.0 * rho - 2.0 * a - 1.0))
                + v[k] * (4.0 * (3.0 * rho - a - 2.0) * proj);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Residual {
    pub field: ComplexField,
    pub norm: f64,
}

/// Discrete residual `i c d_x1 psi + Lap psi + psi(|psi|^2-1)(2A+1-3|psi|^2)`
/// and its `L^2` norm over the interior rows.
pub fn el_residual(psi: &ComplexField, c: f64, a: f64) -> Residual {
    let mut field = gradient(psi, c, a);
    for v in field.values_mut() {
        *v = -*v;
    }
    let norm = interior_l2(&field);
    Residual { field, norm }
}

pub fn residual_norm(psi: &ComplexField, c: f64, a: f64) -> f64 {
    interior_l2(&gradient(psi, c, a))
}

/// `L^2` norm over the interior rows.
pub fn interior_l2(f: &ComplexField) -> f64 {
    let v = f.values();
    interior_sum(f.grid(), |k| v[k].norm_sqr()).sqrt()
}

/// Real inner product over the interior rows.
pub fn interior_dot(g: &Grid, x: &[C64], y: &[C64]) -> f64 {
    interior_sum(g, |k| x[k].re * y[k].re + x[k].im * y[k].im)
}

/// `(I^c)'(psi) phi` in the weak form: edge differences along `x1`,
/// spectral transverse gradients and the product rule on the momentum.
pub fn first_variation(psi: &ComplexField, phi: &ComplexField, c: f64, a: f64) -> f64 {
    let g = *psi.grid();
    let fft = TransverseFft::new(&g);
    let (p, q) = (psi.values(), phi.values());
    let r = g.row_len();
    let n1 = g.n1();

    let edges = if g.is_periodic() { n1 } else { n1 - 1 };
    let mut kin1 = 0.0;
    for i in 0..edges {
        let j = (i + 1) % n1;
        for t in 0..r {
            let dp = p[j * r + t] - p[i * r + t];
            let dq = q[j * r + t] - q[i * r + t];
            kin1 += dp.re * dq.re + dp.im * dq.im;
        }
    }
    kin1 *= g.transverse_cell() / g.h1();

    let mut kint = 0.0;
    for axis in 0..g.dim() - 1 {
        let dp = fft.derivative(p, axis);
        let dq = fft.derivative(q, axis);
        kint += row_weighted_sum(&g, |_, k| dp[k].re * dq[k].re + dp[k].im * dq[k].im);
    }

    let dpx = d1_centered(&g, p);
    let dqx = d1_centered(&g, q);
    let mom = c * interior_sum(&g, |k| dqx[k].im * (p[k].re - 1.0) + dpx[k].im * q[k].re);

    let pot = row_weighted_sum(&g, |_, k| {
        let rho = p[k].norm_sqr();
        let proj = p[k].re * q[k].re + p[k].im * q[k].im;
        (rho - 1.0) * (3.0 * rho - 2.0 * a - 1.0) * proj
    });
    kin1 + kint + mom + pot
}

/// `Q_psi(phi) = (I^c)''(psi)[phi, phi]`.
pub fn second_variation(psi: &ComplexField, phi: &ComplexField, c: f64, a: f64) -> f64 {
    let g = *psi.grid();
    let (p, q) = (psi.values(), phi.values());
    let kin = 2.0 * (kinetic_x1(phi) + kinetic_transverse(phi));
    let dqx = d1_centered(&g, q);
    let mom = 2.0 * c * interior_sum(&g, |k| dqx[k].im * q[k].re);
    let pot = row_weighted_sum(&g, |_, k| {
        let rho = p[k].norm_sqr();
        let proj = p[k].re * q[k].re + p[k].im * q[k].im;
        (rho - 1.0) * (3.0 * rho - 1.0 - 2.0 * a) * q[k].norm_sqr() + 4.0 * (3.0 * rho - 2.0 - a) * proj * proj
    });
    kin + mom + pot
}

/// `(A(psi), B(psi))` of the transverse-dilation identity.
pub fn ab_split(psi: &ComplexField, c: f64, a: f64) -> (f64, f64) {
    let a_poho = kinetic_transverse(psi);
    let b_poho = kinetic_x1(psi) + potential_energy(psi, a) - c * momentum(psi);
    (a_poho, b_poho)
}

/// `(d-3) A(psi) + (d-1) B(psi)`; vanishes at finite-energy solutions.
pub fn pohozaev_residual(psi: &ComplexField, c: f64, a: f64) -> f64 {
    let d = psi.grid().dim() as f64;
    let (ap, bp) = ab_split(psi, c, a);
    (d - 3.0) * ap + (d - 1.0) * bp
}

pub fn diagnostics(psi: &ComplexField, c: f64, a: f64) -> Diagnostics {
    let d = psi.grid().dim() as f64;
    let k1 = kinetic_x1(psi);
    let kt = kinetic_transverse(psi);
    let pot = potential_energy(psi, a);
    let p = momentum(psi);
    let energy = k1 + kt + pot;
    let b_poho = k1 + pot - c * p;
    Diagnostics {
        energy,
        momentum: p,
        lagrangian: energy - c * p,
        a_poho: kt,
        b_poho,
        residual_norm: residual_norm(psi, c, a),
        sup_mod: psi.sup_mod(),
        pohozaev_residual: (d - 3.0) * kt + (d - 1.0) * b_poho,
    }
}

/// Names of the pointwise expansions checked by [`identity_suite`].
pub const IDENTITY_NAMES: [&str; 6] = [
    "square_of_defect",
    "slope_factor",
    "defect_times_shift",
    "modulus_shift",
    "defect_expansion",
    "nehari_integrand",
];

/// `|lhs - rhs|` of each pointwise expansion at `(u, v, A)`, in the order of [`IDENTITY_NAMES`].
pub fn identity_deviations(u: f64, v: f64, a: f64) -> [f64; 6] {
    let s = u - 1.0;
    let (v2, s2) = (v * v, s * s);
    let defect = 1.0 - u * u - v2;
    let slope = 1.0 + 2.0 * a - 3.0 * (u * u + v2);
    [
        // (1-u^2-v^2)^2
        (defect * defect - (4.0 * s2 + s2 * s2 + v2 * v2 + 4.0 * s2 * s + 4.0 * s * v2 + 2.0 * s2 * v2)).abs(),
        // 1+2A-3(u^2+v^2)
        (slope - (-3.0 * s2 - 6.0 * s - 3.0 * v2 + 2.0 * (a - 1.0))).abs(),
        // (1-u^2-v^2)(u-1)
        (defect * s - (-2.0 * s2 + (1.0 - u).powi(3) + v2 * (1.0 - u))).abs(),
        // u^2+v^2-A
        ((u * u + v2 - a) - (v2 + s2 + 2.0 * s + 1.0 - a)).abs(),
        // 1-u^2-v^2
        (defect - (-s2 - 2.0 * s - v2)).abs(),
        // (1-u^2-v^2)(u(1-u)-v^2)
        (defect * (u * (1.0 - u) - v2) - (2.0 * s2 + 3.0 * s2 * s + 3.0 * v2 * s + 2.0 * s2 * v2 + s2 * s2 + v2 * v2))
            .abs(),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    pub max_deviation: f64,
    pub per_identity: [f64; 6],
}

/// Evaluates both sides of every expansion at `n_samples` seeded points of
/// `[-3, 3]^2 x (0, 1)`.
pub fn identity_suite(n_samples: usize, seed: u64) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 6];
    for _ in 0..n_samples.max(1) {
        let u = rng.gen_range(-3.0..3.0);
        let v = rng.gen_range(-3.0..3.0);
        let a = rng.gen_range(f64::EPSILON..1.0);
        for (w, d) in worst.iter_mut().zip(identity_deviations(u, v, a)) {
            *w = w.max(d);
        }
    }
    IdentityReport {
        samples: n_samples.max(1),
        max_deviation: worst.iter().cloned().fold(0.0, f64::max),
        per_identity: worst,
    }
}
