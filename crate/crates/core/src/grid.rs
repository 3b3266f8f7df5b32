//! Slab discretization `{-N < x1 < N} x (periodic transverse box)`.
//!
//! Values are stored row-major with `x1` slowest; one "row" holds the
//! `nt^(d-1)` transverse nodes of a fixed `x1`. Along `x1` the nodes include
//! both endpoints and carry the Dirichlet value `psi = 1`; transversally the
//! box is periodic with period `L` and the endpoint is excluded.
//!
//! Derivatives along `x1` are second-order centered differences, transverse
//! derivatives are spectral. The discrete Fourier symbol of the Nyquist mode
//! is set to zero, for first and second derivatives alike, so the discrete
//! transverse Laplacian is the square of the discrete transverse gradient.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub type C64 = Complex64;

const MIN_POINTS: usize = 8;
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("need at least {MIN_POINTS} points per direction, got n1 = {n1}, nt = {nt}")]
    BadResolution { n1: usize, nt: usize },
    #[error("dimension {0} is not supported, only d = 2 or d = 3")]
    UnsupportedDimension(usize),
    #[error("lengths must be positive, got N = {half_length}, L = {period}")]
    BadLength { half_length: f64, period: f64 },
    #[error("field deviates from 1 on the x1 boundary by {0:e}")]
    BoundaryViolation(f64),
    #[error("field has {got} values, grid needs {expected}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Boundary handling along `x1`. Slabs use `Dirichlet`; `Periodic` is a
/// test torus used for plane-wave and single-mode checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum X1Boundary {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_length: f64,
    period: f64,
    n1: usize,
    nt: usize,
    x1_boundary: X1Boundary,
}

pub fn make_grid(d: usize, n: f64, l: f64, n1: usize, nt: usize) -> Result<Grid, GridError> {
    Grid::new(d, n, l, n1, nt, X1Boundary::Dirichlet)
}

impl Grid {
    pub fn new(
        dim: usize,
        half_length: f64,
        period: f64,
        n1: usize,
        nt: usize,
        x1_boundary: X1Boundary,
    ) -> Result<Self, GridError> {
        if dim != 2 && dim != 3 {
            return Err(GridError::UnsupportedDimension(dim));
        }
        if n1 < MIN_POINTS || nt < MIN_POINTS {
            return Err(GridError::BadResolution { n1, nt });
        }
        if !(half_length > 0.0 && period > 0.0 && half_length.is_finite() && period.is_finite()) {
            return Err(GridError::BadLength { half_length, period });
        }
        Ok(Self {
            dim,
            half_length,
            period,
            n1,
            nt,
            x1_boundary,
        })
    }

    /// Same box, periodic along `x1` with period `2N`.
    pub fn periodic(dim: usize, half_length: f64, period: f64, n1: usize, nt: usize) -> Result<Self, GridError> {
        Self::new(dim, half_length, period, n1, nt, X1Boundary::Periodic)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn half_length(&self) -> f64 {
        self.half_length
    }
    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn n1(&self) -> usize {
        self.n1
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn x1_boundary(&self) -> X1Boundary {
        self.x1_boundary
    }
    pub fn is_periodic(&self) -> bool {
        self.x1_boundary == X1Boundary::Periodic
    }

    pub fn h1(&self) -> f64 {
        match self.x1_boundary {
            X1Boundary::Dirichlet => 2.0 * self.half_length / (self.n1 - 1) as f64,
            X1Boundary::Periodic => 2.0 * self.half_length / self.n1 as f64,
        }
    }

    pub fn ht(&self) -> f64 {
        self.period / self.nt as f64
    }

    /// Number of transverse nodes per `x1` row.
    pub fn row_len(&self) -> usize {
        self.nt.pow(self.dim as u32 - 1)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.row_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x1(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.h1()
    }

    /// Transverse coordinate of node `k` along one transverse axis.
    pub fn xt(&self, k: usize) -> f64 {
        -0.5 * self.period + k as f64 * self.ht()
    }

    /// Transverse coordinates `(x2, x3)` of the in-row offset `t`; `x3 = 0` when `d = 2`.
    pub fn transverse_point(&self, t: usize) -> [f64; 2] {
        if self.dim == 2 {
            [self.xt(t), 0.0]
        } else {
            [self.xt(t / self.nt), self.xt(t % self.nt)]
        }
    }

    /// Rows carrying Dirichlet data.
    pub fn is_boundary_row(&self, i: usize) -> bool {
        self.x1_boundary == X1Boundary::Dirichlet && (i == 0 || i == self.n1 - 1)
    }

    /// Rows holding unknowns.
    pub fn interior_rows(&self) -> std::ops::Range<usize> {
        match self.x1_boundary {
            X1Boundary::Dirichlet => 1..self.n1 - 1,
            X1Boundary::Periodic => 0..self.n1,
        }
    }

    /// Trapezoidal weight along `x1`.
    pub fn x1_weight(&self, i: usize) -> f64 {
        if self.is_boundary_row(i) {
            0.5 * self.h1()
        } else {
            self.h1()
        }
    }

    /// Rectangle-rule transverse cell volume `ht^(d-1)`.
    pub fn transverse_cell(&self) -> f64 {
        self.ht().powi(self.dim as i32 - 1)
    }

    /// Transverse box volume `L^(d-1)`.
    pub fn transverse_volume(&self) -> f64 {
        self.period.powi(self.dim as i32 - 1)
    }

    /// Quadrature weight of an interior node.
    pub fn cell(&self) -> f64 {
        self.h1() * self.transverse_cell()
    }

    /// Angular wavenumber of DFT index `m`; zero at Nyquist.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let nt = self.nt;
        let base = 2.0 * PI / self.period;
        if 2 * m == nt {
            0.0
        } else if 2 * m < nt {
            base * m as f64
        } else {
            base * (m as f64 - nt as f64)
        }
    }

    /// `(kappa_2, kappa_3)` at in-row spectral offset `t`.
    pub fn transverse_wavevector(&self, t: usize) -> [f64; 2] {
        if self.dim == 2 {
            [self.wavenumber(t), 0.0]
        } else {
            [self.wavenumber(t / self.nt), self.wavenumber(t % self.nt)]
        }
    }

    /// Squared transverse wavenumber at spectral offset `t`.
    pub fn kappa_sq(&self, t: usize) -> f64 {
        let [a, b] = self.transverse_wavevector(t);
        a * a + b * b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<C64>,
}

impl ComplexField {
    pub fn constant(grid: Grid, value: C64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn ones(grid: Grid) -> Self {
        Self::constant(grid, C64::new(1.0, 0.0))
    }

    pub fn from_values(grid: Grid, values: Vec<C64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x1, [x2, x3])` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, [f64; 2]) -> C64) -> Self {
        let row = grid.row_len();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n1() {
            let x1 = grid.x1(i);
            for t in 0..row {
                values.push(f(x1, grid.transverse_point(t)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[C64] {
        let r = self.grid.row_len();
        &self.values[i * r..(i + 1) * r]
    }

    /// Sets the Dirichlet rows to exactly 1.
    pub fn enforce_boundary(&mut self) {
        let g = self.grid;
        if g.is_periodic() {
            return;
        }
        let r = g.row_len();
        let last = (g.n1() - 1) * r;
        self.values[..r].fill(C64::new(1.0, 0.0));
        self.values[last..].fill(C64::new(1.0, 0.0));
    }

    /// `max |psi - 1|` over the Dirichlet rows (zero on a periodic grid).
    pub fn boundary_deviation(&self) -> f64 {
        let g = self.grid;
        if g.is_periodic() {
            return 0.0;
        }
        let r = g.row_len();
        let last = (g.n1() - 1) * r;
        self.values[..r]
            .iter()
            .chain(self.values[last..].iter())
            .map(|v| (v - 1.0).norm())
            .fold(0.0, f64::max)
    }

    pub fn sup_mod(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Weighted `L^2` norm with the trapezoid/rectangle quadrature.
    pub fn l2_norm(&self) -> f64 {
        weighted_dot(&self.grid, &self.values, &self.values).sqrt()
    }

    /// `L^2` norm of `psi - 1`.
    pub fn distance_from_one(&self) -> f64 {
        let g = self.grid;
        let r = g.row_len();
        let mut acc = 0.0;
        for i in 0..g.n1() {
            let w = g.x1_weight(i) * g.transverse_cell();
            acc += w * self.values[i * r..(i + 1) * r]
                .iter()
                .map(|v| (v - 1.0).norm_sqr())
                .sum::<f64>();
        }
        acc.sqrt()
    }
}

/// Real inner product `sum w Re(conj(a) b)` with the trapezoid weights.
pub fn weighted_dot(g: &Grid, a: &[C64], b: &[C64]) -> f64 {
    let r = g.row_len();
    let mut acc = 0.0;
    for i in 0..g.n1() {
        let s: f64 = a[i * r..(i + 1) * r]
            .iter()
            .zip(&b[i * r..(i + 1) * r])
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum();
        acc += g.x1_weight(i) * s;
    }
    acc * g.transverse_cell()
}

/// `phi` with `psi = 1 + phi`; the Dirichlet rows are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField(ComplexField);

impl PerturbationField {
    pub fn zeros(grid: Grid) -> Self {
        Self(ComplexField::constant(grid, C64::new(0.0, 0.0)))
    }

    /// Wraps a field, zeroing the Dirichlet rows.
    pub fn from_field(mut field: ComplexField) -> Self {
        let g = field.grid;
        if !g.is_periodic() {
            let r = g.row_len();
            let last = (g.n1() - 1) * r;
            for v in field.values[..r].iter_mut() {
                *v = C64::new(0.0, 0.0);
            }
            for v in field.values[last..].iter_mut() {
                *v = C64::new(0.0, 0.0);
            }
        }
        Self(field)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, [f64; 2]) -> C64) -> Self {
        Self::from_field(ComplexField::from_fn(grid, f))
    }

    pub fn field(&self) -> &ComplexField {
        &self.0
    }
    pub fn grid(&self) -> &Grid {
        &self.0.grid
    }
    pub fn values(&self) -> &[C64] {
        &self.0.values
    }
    pub fn into_field(self) -> ComplexField {
        self.0
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut f = self.0.clone();
        for v in f.values.iter_mut() {
            *v *= t;
        }
        Self(f)
    }
}

/// `psi = 1 + phi`.
pub fn embed(phi: &PerturbationField) -> ComplexField {
    let mut f = phi.0.clone();
    for v in f.values.iter_mut() {
        *v += 1.0;
    }
    f.enforce_boundary();
    f
}

/// `phi = psi - 1`, rejecting fields that are not 1 on the Dirichlet rows.
pub fn extract(psi: &ComplexField) -> Result<PerturbationField, GridError> {
    let dev = psi.boundary_deviation();
    if dev > BOUNDARY_TOL {
        return Err(GridError::BoundaryViolation(dev));
    }
    let mut f = psi.clone();
    for v in f.values.iter_mut() {
        *v -= 1.0;
    }
    Ok(PerturbationField::from_field(f))
}

/// `w(x) = exp(i c x1 / 2) psi(x)`.
pub fn gauge_transform(psi: &ComplexField, c: f64) -> ComplexField {
    let g = psi.grid;
    let r = g.row_len();
    let mut out = psi.clone();
    for i in 0..g.n1() {
        let phase = C64::from_polar(1.0, 0.5 * c * g.x1(i));
        for v in out.values[i * r..(i + 1) * r].iter_mut() {
            *v *= phase;
        }
    }
    out
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// FFT plans for the transverse axes of one grid.
#[derive(Clone)]
pub struct TransverseFft {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TransverseFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransverseFft").field("grid", &self.grid).finish()
    }
}

impl TransverseFft {
    pub fn new(grid: &Grid) -> Self {
        let (forward, inverse) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(grid.nt()), p.plan_fft_inverse(grid.nt()))
        });
        Self {
            grid: *grid,
            forward,
            inverse,
        }
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [C64]) {
        let nt = self.grid.nt();
        // innermost axis is contiguous for both d = 2 and d = 3
        fft.process(data);
        if self.grid.dim() == 3 {
            let block = nt * nt;
            let mut tmp = vec![C64::new(0.0, 0.0); block];
            for chunk in data.chunks_mut(block) {
                for j in 0..nt {
                    for k in 0..nt {
                        tmp[k * nt + j] = chunk[j * nt + k];
                    }
                }
                fft.process(&mut tmp);
                for j in 0..nt {
                    for k in 0..nt {
                        chunk[j * nt + k] = tmp[k * nt + j];
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform of every row.
    pub fn forward(&self, data: &mut [C64]) {
        self.run(&self.forward, data);
    }

    /// Normalized inverse transform of every row.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(&self.inverse, data);
        let scale = 1.0 / self.grid.row_len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Multiplies spectral offset `t` of every row by `symbol(t)` in Fourier space.
    pub fn apply_symbol(&self, data: &mut [C64], symbol: impl Fn(usize) -> C64) {
        self.forward(data);
        let r = self.grid.row_len();
        for row in data.chunks_mut(r) {
            for (t, v) in row.iter_mut().enumerate() {
                *v *= symbol(t);
            }
        }
        self.inverse(data);
    }

    /// Spectral derivative along transverse axis `axis` (0 for `x2`, 1 for `x3`).
    pub fn derivative(&self, values: &[C64], axis: usize) -> Vec<C64> {
        let mut out = values.to_vec();
        let g = self.grid;
        self.apply_symbol(&mut out, |t| C64::new(0.0, g.transverse_wavevector(t)[axis]));
        out
    }

    /// Spectral transverse Laplacian.
    pub fn laplacian(&self, values: &[C64]) -> Vec<C64> {
        let mut out = values.to_vec();
        let g = self.grid;
        self.apply_symbol(&mut out, |t| C64::new(-g.kappa_sq(t), 0.0));
        out
    }
}

/// Centered difference along `x1` on the rows in `grid.interior_rows()`;
/// Dirichlet rows get the second-order one-sided stencil.
pub fn d1_centered(g: &Grid, values: &[C64]) -> Vec<C64> {
    let r = g.row_len();
    let n1 = g.n1();
    let inv2h = 0.5 / g.h1();
    let mut out = vec![C64::new(0.0, 0.0); values.len()];
    let row = |i: usize| &values[i * r..(i + 1) * r];
    for i in 0..n1 {
        let dst = &mut out[i * r..(i + 1) * r];
        let (a, b, cc, w): (&[C64], &[C64], &[C64], [f64; 3]) = if g.is_periodic() {
            (row((i + n1 - 1) % n1), row(i), row((i + 1) % n1), [-1.0, 0.0, 1.0])
        } else if i == 0 {
            (row(0), row(1), row(2), [-3.0, 4.0, -1.0])
        } else if i == n1 - 1 {
            (row(n1 - 3), row(n1 - 2), row(n1 - 1), [1.0, -4.0, 3.0])
        } else {
            (row(i - 1), row(i), row(i + 1), [-1.0, 0.0, 1.0])
        };
        for t in 0..r {
            dst[t] = (a[t] * w[0] + b[t] * w[1] + cc[t] * w[2]) * inv2h;
        }
    }
    out
}

/// Three-point second difference along `x1`; Dirichlet rows use the
/// second-order one-sided four-point stencil.
pub fn d1_second(g: &Grid, values: &[C64]) -> Vec<C64> {
    let r = g.row_len();
    let n1 = g.n1();
    let inv_h2 = 1.0 / (g.h1() * g.h1());
    let mut out = vec![C64::new(0.0, 0.0); values.len()];
    let row = |i: usize| &values[i * r..(i + 1) * r];
    for i in 0..n1 {
        let dst = &mut out[i * r..(i + 1) * r];
        if g.is_periodic() || (i > 0 && i < n1 - 1) {
            let (a, b, cc) = if g.is_periodic() {
                (row((i + n1 - 1) % n1), row(i), row((i + 1) % n1))
            } else {
                (row(i - 1), row(i), row(i + 1))
            };
            for t in 0..r {
                dst[t] = (a[t] - b[t] * 2.0 + cc[t]) * inv_h2;
            }
        } else {
            let idx: [usize; 4] = if i == 0 {
                [0, 1, 2, 3]
            } else {
                [n1 - 1, n1 - 2, n1 - 3, n1 - 4]
            };
            let (a, b, cc, d) = (row(idx[0]), row(idx[1]), row(idx[2]), row(idx[3]));
            for t in 0..r {
                dst[t] = (a[t] * 2.0 - b[t] * 5.0 + cc[t] * 4.0 - d[t]) * inv_h2;
            }
        }
    }
    out
}

/// Discrete Laplacian: finite differences along `x1`, spectral transversally.
pub fn laplacian(g: &Grid, fft: &TransverseFft, values: &[C64]) -> Vec<C64> {
    let mut out = d1_second(g, values);
    let lt = fft.laplacian(values);
    for (o, l) in out.iter_mut().zip(lt) {
        *o += l;
    }
    out
}

#[derive(Debug, Clone)]
pub struct Derivatives {
    pub d_x1: ComplexField,
    /// One entry per transverse axis.
    pub d_transverse: Vec<ComplexField>,
    pub laplacian: ComplexField,
}

pub fn differentiate(f: &ComplexField) -> Derivatives {
    let g = *f.grid();
    let fft = TransverseFft::new(&g);
    let wrap = |values: Vec<C64>| ComplexField { grid: g, values };
    Derivatives {
        d_x1: wrap(d1_centered(&g, f.values())),
        d_transverse: (0..g.dim() - 1)
            .map(|ax| wrap(fft.derivative(f.values(), ax)))
            .collect(),
        laplacian: wrap(laplacian(&g, &fft, f.values())),
    }
}
