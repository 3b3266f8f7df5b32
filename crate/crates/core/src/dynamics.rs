//! Time integration of `i d_t Psi - Lap Psi = Psi (|Psi|^2 - 1)(2A + 1 - 3|Psi|^2)`,
//! rearranged as `i d_t Psi = Lap Psi + Psi N(|Psi|^2)`.
//!
//! One step is a Strang splitting: half a nonlinear phase rotation, a full
//! linear step, half a rotation. The linear step acts on `phi = Psi - 1`
//! with zero Dirichlet rows; transverse modes advance exactly, `x1` by
//! Crank-Nicolson.

use thiserror::Error;

use crate::functionals::{energy, momentum};
use crate::grid::{ComplexField, Grid, TransverseFft, C64};
use crate::linalg::{solve_cyclic_const, solve_tridiag_const};
use crate::params::c_a;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("sup |Psi| = {sup_mod} exceeded {limit} at t = {t}")]
    BlowupDetected { t: f64, sup_mod: f64, limit: f64 },
    #[error("invalid evolution configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub monitor_stride: usize,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!(
                "T must be > 0, got {}",
                self.t_final
            )));
        }
        if self.dt > self.t_final {
            return Err(DynamicsError::InvalidConfig(format!(
                "dt = {} exceeds T = {}",
                self.dt, self.t_final
            )));
        }
        if self.monitor_stride == 0 {
            return Err(DynamicsError::InvalidConfig("stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps; the step is shortened so that they end exactly at `T`.
    pub fn steps(&self) -> (usize, f64) {
        let n = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub energy: f64,
    pub momentum: f64,
    pub sup_mod: f64,
    pub boundary_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryDiagnostics {
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryDiagnostics {
    pub const CSV_HEADER: &'static str = "t,E,P,sup_mod,bdry_dev";

    /// `max |E(t) - E(0)|` over the recorded rows.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.rows.first().map_or(0.0, |r| r.energy);
        self.rows.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max)
    }

    /// `max |P(t) - P(0)|` over the recorded rows.
    pub fn momentum_drift(&self) -> f64 {
        let p0 = self.rows.first().map_or(0.0, |r| r.momentum);
        self.rows.iter().map(|r| (r.momentum - p0).abs()).fold(0.0, f64::max)
    }
}

fn monitor(psi: &ComplexField, t: f64, a: f64) -> TrajectoryRow {
    TrajectoryRow {
        t,
        energy: energy(psi, a),
        momentum: momentum(psi),
        sup_mod: psi.sup_mod(),
        boundary_deviation: psi.boundary_deviation(),
    }
}

/// Pointwise `Psi <- Psi exp(-i tau N(|Psi|^2))`.
pub fn nonlinear_substep(psi: &mut ComplexField, tau: f64, a: f64) {
    for v in psi.values_mut() {
        let rho = v.norm_sqr();
        let n = (rho - 1.0) * (2.0 * a + 1.0 - 3.0 * rho);
        *v *= C64::from_polar(1.0, -tau * n);
    }
}

/// Advances `i d_t Psi = Lap Psi` by `dt`.
pub fn linear_substep(psi: &mut ComplexField, dt: f64) {
    let g = *psi.grid();
    let fft = TransverseFft::new(&g);
    linear_substep_with(&g, &fft, psi, dt);
}

fn linear_substep_with(g: &Grid, fft: &TransverseFft, psi: &mut ComplexField, dt: f64) {
    let r = g.row_len();
    let n1 = g.n1();
    let mut phi: Vec<C64> = psi.values().iter().map(|v| v - 1.0).collect();
    fft.forward(&mut phi);
    let rows: Vec<usize> = g.interior_rows().collect();
    let mu = dt / (g.h1() * g.h1());
    // (I + i dt/2 D2) phi_new = (I - i dt/2 D2) phi_old
    let off = C64::new(0.0, 0.5 * mu);
    let diag = C64::new(1.0, -mu);
    let mut col = vec![C64::new(0.0, 0.0); n1];
    let mut rhs = vec![C64::new(0.0, 0.0); rows.len()];
    let mut work = Vec::with_capacity(rows.len());
    for t in 0..r {
        let rot = C64::from_polar(1.0, g.kappa_sq(t) * dt);
        for i in 0..n1 {
            col[i] = if g.is_boundary_row(i) {
                C64::new(0.0, 0.0)
            } else {
                phi[i * r + t] * rot
            };
        }
        for (slot, &i) in rhs.iter_mut().zip(&rows) {
            let (left, right) = if g.is_periodic() {
                (col[(i + n1 - 1) % n1], col[(i + 1) % n1])
            } else {
                (col[i - 1], col[i + 1])
            };
            *slot = col[i] * C64::new(1.0, mu) - (left + right) * off;
        }
        if g.is_periodic() {
            solve_cyclic_const(off, diag, &mut rhs, &mut work);
        } else {
            solve_tridiag_const(off, diag, &mut rhs, &mut work);
        }
        for i in 0..n1 {
            phi[i * r + t] = C64::new(0.0, 0.0);
        }
        for (v, &i) in rhs.iter().zip(&rows) {
            phi[i * r + t] = *v;
        }
    }
    fft.inverse(&mut phi);
    for (v, p) in psi.values_mut().iter_mut().zip(phi) {
        *v = p + 1.0;
    }
    psi.enforce_boundary();
}

/// One Strang step of length `dt`.
pub fn step(psi: &ComplexField, dt: f64, a: f64) -> ComplexField {
    let mut out = psi.clone();
    let g = *psi.grid();
    let fft = TransverseFft::new(&g);
    strang(&g, &fft, &mut out, dt, a);
    out
}

fn strang(g: &Grid, fft: &TransverseFft, psi: &mut ComplexField, dt: f64, a: f64) {
    nonlinear_substep(psi, 0.5 * dt, a);
    linear_substep_with(g, fft, psi, dt);
    nonlinear_substep(psi, 0.5 * dt, a);
}

/// Repeated [`step`] up to `T`, recording diagnostics every
/// `monitor_stride` steps and at `t = 0` and `t = T`.
pub fn evolve(
    psi: &ComplexField,
    cfg: &EvolutionConfig,
    a: f64,
) -> Result<(ComplexField, TrajectoryDiagnostics), DynamicsError> {
    cfg.validate()?;
    let (n, dt) = cfg.steps();
    let g = *psi.grid();
    let fft = TransverseFft::new(&g);
    let limit = 10.0 * c_a(a);
    let mut field = psi.clone();
    let mut traj = TrajectoryDiagnostics {
        rows: vec![monitor(&field, 0.0, a)],
    };
    for k in 1..=n {
        strang(&g, &fft, &mut field, dt, a);
        let t = if k == n { cfg.t_final } else { k as f64 * dt };
        let sup = field.sup_mod();
        if !(sup <= limit) {
            return Err(DynamicsError::BlowupDetected { t, sup_mod: sup, limit });
        }
        if k % cfg.monitor_stride == 0 || k == n {
            traj.rows.push(monitor(&field, t, a));
        }
    }
    Ok((field, traj))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    /// Slope of the fitted shift; `None` when the profile has no feature to track.
    pub speed: Option<f64>,
    /// `|speed - c| / c`, when both exist.
    pub speed_error: Option<f64>,
    /// Largest relative `L^2` distance to the shifted initial profile.
    pub shape_error: f64,
    /// `(t, s(t))` at the monitor times.
    pub shifts: Vec<(f64, f64)>,
}

/// Values of `phi` shifted by `s` along `x1` (linear interpolation, zero outside).
fn shifted_rows(g: &Grid, phi: &[C64], s: f64) -> Vec<C64> {
    let r = g.row_len();
    let n1 = g.n1() as isize;
    let q = s / g.h1();
    let base = q.floor();
    let frac = q - base;
    let m = base as isize;
    let mut out = vec![C64::new(0.0, 0.0); phi.len()];
    let at = |i: isize, t: usize| {
        if g.is_periodic() {
            phi[(i.rem_euclid(n1) as usize) * r + t]
        } else if (0..n1).contains(&i) {
            phi[i as usize * r + t]
        } else {
            C64::new(0.0, 0.0)
        }
    };
    for i in 0..n1 {
        for t in 0..r {
            out[i as usize * r + t] = at(i + m, t) * (1.0 - frac) + at(i + m + 1, t) * frac;
        }
    }
    out
}

fn sum_sq(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// Sub-grid shift `s` maximizing the overlap of `phi(. + s)` with `phi_ref`.
fn best_shift(g: &Grid, phi: &[C64], phi_ref: &[C64]) -> f64 {
    let r = g.row_len();
    let n1 = g.n1() as isize;
    let corr = |m: isize| -> f64 {
        let mut acc = 0.0;
        for i in 0..n1 {
            let j = i + m;
            let j = if g.is_periodic() {
                j.rem_euclid(n1)
            } else if (0..n1).contains(&j) {
                j
            } else {
                continue;
            };
            let (a, b) = (&phi_ref[i as usize * r..][..r], &phi[j as usize * r..][..r]);
            acc += a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum::<f64>();
        }
        acc
    };
    let range = if g.is_periodic() {
        -(n1 / 2)..=(n1 - 1) / 2
    } else {
        -(n1 - 1)..=(n1 - 1)
    };
    let mut best = (0isize, f64::NEG_INFINITY);
    for m in range {
        let v = corr(m);
        if v > best.1 || (v == best.1 && m.abs() < best.0.abs()) {
            best = (m, v);
        }
    }
    let m = best.0;
    let (cm, c0, cp) = (corr(m - 1), best.1, corr(m + 1));
    let denom = cm - 2.0 * c0 + cp;
    let delta = if denom < 0.0 { 0.5 * (cm - cp) / denom } else { 0.0 };
    (m as f64 + delta.clamp(-0.5, 0.5)) * g.h1()
}

/// Evolves `psi_tw` for time `T` and tracks its translation along `x1`.
pub fn propagation_test(
    psi_tw: &ComplexField,
    c: f64,
    a: f64,
    cfg: &EvolutionConfig,
) -> Result<PropagationResult, DynamicsError> {
    cfg.validate()?;
    let g = *psi_tw.grid();
    let phi_ref: Vec<C64> = psi_tw.values().iter().map(|v| v - 1.0).collect();
    let ref_norm = sum_sq(&phi_ref).sqrt();
    let (n, dt) = cfg.steps();
    let fft = TransverseFft::new(&g);
    let limit = 10.0 * c_a(a);
    let mut field = psi_tw.clone();
    let mut shifts = vec![(0.0, 0.0)];
    let mut shape_error: f64 = 0.0;
    for k in 1..=n {
        strang(&g, &fft, &mut field, dt, a);
        let t = if k == n { cfg.t_final } else { k as f64 * dt };
        let sup = field.sup_mod();
        if !(sup <= limit) {
            return Err(DynamicsError::BlowupDetected { t, sup_mod: sup, limit });
        }
        if ref_norm == 0.0 || !(k % cfg.monitor_stride == 0 || k == n) {
            continue;
        }
        let phi: Vec<C64> = field.values().iter().map(|v| v - 1.0).collect();
        let s = best_shift(&g, &phi, &phi_ref);
        let back = shifted_rows(&g, &phi, s);
        let diff: Vec<C64> = back.iter().zip(&phi_ref).map(|(x, y)| x - y).collect();
        shape_error = shape_error.max(sum_sq(&diff).sqrt() / ref_norm);
        shifts.push((t, s));
    }
    let speed = if ref_norm == 0.0 || shifts.len() < 2 {
        None
    } else {
        let m = shifts.len() as f64;
        let tm = shifts.iter().map(|p| p.0).sum::<f64>() / m;
        let sm = shifts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = shifts.iter().map(|p| (p.0 - tm) * (p.1 - sm)).sum();
        let sxx: f64 = shifts.iter().map(|p| (p.0 - tm).powi(2)).sum();
        Some(sxy / sxx)
    };
    Ok(PropagationResult {
        speed,
        speed_error: speed.filter(|_| c > 0.0).map(|v| (v - c).abs() / c),
        shape_error,
        shifts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn perturbed(g: Grid, eps: f64) -> ComplexField {
        let n = g.half_length();
        let mut f = ComplexField::from_fn(g, |x1, xt| {
            let w = (std::f64::consts::PI * x1 / (2.0 * n)).cos().powi(2);
            let b = (-(x1 * x1 + xt[0] * xt[0]) / 2.0).exp();
            C64::new(1.0 - eps * w * b, eps * w * b * x1)
        });
        f.enforce_boundary();
        f
    }

    #[test]
    fn constant_is_a_fixed_point() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let one = ComplexField::ones(g);
        for dt in [1e-3, 0.1, 3.0] {
            assert_eq!(step(&one, dt, 0.25), one);
        }
    }

    #[test]
    fn nonlinear_substep_keeps_modulus() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let psi = perturbed(g, 0.7);
        let mut out = psi.clone();
        nonlinear_substep(&mut out, 0.37, 0.25);
        for (a, b) in psi.values().iter().zip(out.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn plane_wave_on_torus() {
        // exact discrete solution: psi0 exp(i (kappa^2 - N) t) with the three-point symbol in x1
        let g = Grid::periodic(2, 4.0, 8.0, 32, 16).unwrap();
        let (k1, k2) = (2.0 * std::f64::consts::PI / 8.0, 2.0 * std::f64::consts::PI / 8.0 * 2.0);
        let (rho0, a, dt) = (0.9f64, 0.25, 1e-3);
        let psi = ComplexField::from_fn(g, |x1, xt| C64::from_polar(rho0, k1 * x1 + k2 * xt[0]));
        let h = g.h1();
        let kd2 = (2.0 * (0.5 * k1 * h).sin() / h).powi(2) + k2 * k2;
        let n = (rho0 * rho0 - 1.0) * (2.0 * a + 1.0 - 3.0 * rho0 * rho0);
        let out = step(&psi, dt, a);
        let rot = C64::from_polar(1.0, (kd2 - n) * dt);
        for (o, p) in out.values().iter().zip(psi.values()) {
            assert!((o - p * rot).norm() < 1e-9);
        }
    }

    #[test]
    fn blowup_guard() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let mut psi = ComplexField::constant(g, C64::new(20.0, 0.0));
        psi.enforce_boundary();
        let cfg = EvolutionConfig {
            dt: 1e-3,
            t_final: 1e-2,
            monitor_stride: 1,
        };
        assert!(matches!(
            evolve(&psi, &cfg, 0.25),
            Err(DynamicsError::BlowupDetected { .. })
        ));
    }

    #[test]
    fn trajectory_has_endpoints() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let cfg = EvolutionConfig {
            dt: 0.03,
            t_final: 1.0,
            monitor_stride: 7,
        };
        let (_, traj) = evolve(&perturbed(g, 0.1), &cfg, 0.25).unwrap();
        assert_eq!(traj.rows[0].t, 0.0);
        assert_eq!(traj.rows.last().unwrap().t, 1.0);
        assert!(traj.rows.iter().all(|r| r.boundary_deviation == 0.0));
    }

    #[test]
    fn constant_has_no_speed() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let cfg = EvolutionConfig {
            dt: 0.05,
            t_final: 1.0,
            monitor_stride: 5,
        };
        let res = propagation_test(&ComplexField::ones(g), 0.5, 0.25, &cfg).unwrap();
        assert_eq!(res.speed, None);
        assert_eq!(res.shape_error, 0.0);
    }

    #[test]
    fn shift_recovery() {
        let g = make_grid(2, 8.0, 8.0, 161, 16).unwrap();
        let f = |x: f64| C64::new(-0.5 * (-(x * x)).exp(), 0.2 * x * (-(x * x)).exp());
        let reference: Vec<C64> = ComplexField::from_fn(g, |x1, _| f(x1)).values().to_vec();
        let moved: Vec<C64> = ComplexField::from_fn(g, |x1, _| f(x1 - 0.737)).values().to_vec();
        let s = best_shift(&g, &moved, &reference);
        assert!((s - 0.737).abs() < 0.02, "{s}");
    }
}
