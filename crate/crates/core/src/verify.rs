//! Pass/fail checks with signed margins.

use crate::functionals::{
    ab_split, diagnostics, el_residual, identity_suite, lagrangian, pohozaev_residual, second_variation,
};
use crate::grid::{d1_centered, gauge_transform, laplacian, ComplexField, Grid, TransverseFft, C64};
use crate::params::{c_a, keylem_margin, linf_constants, sound_speed};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    /// Signed distance to the asserted bound; `pass` iff `margin >= -tolerance`.
    pub margin: f64,
    pub tolerance: f64,
    /// Whether the check's precondition held for the input.
    pub applicable: bool,
    pub context: Vec<(String, f64)>,
}

impl CheckReport {
    fn new(name: &str, margin: f64, tolerance: f64, context: Vec<(&str, f64)>) -> Self {
        Self {
            name: name.to_string(),
            pass: margin >= -tolerance,
            margin,
            tolerance,
            applicable: true,
            context: context.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    fn not_applicable(mut self) -> Self {
        self.applicable = false;
        self
    }

    pub fn context_value(&self, key: &str) -> Option<f64> {
        self.context.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Slack allowed by [`check_linf`].
pub const LINF_TOLERANCE: f64 = 1e-6;

/// `margin = C_A - sup |psi|`; the context also carries `r1, r2, r3, rbar`.
pub fn check_linf(psi: &ComplexField, a: f64, c: f64) -> CheckReport {
    let bound = c_a(a);
    let sup = psi.sup_mod();
    let mut context = vec![("C_A", bound), ("sup_mod", sup)];
    if let Ok(k) = linf_constants(a, c) {
        context.extend([("r1", k.r1), ("r2", k.r2), ("r3", k.r3), ("rbar", k.rbar)]);
    }
    CheckReport::new("linf", bound - sup, LINF_TOLERANCE, context)
}

/// `margin = tol - |(d-3) A + (d-1) B| / (|A| + |B| + eps)`.
pub fn check_pohozaev(psi: &ComplexField, c: f64, a: f64, tol: f64) -> CheckReport {
    let (ap, bp) = ab_split(psi, c, a);
    let res = pohozaev_residual(psi, c, a);
    let rel = res.abs() / (ap.abs() + bp.abs() + f64::MIN_POSITIVE);
    CheckReport::new(
        "pohozaev",
        tol - rel,
        0.0,
        vec![
            ("Apoho", ap),
            ("Bpoho", bp),
            ("pohozaev_residual", res),
            ("relative", rel),
        ],
    )
}

/// `margin = tol - |I^c - 2 A / (d-1)| / (|I^c| + eps)`.
pub fn check_lagrangian_identity(psi: &ComplexField, c: f64, a: f64, tol: f64) -> CheckReport {
    let d = psi.grid().dim() as f64;
    let (ap, _) = ab_split(psi, c, a);
    let ic = lagrangian(psi, c, a);
    let predicted = 2.0 * ap / (d - 1.0);
    let rel = (ic - predicted).abs() / (ic.abs() + f64::MIN_POSITIVE);
    let rel = if ic == predicted { 0.0 } else { rel };
    CheckReport::new(
        "lagrangian_identity",
        tol - rel,
        0.0,
        vec![("Ic", ic), ("predicted", predicted), ("relative", rel)],
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEigen {
    pub k: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub det: f64,
    pub positive_definite: bool,
}

/// Eigenvalues of the symmetric matrix `[[p, q], [q, r]]`, ascending.
fn sym_eigen(p: f64, q: f64, r: f64) -> (f64, f64) {
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    (mean - rad, mean + rad)
}

/// Mode matrix `[[k^2 + 4(1-A), c k], [c k, k^2]]` of the second variation at
/// `psi = 1`, for every `k` of `k_grid`.
pub fn q1_dispersion(c: f64, a: f64, k_grid: &[f64]) -> Vec<ModeEigen> {
    k_grid
        .iter()
        .map(|&k| {
            let (p, q, r) = (k * k + 4.0 * (1.0 - a), c * k, k * k);
            let (lambda_min, lambda_max) = sym_eigen(p, q, r);
            let det = k * k * (k * k + 4.0 * (1.0 - a) - c * c);
            ModeEigen {
                k,
                lambda_min,
                lambda_max,
                det,
                positive_definite: det > 0.0 && p > 0.0,
            }
        })
        .collect()
}

/// Second variation at `psi = 1` of the single mode
/// `phi = u cos(k x1) + i v sin(k x1)` with `k = 2 pi m / (2N)` on a grid
/// periodic in `x1`, together with the mode-matrix prediction using the
/// discrete symbols `(2 sin(kh/2)/h)^2` and `sin(kh)/h`.
pub fn q1_discrete_mode(c: f64, a: f64, grid: &Grid, m: usize, (u, v): (f64, f64)) -> (f64, f64) {
    assert!(grid.is_periodic(), "single-mode fields need a grid periodic in x1");
    let period = 2.0 * grid.half_length();
    let k = 2.0 * std::f64::consts::PI * m as f64 / period;
    let phi = ComplexField::from_fn(*grid, |x1, _| C64::new(u * (k * x1).cos(), v * (k * x1).sin()));
    let q = second_variation(&ComplexField::ones(*grid), &phi, c, a);
    let h = grid.h1();
    let kappa2 = (2.0 * (0.5 * k * h).sin() / h).powi(2);
    let sigma = (k * h).sin() / h;
    let vol = period * grid.transverse_volume();
    let form = (kappa2 + 4.0 * (1.0 - a)) * u * u + 2.0 * c * sigma * u * v + kappa2 * v * v;
    (q, 0.5 * vol * form)
}

/// Definiteness of the mode matrix on `k_grid` agrees with `c < 2 sqrt(1 - A)`.
pub fn check_sonic_threshold(c: f64, a: f64, k_grid: &[f64]) -> CheckReport {
    let modes = q1_dispersion(c, a, k_grid);
    let min = modes.iter().map(|m| m.lambda_min).fold(f64::INFINITY, f64::min);
    let subsonic = c < sound_speed(a);
    let margin = if subsonic { min } else { -min };
    CheckReport::new(
        "sonic_threshold",
        margin,
        0.0,
        vec![("c", c), ("sound_speed", sound_speed(a)), ("min_eigenvalue", min)],
    )
}

/// Maximal pointwise error between the Ginzburg-Landau residual of
/// `w = exp(i c x1 / 2) psi` and `exp(i c x1 / 2) R(psi)` on the interior
/// rows, and the leading-order prediction of that commutation error.
pub fn gauge_error(psi: &ComplexField, c: f64, a: f64) -> (f64, f64) {
    let g = *psi.grid();
    let fft = TransverseFft::new(&g);
    let w = gauge_transform(psi, c);
    let lap_w = laplacian(&g, &fft, w.values());
    let res = el_residual(psi, c, a).field;
    let d1 = d1_centered(&g, psi.values());
    let d2 = crate::grid::d1_second(&g, psi.values());
    let h2 = g.h1() * g.h1();
    let r = g.row_len();
    let (mut err, mut bound) = (0.0f64, 0.0f64);
    for i in g.interior_rows() {
        let phase = C64::from_polar(1.0, 0.5 * c * g.x1(i));
        for k in i * r..(i + 1) * r {
            let wv = w.values()[k];
            let rho = wv.norm_sqr();
            let gl = lap_w[k] - wv * ((rho - 1.0) * (3.0 * rho - 2.0 * a - 1.0)) + wv * (0.25 * c * c);
            err = err.max((gl - phase * res.values()[k]).norm());
            let pv = psi.values()[k];
            let pred =
                h2 * (c * c * d2[k].norm() / 8.0 + c.powi(3) * d1[k].norm() / 24.0 + c.powi(4) * pv.norm() / 192.0);
            bound = bound.max(pred);
        }
    }
    (err, bound)
}

/// Passes when the measured gauge commutation error is within twice its
/// leading-order prediction.
pub fn gauge_consistency(psi: &ComplexField, c: f64, a: f64) -> CheckReport {
    let (err, bound) = gauge_error(psi, c, a);
    let allowed = 2.0 * bound + 1e-12;
    CheckReport::new(
        "gauge_consistency",
        allowed - err,
        0.0,
        vec![("error", err), ("predicted", bound), ("h1", psi.grid().h1())],
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub a: f64,
    pub c: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub ordered: bool,
    pub keylem_margin: f64,
}

impl ScanRow {
    pub const CSV_HEADER: &'static str = "A,c,r1,r2,r3,ordered,keylem_margin";
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub a: f64,
    /// Solution of `r2(c) = r3` by bisection.
    pub c_star: f64,
    /// First scanned speed with `r2 >= r3`.
    pub first_on_grid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub thresholds: Vec<Threshold>,
}

fn r2_of(a: f64, c: f64) -> f64 {
    ((4.0 + 2.0 * a + (4.0 - 8.0 * a + 4.0 * a * a + 3.0 * c * c).sqrt()) / 6.0).sqrt()
}

/// Smallest `c >= 0` with `r2(c) >= r3`, by bisection.
pub fn ordering_threshold(a: f64) -> f64 {
    let r3 = c_a(a);
    let f = |c: f64| r2_of(a, c) - r3;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// Evaluates the root triple, the ordering `r1 < r2 < r3` and the key
/// inequality margin on `[rbar, s_max]` at every `(A, c)` node.
pub fn constants_scan(a_grid: &[f64], c_grid: &[f64], s_max: f64, samples: usize) -> ScanTable {
    let mut rows = Vec::with_capacity(a_grid.len() * c_grid.len());
    let mut thresholds = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let mut first_on_grid = None;
        for &c in c_grid {
            let row = match linf_constants(a, c) {
                Ok(k) => ScanRow {
                    a,
                    c,
                    r1: k.r1,
                    r2: k.r2,
                    r3: k.r3,
                    ordered: k.r1 < k.r2 && k.r2 < k.r3,
                    keylem_margin: keylem_margin(a, c, s_max.max(k.rbar), samples).unwrap_or(f64::NAN),
                },
                Err(_) => ScanRow {
                    a,
                    c,
                    r1: f64::NAN,
                    r2: f64::NAN,
                    r3: f64::NAN,
                    ordered: false,
                    keylem_margin: f64::NAN,
                },
            };
            if first_on_grid.is_none() && row.r2 >= row.r3 {
                first_on_grid = Some(c);
            }
            rows.push(row);
        }
        thresholds.push(Threshold {
            a,
            c_star: ordering_threshold(a),
            first_on_grid,
        });
    }
    ScanTable { rows, thresholds }
}

/// Inputs of [`battery`].
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryConfig {
    /// Residual below which a field counts as a solution.
    pub delta: f64,
    pub pohozaev_tol: f64,
    pub lagrangian_tol: f64,
    pub identity_samples: usize,
    pub identity_tol: f64,
    pub seed: u64,
    pub k_grid: Vec<f64>,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            pohozaev_tol: 1e-3,
            lagrangian_tol: 1e-3,
            identity_samples: 10_000,
            identity_tol: 1e-12,
            seed: 0,
            k_grid: (1..=200).map(|j| 0.05 * j as f64).collect(),
        }
    }
}

/// Runs every field and parameter check. Solution checks are marked not
/// applicable unless the residual is below `cfg.delta`.
pub fn battery(psi: &ComplexField, c: f64, a: f64, cfg: &BatteryConfig) -> Vec<CheckReport> {
    let diag = diagnostics(psi, c, a);
    let solved = diag.residual_norm <= cfg.delta;
    let mut out = Vec::new();
    out.push(CheckReport::new(
        "residual",
        cfg.delta - diag.residual_norm,
        0.0,
        vec![("residual_norm", diag.residual_norm), ("delta", cfg.delta)],
    ));
    let gate = |r: CheckReport| if solved { r } else { r.not_applicable() };
    out.push(gate(check_linf(psi, a, c)));
    out.push(gate(check_pohozaev(psi, c, a, cfg.pohozaev_tol)));
    out.push(gate(check_lagrangian_identity(psi, c, a, cfg.lagrangian_tol)));
    out.push(gauge_consistency(psi, c, a));
    out.push(check_sonic_threshold(c, a, &cfg.k_grid));
    let ids = identity_suite(cfg.identity_samples, cfg.seed);
    out.push(CheckReport::new(
        "identities",
        cfg.identity_tol - ids.max_deviation,
        0.0,
        vec![("samples", ids.samples as f64), ("max_deviation", ids.max_deviation)],
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn linf_examples() {
        let g = make_grid(2, 4.0, 8.0, 17, 8).unwrap();
        let r = check_linf(&ComplexField::ones(g), 0.25, 1.0);
        assert!(r.pass);
        assert!((r.margin - 0.271229).abs() < 1e-6);
        let mut f = ComplexField::ones(g);
        f.values_mut()[40] = C64::new(0.0, 2.0);
        let r = check_linf(&f, 0.25, 1.0);
        assert!(!r.pass);
        assert!((r.margin + 0.7288).abs() < 1e-4);
        assert!((c_a(1.0) - 1.467890).abs() < 1e-6);
    }

    #[test]
    fn dispersion_examples() {
        let m = q1_dispersion(1.0, 0.0, &[1.0])[0];
        assert!((m.det - 4.0).abs() < 1e-14);
        assert!(m.positive_definite);
        let m = q1_dispersion(3.0, 0.0, &[1.0])[0];
        assert!((m.det + 4.0).abs() < 1e-14);
        assert!(!m.positive_definite);
        assert!(m.lambda_min < 0.0);
        // sonic speed: lambda_min -> 0 as k -> 0
        let a = 0.3;
        let ks: Vec<f64> = [1e-1, 1e-2, 1e-3].to_vec();
        let modes = q1_dispersion(sound_speed(a), a, &ks);
        assert!(modes.windows(2).all(|w| w[1].lambda_min < w[0].lambda_min));
        assert!(modes[2].lambda_min.abs() < 1e-5);
    }

    #[test]
    fn discrete_mode_matches_form() {
        let g = Grid::periodic(2, 5.0, 4.0, 40, 8).unwrap();
        for m in 1..6 {
            let (q, pred) = q1_discrete_mode(0.8, 0.25, &g, m, (0.7, -1.3));
            assert!((q - pred).abs() <= 1e-10 * pred.abs(), "{m}: {q} vs {pred}");
        }
    }

    #[test]
    fn gauge_at_zero_speed_is_exact() {
        let g = make_grid(2, 4.0, 8.0, 33, 16).unwrap();
        let psi = ComplexField::from_fn(g, |x1, xt| {
            C64::new(
                1.0 - 0.4 * (-(x1 * x1 + xt[0] * xt[0])).exp(),
                0.1 * x1 * (-(x1 * x1)).exp(),
            )
        });
        assert_eq!(gauge_error(&psi, 0.0, 0.25).0, 0.0);
        let r = gauge_consistency(&ComplexField::ones(g), 1.2, 0.25);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn threshold_closed_form() {
        let a = 0.2;
        let r3 = c_a(a);
        let closed = (((6.0 * r3 * r3 - 4.0 - 2.0 * a).powi(2) - 4.0 * (1.0 - a).powi(2)) / 3.0).sqrt();
        assert!((ordering_threshold(a) - closed).abs() < 1e-10);
        assert!((closed - 2.784).abs() < 1e-3);
        assert!(sound_speed(a) < closed);
    }

    #[test]
    fn ones_pass_battery() {
        let g = make_grid(2, 4.0, 8.0, 17, 8).unwrap();
        let reports = battery(&ComplexField::ones(g), 0.5, 0.25, &BatteryConfig::default());
        for r in &reports {
            assert!(r.pass && r.applicable, "{r:?}");
        }
    }
}
