//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use cqnls::dynamics::{evolve, EvolutionConfig};
use cqnls::functionals::{
    first_variation, identity_suite, interior_l2, lagrangian, pohozaev_residual, second_variation,
};
use cqnls::grid::Grid;
use cqnls::params::{
    c_a, keylem_margin, linf_constants, potential, potential_profile, reduce, sound_speed, CriticalKind,
};
use cqnls::verify::{
    check_lagrangian_identity, check_linf, check_pohozaev, constants_scan, gauge_error, ordering_threshold,
    q1_discrete_mode, q1_dispersion,
};
use cqnls::{make_grid, ComplexField, CubicQuinticParams, C64};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fixed-point arithmetic with 50 decimal digits.
struct Fixed {
    scale: BigUint,
}

impl Fixed {
    const DIGITS: u32 = 50;

    fn new() -> Self {
        Self {
            scale: BigUint::from(10u32).pow(Self::DIGITS),
        }
    }

    fn ratio(&self, num: u64, den: u64) -> BigUint {
        &self.scale * num / den
    }

    fn sqrt(&self, x: &BigUint) -> BigUint {
        (x * &self.scale).sqrt()
    }

    fn to_f64(&self, x: &BigUint) -> f64 {
        let s = format!("{:0>width$}", x.to_string(), width = Self::DIGITS as usize + 1);
        let (int, frac) = s.split_at(s.len() - Self::DIGITS as usize);
        format!("{int}.{frac}").parse().unwrap()
    }
}

type Outcome = (bool, String);
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn parameter_reduction() -> Outcome {
    let p = CubicQuinticParams::new(0.5, 1.5, 1.0);
    let r = match reduce(&p, 0.0) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let oracle = (3.0 * r.roots.r1sq / r.roots.r0sq - 1.0) / 2.0;
    let ok = (r.a - 0.25).abs() <= 1e-12
        && (r.a - oracle).abs() <= 1e-12
        && (r.gamma - 1.0).abs() <= 1e-12
        && (r.sound_speed - 3f64.sqrt()).abs() <= 1e-12;
    (
        ok,
        format!(
            "A={} (root-ratio oracle {oracle}), gamma={}, vs={}",
            r.a, r.gamma, r.sound_speed
        ),
    )
}

fn constant_table() -> Outcome {
    let fx = Fixed::new();
    // A = 1/4, c = 1: radicand 4 - 8A + 4A^2 + 3c^2 = 21/4, 4 + 2A = 9/2
    let sq = fx.sqrt(&fx.ratio(21, 4));
    let half9 = fx.ratio(9, 2);
    let r1 = fx.to_f64(&fx.sqrt(&((&half9 - &sq) / 6u32)));
    let r2 = fx.to_f64(&fx.sqrt(&((&half9 + &sq) / 6u32)));
    // sqrt(A+2) sqrt(3+2 sqrt 3)/3 = sqrt(3 + 2 sqrt 3)/2 at A = 1/4
    let sqrt3 = fx.sqrt(&fx.ratio(3, 1));
    let r3 = fx.to_f64(&(fx.sqrt(&(fx.ratio(3, 1) + sqrt3 * 2u32)) / 2u32));
    let k = match linf_constants(0.25, 1.0) {
        Ok(k) => k,
        Err(e) => return (false, e.to_string()),
    };
    let errs = [(k.r1 - r1).abs(), (k.r2 - r2).abs(), (k.r3 - r3).abs()];
    let printed = [
        (k.r1 - 0.606727).abs(),
        (k.r2 - 1.063899).abs(),
        (k.r3 - 1.271229).abs(),
    ];
    let bits = k.r3.to_bits();
    let independent = [0.0, 0.1, 0.5, 2.0, 10.0, 1e3]
        .iter()
        .all(|&c| linf_constants(0.25, c).map(|x| x.r3.to_bits()) == Ok(bits));
    let ok = errs.iter().all(|e| *e < 1e-6) && printed.iter().all(|e| *e < 1e-6) && independent;
    (
        ok,
        format!(
            "r1={} r2={} r3={}; max |r - oracle| = {:e}; r3 bitwise c-independent: {independent}",
            k.r1,
            k.r2,
            k.r3,
            errs.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn key_inequality() -> Outcome {
    let a_grid: Vec<f64> = (0..20).map(|i| 0.025 + 0.05 * i as f64).collect();
    let mut min_margin = f64::INFINITY;
    let mut all_ordered = true;
    let mut nodes = 0;
    for &a in &a_grid {
        let cs: Vec<f64> = (0..20).map(|j| (j as f64 + 0.5) / 20.0 * sound_speed(a)).collect();
        let table = constants_scan(&[a], &cs, 10.0, 10_000);
        for row in &table.rows {
            nodes += 1;
            all_ordered &= row.ordered;
            let m = keylem_margin(a, row.c, 10.0, 10_000).unwrap_or(f64::NAN);
            min_margin = min_margin.min(if m == row.keylem_margin { m } else { f64::NAN });
        }
    }
    let a = 0.2;
    let c_star = ordering_threshold(a);
    let r3 = c_a(a);
    let closed = (((6.0 * r3 * r3 - 4.0 - 2.0 * a).powi(2) - 4.0 * (1.0 - a).powi(2)) / 3.0).sqrt();
    let ok = nodes == 400
        && min_margin >= 0.0
        && all_ordered
        && (c_star - closed).abs() < 1e-3
        && (c_star - 2.784).abs() < 1e-3;
    (
        ok,
        format!(
            "{nodes} nodes, min margin {min_margin:.6}, ordered everywhere: {all_ordered}; c*(1/5) = {c_star:.6} (closed form {closed:.6})"
        ),
    )
}

fn identities() -> Outcome {
    let rep = identity_suite(10_000, 0);
    (
        rep.samples == 10_000 && rep.max_deviation < 1e-12,
        format!("max deviation {:e} over {} samples", rep.max_deviation, rep.samples),
    )
}

fn random_field(g: Grid, rng: &mut ChaCha8Rng, base: f64, amp: f64) -> ComplexField {
    let coeffs: Vec<(C64, f64, f64)> = (0..4)
        .map(|_| {
            (
                C64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)),
                rng.gen_range(0.5..3.0),
                rng.gen_range(-2.0..2.0),
            )
        })
        .collect();
    let (n, l) = (g.half_length(), g.period());
    let mut f = ComplexField::from_fn(g, |x1, xt| {
        let w = (std::f64::consts::PI * x1 / (2.0 * n)).cos().powi(2);
        let mut z = C64::new(base, 0.0);
        for (m, (cf, width, shift)) in coeffs.iter().enumerate() {
            let k = 2.0 * std::f64::consts::PI * m as f64 / l;
            let e = (-((x1 - shift) / width).powi(2)).exp() * (k * xt[0]).cos();
            z += cf * (w * e);
        }
        z
    });
    let r = g.row_len();
    let vals = f.values_mut();
    let last = vals.len() - r;
    vals[..r].fill(C64::new(base, 0.0));
    vals[last..].fill(C64::new(base, 0.0));
    f
}

fn axpy(psi: &ComplexField, phi: &ComplexField, s: f64) -> ComplexField {
    let vals = psi.values().iter().zip(phi.values()).map(|(p, q)| p + q * s).collect();
    ComplexField::from_values(*psi.grid(), vals).unwrap()
}

fn variational_consistency() -> Outcome {
    let g = make_grid(2, 10.0, 12.0, 101, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let psi = random_field(g, &mut rng, 1.0, 0.4);
        let phi = random_field(g, &mut rng, 0.0, 1.0);
        let c = rng.gen_range(0.0..1.5);
        let a = rng.gen_range(0.05..0.95);
        let i = |s: f64| lagrangian(&axpy(&psi, &phi, s), c, a);
        let e1 = 1e-5;
        let fd1 = (i(e1) - i(-e1)) / (2.0 * e1);
        let e2 = 2e-4;
        let fd2 = (i(e2) - 2.0 * i(0.0) + i(-e2)) / (e2 * e2);
        worst1 = worst1.max(rel(fd1, first_variation(&psi, &phi, c, a)));
        worst2 = worst2.max(rel(fd2, second_variation(&psi, &phi, c, a)));
    }
    (
        worst1 < 1e-6 && worst2 < 1e-5,
        format!("10 pairs on 101x64: first variation rel err {worst1:e}, second {worst2:e}"),
    )
}

fn sonic_threshold() -> Outcome {
    let k_grid: Vec<f64> = (1..=2000).map(|j| 0.01 * j as f64).collect();
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut negative_modes = 0;
    let torus = Grid::periodic(2, 10.0, 6.0, 64, 8).unwrap();
    for a in [0.1, 0.25, 0.5] {
        let vs = sound_speed(a);
        let sub = q1_dispersion(0.9 * vs, a, &k_grid);
        let sup = q1_dispersion(1.1 * vs, a, &k_grid);
        ok &= sub.iter().all(|m| m.positive_definite);
        ok &= sup.iter().any(|m| !m.positive_definite && m.lambda_min < 0.0);
        for c in [0.9 * vs, 1.1 * vs] {
            for m in 1..=6 {
                for uv in [(1.0, 0.0), (0.0, 1.0), (0.7, -0.4), (-0.3, 1.2)] {
                    let (q, pred) = q1_discrete_mode(c, a, &torus, m, uv);
                    worst = worst.max((q - pred).abs() / pred.abs().max(1.0));
                }
            }
        }
        // lowest discrete mode along its softest direction
        let h = torus.h1();
        let k = std::f64::consts::PI / torus.half_length();
        let kappa2 = (2.0 * (0.5 * k * h).sin() / h).powi(2);
        let c = 1.1 * vs;
        let (p, q, r) = (kappa2 + 4.0 * (1.0 - a), c * (k * h).sin() / h, kappa2);
        let lam = 0.5 * (p + r) - (0.25 * (p - r).powi(2) + q * q).sqrt();
        let (qv, _) = q1_discrete_mode(c, a, &torus, 1, (q, lam - p));
        if qv < 0.0 {
            negative_modes += 1;
        }
    }
    ok &= worst < 1e-8 && negative_modes == 3;
    (
        ok,
        format!(
            "A in {{0.1, 0.25, 0.5}}; definite at 0.9 vs, indefinite at 1.1 vs; single-mode cross-check max err {worst:e}; negative discrete modes {negative_modes}/3"
        ),
    )
}

fn solution_identities(ci: &[(String, cqnls::solvers::SolveReport)], reported: &[String]) -> Outcome {
    let mut ok = true;
    let mut worst_trivial = 0.0f64;
    for d in [2, 3] {
        let one = ComplexField::ones(make_grid(d, 6.0, 10.0, 41, 16).unwrap());
        for c in [0.0, 0.7, 1.3] {
            worst_trivial = worst_trivial.max(pohozaev_residual(&one, c, 0.3).abs());
            worst_trivial = worst_trivial.max(lagrangian(&one, c, 0.3).abs());
        }
    }
    ok &= worst_trivial <= 1e-15;
    let (mut worst_p, mut worst_l) = (0.0f64, 0.0f64);
    for (_, rep) in ci {
        let p = check_pohozaev(&rep.field, rep.c, rep.a, 1e-3);
        let l = check_lagrangian_identity(&rep.field, rep.c, rep.a, 1e-3);
        ok &= p.pass && l.pass;
        worst_p = worst_p.max(p.context_value("relative").unwrap_or(f64::INFINITY));
        worst_l = worst_l.max(l.context_value("relative").unwrap_or(f64::INFINITY));
    }
    let mut detail = format!(
        "psi=1: {worst_trivial:e}; {} solutions: Pohozaev rel {worst_p:e}, Lagrangian rel {worst_l:e}",
        ci.len()
    );
    if !reported.is_empty() {
        detail.push_str(&format!("; reported outcomes: {}", reported.join(", ")));
    }
    (ok && !ci.is_empty(), detail)
}

fn sup_bound(ci: &[(String, cqnls::solvers::SolveReport)]) -> Outcome {
    let mut ok = !ci.is_empty();
    let mut least = f64::INFINITY;
    for (_, rep) in ci {
        let r = check_linf(&rep.field, rep.a, rep.c);
        ok &= r.pass && rep.field.sup_mod() <= c_a(rep.a) + 1e-6;
        least = least.min(r.margin);
    }
    (
        ok,
        format!("{} solutions, smallest margin C_A - sup|psi| = {least:.6}", ci.len()),
    )
}

fn dynamics() -> Outcome {
    let a = 0.3;
    let g = make_grid(2, 8.0, 16.0, 81, 64).unwrap();
    let fixed = EvolutionConfig {
        dt: 0.01,
        t_final: 100.0,
        monitor_stride: 1000,
    };
    let dev = match evolve(&ComplexField::ones(g), &fixed, a) {
        Ok((f, _)) => f.distance_from_one(),
        Err(e) => return (false, e.to_string()),
    };
    let init = {
        let n = g.half_length();
        let mut f = ComplexField::from_fn(g, |x1, xt| {
            let w = (std::f64::consts::PI * x1 / (2.0 * n)).cos().powi(2);
            let b = (-(x1 * x1) / 4.0 - xt[0] * xt[0] / 8.0).exp();
            C64::new(1.0, 0.0) + C64::new(-0.3, 0.2) * (w * b)
        });
        f.enforce_boundary();
        f
    };
    let mut finals = Vec::new();
    let mut drifts = Vec::new();
    for dt in [1e-2, 5e-3, 2.5e-3] {
        let cfg = EvolutionConfig {
            dt,
            t_final: 1.0,
            monitor_stride: 1,
        };
        match evolve(&init, &cfg, a) {
            Ok((f, traj)) => {
                finals.push(f);
                drifts.push(traj.energy_drift());
            }
            Err(e) => return (false, e.to_string()),
        }
    }
    let diff = |x: &ComplexField, y: &ComplexField| {
        let vals = x.values().iter().zip(y.values()).map(|(p, q)| p - q).collect();
        interior_l2(&ComplexField::from_values(g, vals).unwrap())
    };
    let order = (diff(&finals[0], &finals[1]) / diff(&finals[1], &finals[2])).log2();
    let monotone = drifts.windows(2).all(|w| w[1] < w[0]);
    let ok = dev < 1e-13 && (order - 2.0).abs() <= 0.2 && monotone;
    (
        ok,
        format!(
            "10^4-step fixed-point deviation {dev:e}; self-convergence order {order:.3}; energy drift {:.3e} > {:.3e} > {:.3e}",
            drifts[0], drifts[1], drifts[2]
        ),
    )
}

fn potential_critical_points() -> Outcome {
    let a = 0.2;
    let fx = Fixed::new();
    // critical modulus sqrt((2A + 1)/3) = sqrt(7/15)
    let m = fx.to_f64(&fx.sqrt(&fx.ratio(7, 15)));
    let u_grid = linspace(-1.5, 1.5, 3001);
    let prof = match potential_profile(a, &u_grid) {
        Ok(p) => p,
        Err(e) => return (false, e.to_string()),
    };
    let expected = [
        (-1.0, CriticalKind::LocalMin),
        (-m, CriticalKind::LocalMax),
        (0.0, CriticalKind::LocalMin),
        (m, CriticalKind::LocalMax),
        (1.0, CriticalKind::LocalMin),
    ];
    let mut ok = prof.critical.len() == 5 && (m - 0.6831301).abs() < 1e-7;
    let mut worst = 0.0f64;
    for (cp, (u, kind)) in prof.critical.iter().zip(expected) {
        worst = worst.max((cp.u - u).abs());
        let d = 1e-3;
        let (wl, w0, wr) = (potential(a, cp.u - d), potential(a, cp.u), potential(a, cp.u + d));
        let sampled = if wl > w0 && wr > w0 {
            CriticalKind::LocalMin
        } else {
            CriticalKind::LocalMax
        };
        ok &= cp.kind == kind && sampled == kind;
    }
    ok &= worst < 1e-9 && prof.w.len() == u_grid.len();
    (
        ok,
        format!(
            "critical points 0, +-{:.7}, +-1 (max err {worst:e}); minima at 0, +-1, maxima at +-{:.7}",
            m, m
        ),
    )
}

fn gauge_order() -> Outcome {
    let (c, a) = (0.8, 0.25);
    let errs: Vec<(usize, f64)> = [41usize, 81, 161, 321]
        .iter()
        .map(|&n1| {
            let g = make_grid(2, 8.0, 16.0, n1, 32).unwrap();
            let mut psi = ComplexField::from_fn(g, |x1, xt| {
                let w = (std::f64::consts::PI * x1 / 16.0).cos().powi(2);
                let b = (-(x1 * x1) / 6.0).exp() * (1.0 + 0.3 * (std::f64::consts::PI * xt[0] / 8.0).cos());
                C64::new(1.0, 0.0) + C64::new(-0.4, 0.3) * (w * b)
            });
            psi.enforce_boundary();
            (n1, gauge_error(&psi, c, a).0)
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0].1 / w[1].1).log2()).collect();
    let ok = orders.iter().all(|p| (p - 2.0).abs() <= 0.1);
    (
        ok,
        format!(
            "errors {}; orders {}",
            errs.iter()
                .map(|(n, e)| format!("n1={n}: {e:.3e}"))
                .collect::<Vec<_>>()
                .join(", "),
            orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (ci, reported) = common::ci_solutions();
    let criteria: Vec<Criterion> = vec![
        ("parameter reduction", Box::new(parameter_reduction)),
        ("constant table", Box::new(constant_table)),
        ("key inequality and ordering", Box::new(key_inequality)),
        ("identity suite", Box::new(identities)),
        ("variational consistency", Box::new(variational_consistency)),
        ("dispersion and sonic threshold", Box::new(sonic_threshold)),
        (
            "Pohozaev and Lagrangian identities",
            Box::new(|| solution_identities(&ci, &reported)),
        ),
        ("sup-norm bound", Box::new(|| sup_bound(&ci))),
        ("dynamics", Box::new(dynamics)),
        ("potential profile", Box::new(potential_critical_points)),
        ("gauge equivalence", Box::new(gauge_order)),
    ];
    let mut failed = 0;
    println!("acceptance: {} criteria", criteria.len());
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = f();
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name} ({:.2}s): {detail}",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
