//! Small dense helpers: constant-coefficient tridiagonal solves and a
//! restarted GMRES over the reals for complex-stored vectors.

use crate::grid::C64;

/// Solves `off x_{i-1} + diag x_i + off x_{i+1} = rhs_i` in place, with
/// `x_{-1} = x_n = 0`.
pub(crate) fn solve_tridiag_const(off: C64, diag: C64, rhs: &mut [C64], work: &mut Vec<C64>) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    work.clear();
    work.resize(n, C64::new(0.0, 0.0));
    let mut beta = diag;
    rhs[0] /= beta;
    for i in 1..n {
        work[i] = off / beta;
        beta = diag - off * work[i];
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= work[i + 1] * next;
    }
}

/// Periodic variant: `x_{-1} = x_{n-1}`, `x_n = x_0` (Sherman-Morrison).
pub(crate) fn solve_cyclic_const(off: C64, diag: C64, rhs: &mut [C64], work: &mut Vec<C64>) {
    let n = rhs.len();
    assert!(n >= 3, "cyclic system needs at least three unknowns");
    let gamma = -diag;
    // A = T + u v^T with u = (gamma, 0.., off), v = (1, 0.., off/gamma)
    let mut diag_mod = vec![diag; n];
    diag_mod[0] = diag - gamma;
    diag_mod[n - 1] = diag - off * off / gamma;
    let mut x = rhs.to_vec();
    solve_tridiag_var(off, &diag_mod, &mut x, work);
    let mut z = vec![C64::new(0.0, 0.0); n];
    z[0] = gamma;
    z[n - 1] = off;
    solve_tridiag_var(off, &diag_mod, &mut z, work);
    let fact = (x[0] + off * x[n - 1] / gamma) / (C64::new(1.0, 0.0) + z[0] + off * z[n - 1] / gamma);
    for i in 0..n {
        rhs[i] = x[i] - fact * z[i];
    }
}

fn solve_tridiag_var(off: C64, diag: &[C64], rhs: &mut [C64], work: &mut Vec<C64>) {
    let n = rhs.len();
    work.clear();
    work.resize(n, C64::new(0.0, 0.0));
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        work[i] = off / beta;
        beta = diag[i] - off * work[i];
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= work[i + 1] * next;
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GmresOutcome {
    pub solution: Vec<C64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

fn axpy(y: &mut [C64], alpha: f64, x: &[C64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += b * alpha;
    }
}

/// Right-preconditioned restarted GMRES for `A x = b` on the real vector
/// space underlying `C^n`, with inner product `dot`.
pub(crate) fn gmres(
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    mut precond: impl FnMut(&[C64]) -> Vec<C64>,
    dot: impl Fn(&[C64], &[C64]) -> f64,
    b: &[C64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let n = b.len();
    let norm = |v: &[C64]| dot(v, v).sqrt();
    let bnorm = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return GmresOutcome {
            solution: x,
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let m = restart.max(1);
    let mut total = 0;
    let mut rel;
    while total < max_iter {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            return GmresOutcome {
                solution: x,
                iterations: total,
                rel_residual: rel,
                converged: true,
            };
        }
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut zs: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0f64; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0f64; m], vec![0.0f64; m]);
        let mut g = vec![0.0f64; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            if total >= max_iter {
                break;
            }
            total += 1;
            let z = precond(&basis[k]);
            let mut w = apply(&z);
            zs.push(z);
            // modified Gram-Schmidt, twice for stability
            for _ in 0..2 {
                for (j, vj) in basis.iter().enumerate() {
                    let hij = dot(&w, vj);
                    h[j][k] += hij;
                    axpy(&mut w, -hij, vj);
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= tol || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution
        let mut y = vec![0.0f64; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            axpy(&mut x, *yi, z);
        }
        if rel <= tol {
            break;
        }
        if k_used == 0 {
            break;
        }
    }
    let ax = apply(&x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    rel = norm(&r) / bnorm;
    GmresOutcome {
        solution: x,
        iterations: total,
        rel_residual: rel,
        converged: rel <= tol * 1.0001,
    }
}
