use crate::grid::{Grid, TransverseFft, C64};
use crate::linalg::{solve_cyclic_const, solve_tridiag_const};

/// `(-Lap_h + 4(1 - A))^{-1} v` with zero Dirichlet rows: one tridiagonal
/// solve along `x1` per transverse Fourier mode.
pub fn helmholtz_inverse(g: &Grid, fft: &TransverseFft, a: f64, v: &[C64]) -> Vec<C64> {
    let r = g.row_len();
    let mut data = v.to_vec();
    if !g.is_periodic() {
        let last = (g.n1() - 1) * r;
        data[..r].fill(C64::new(0.0, 0.0));
        data[last..].fill(C64::new(0.0, 0.0));
    }
    fft.forward(&mut data);
    let rows: Vec<usize> = g.interior_rows().collect();
    let inv_h2 = 1.0 / (g.h1() * g.h1());
    let off = C64::new(-inv_h2, 0.0);
    let mut col = vec![C64::new(0.0, 0.0); rows.len()];
    let mut work = Vec::with_capacity(rows.len());
    for t in 0..r {
        let diag = C64::new(2.0 * inv_h2 + g.kappa_sq(t) + 4.0 * (1.0 - a), 0.0);
        for (slot, &i) in col.iter_mut().zip(&rows) {
            *slot = data[i * r + t];
        }
        if g.is_periodic() {
            solve_cyclic_const(off, diag, &mut col, &mut work);
        } else {
            solve_tridiag_const(off, diag, &mut col, &mut work);
        }
        for (slot, &i) in col.iter().zip(&rows) {
            data[i * r + t] = *slot;
        }
    }
    fft.inverse(&mut data);
    data
}
