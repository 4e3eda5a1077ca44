//! Restarted GMRES with right preconditioning, on matrices viewed as vectors.

use super::add_scaled;
use crate::{CMatrix, C64};

pub(crate) struct GmresOutcome {
    pub x: CMatrix,
    pub rel_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves op(x) = b with the right preconditioner `precond` ≈ op⁻¹.
pub(crate) fn gmres<A, P>(op: A, precond: P, b: &CMatrix, tol: f64, restart: usize, max_iter: usize) -> GmresOutcome
where
    A: Fn(&CMatrix) -> CMatrix,
    P: Fn(&CMatrix) -> CMatrix,
{
    let (nr, nc) = b.shape();
    let b_norm = b.norm();
    let mut x = CMatrix::zeros(nr, nc);
    if b_norm == 0.0 {
        return GmresOutcome { x, rel_residual: 0.0, iterations: 0, converged: true };
    }
    let mut iterations = 0;
    let mut r = b.clone();
    let mut rel = 1.0;
    while iterations < max_iter {
        let beta = r.norm();
        rel = beta / b_norm;
        if rel < tol {
            return GmresOutcome { x, rel_residual: rel, iterations, converged: true };
        }
        let m = restart.min(max_iter - iterations).max(1);
        let mut v: Vec<CMatrix> = Vec::with_capacity(m + 1);
        v.push(&r / C64::new(beta, 0.0));
        let mut h = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for j in 0..m {
            iterations += 1;
            let mut w = op(&precond(&v[j]));
            // Two passes of modified Gram–Schmidt.
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = vi.dotc(&w);
                    h[i][j] += hij;
                    add_scaled(&mut w, -hij, vi);
                }
            }
            let hn = w.norm();
            h[j + 1][j] = C64::new(hn, 0.0);
            for i in 0..j {
                let (a, bb) = (h[i][j], h[i + 1][j]);
                h[i][j] = a * cs[i] + sn[i] * bb;
                h[i + 1][j] = -sn[i].conj() * a + bb * cs[i];
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let t = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if t == 0.0 {
                cs[j] = 1.0;
                sn[j] = C64::new(0.0, 0.0);
            } else if a.norm() == 0.0 {
                cs[j] = 0.0;
                sn[j] = C64::new(1.0, 0.0);
            } else {
                cs[j] = a.norm() / t;
                sn[j] = (a / a.norm()) * bb.conj() / t;
            }
            h[j][j] = a * cs[j] + sn[j] * bb;
            h[j + 1][j] = C64::new(0.0, 0.0);
            let gj = g[j];
            g[j] = gj * cs[j];
            g[j + 1] = -sn[j].conj() * gj;
            k_used = j + 1;
            rel = g[j + 1].norm() / b_norm;
            if rel < tol || hn == 0.0 {
                break;
            }
            v.push(&w / C64::new(hn, 0.0));
        }
        let mut y = vec![C64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for k in i + 1..k_used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        let mut update = CMatrix::zeros(nr, nc);
        for (yi, vi) in y.iter().zip(&v) {
            add_scaled(&mut update, *yi, vi);
        }
        x += precond(&update);
        r = b - op(&x);
    }
    let rel_true = r.norm() / b_norm;
    rel = rel.max(rel_true);
    GmresOutcome { x, rel_residual: rel, iterations, converged: rel_true < tol }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let a = CMatrix::from_fn(6, 6, |i, j| {
            let d = if i == j { 4.0 } else { 0.0 };
            C64::new(d + 0.3 * (i as f64 - j as f64), 0.1 * (i + j) as f64)
        });
        let b = CMatrix::from_fn(6, 1, |i, _| C64::new(i as f64 + 1.0, -(i as f64)));
        let out = gmres(|x| &a * x, |x| x.clone(), &b, 1e-13, 3, 200);
        assert!(out.converged);
        assert!((&a * &out.x - &b).norm() < 1e-11 * b.norm());
    }
}
