//! Solver for A·X + X·A† = Y via the complex Schur form of A.
//!
//! Used as a preconditioner for the Krylov steady-state solver: the
//! generator's non-jump part is exactly this operator, so the preconditioned
//! system only sees the jump terms as a perturbation.

use nalgebra::linalg::Schur;

use crate::{CMatrix, C64};

pub(crate) struct LyapunovSolver {
    q: CMatrix,
    q_adj: CMatrix,
    t: CMatrix,
    t_conj: CMatrix,
    floor: f64,
}

impl LyapunovSolver {
    pub(crate) fn new(a: &CMatrix) -> Self {
        let (q, t) = Schur::new(a.clone()).unpack();
        let scale = (0..t.nrows()).map(|i| t[(i, i)].norm()).fold(0.0f64, f64::max).max(1e-300);
        Self { q_adj: q.adjoint(), t_conj: t.conjugate(), q, t, floor: 1e-12 * scale }
    }

    /// Solves A·X + X·A† = Y. Near-singular diagonal couplings (pairs of
    /// purely imaginary eigenvalues) are regularized, which is harmless for a
    /// preconditioner.
    pub(crate) fn solve(&self, y: &CMatrix) -> CMatrix {
        let n = self.t.nrows();
        let yt = &self.q_adj * y * &self.q;
        let mut x = CMatrix::zeros(n, n);
        for i in (0..n).rev() {
            for j in (0..n).rev() {
                let mut rhs = yt[(i, j)];
                for k in i + 1..n {
                    rhs -= self.t[(i, k)] * x[(k, j)];
                }
                for k in j + 1..n {
                    rhs -= x[(i, k)] * self.t_conj[(j, k)];
                }
                let mut den = self.t[(i, i)] + self.t_conj[(j, j)];
                if den.norm() < self.floor {
                    den = C64::new(-self.floor, 0.0);
                }
                x[(i, j)] = rhs / den;
            }
        }
        &self.q * x * &self.q_adj
    }
}
