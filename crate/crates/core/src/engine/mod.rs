//! Truncated Fock-space operators and the Lindblad master equation.
//!
//! Damping follows the amplitude convention ȧ = −κa + …, so a mode with
//! linewidth κ gets the collapse operator √(2κ)a and its photon number decays
//! at 2κ.
//!
//! Superoperators act on matrices directly; where a vectorized form is
//! needed (the direct steady-state solver) it uses column stacking,
//! vec(AXB) = (Bᵀ ⊗ A) vec(X).

mod correlation;
mod gmres;
mod integrate;
mod steady;
mod sylvester;

pub use correlation::{propagate_traces, two_time_correlation};
pub use integrate::{evolve, evolve_trajectory, IntegratorOptions};
pub use steady::{
    steady_state, steady_state_adaptive, steady_state_with, AdaptiveSteadyState, SteadyMethod,
    SteadyOptions, SteadyStateReport, DIRECT_DIM_LIMIT, TRUNCATION_THRESHOLD,
};

use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, Result, C64};

/// Default cap on the Hilbert-space dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Tensor product of truncated bosonic (or two-level) factors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl FockSpace {
    pub fn new(dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        Self::with_cap(dims, labels, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(dims: Vec<usize>, labels: Vec<String>, cap: usize) -> Result<Self> {
        if dims.is_empty() || dims.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "need one label per mode, got {} dims and {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::TruncationTooSmall(format!("every mode needs at least 2 levels, got {d}")));
        }
        let dim = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self { dims, labels })
    }

    pub fn single(n: usize, label: &str) -> Result<Self> {
        Self::new(vec![n], vec![label.to_string()])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Embeds a single-factor operator at position `mode`.
    pub fn embed(&self, mode: usize, op: &CMatrix) -> Result<CMatrix> {
        if mode >= self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "mode index {mode} out of range for {} modes",
                self.dims.len()
            )));
        }
        if op.nrows() != self.dims[mode] || op.ncols() != self.dims[mode] {
            return Err(Error::DimensionMismatch { expected: self.dims[mode], got: op.nrows() });
        }
        let left: usize = self.dims[..mode].iter().product();
        let right: usize = self.dims[mode + 1..].iter().product();
        let out = CMatrix::identity(left, left).kronecker(op);
        Ok(out.kronecker(&CMatrix::identity(right, right)))
    }

    /// Bosonic annihilation operator of `mode`.
    pub fn annihilation(&self, mode: usize) -> Result<CMatrix> {
        let n = *self
            .dims
            .get(mode)
            .ok_or_else(|| Error::InvalidArgument(format!("mode index {mode} out of range")))?;
        self.embed(mode, &destroy(n))
    }

    pub fn number(&self, mode: usize) -> Result<CMatrix> {
        let a = self.annihilation(mode)?;
        Ok(a.adjoint() * a)
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim())
    }

    /// Projector onto the vacuum of every mode.
    pub fn vacuum(&self) -> DensityMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        m[(0, 0)] = C64::new(1.0, 0.0);
        DensityMatrix { matrix: m, space: self.clone() }
    }

    /// Total population of the two highest levels of each mode.
    pub fn top_populations(&self, rho: &CMatrix) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; self.dims.len()];
        for idx in 0..dim {
            let p = rho[(idx, idx)].re;
            let mut rem = idx;
            for m in (0..self.dims.len()).rev() {
                let level = rem % self.dims[m];
                rem /= self.dims[m];
                if level + 2 >= self.dims[m] {
                    out[m] += p;
                }
            }
        }
        out
    }
}

/// Single-mode annihilation matrix of size n.
pub fn destroy(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Hermitian operator with its space.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    pub matrix: CMatrix,
    pub space: FockSpace,
}

impl HamiltonianMatrix {
    pub fn new(matrix: CMatrix, space: FockSpace) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: matrix.nrows() });
        }
        Ok(Self { matrix, space })
    }

    pub fn dims(&self) -> &[usize] {
        self.space.dims()
    }

    pub fn mode_labels(&self) -> &[String] {
        self.space.labels()
    }

    /// ‖H − H†‖ / max(‖H‖, 1), Frobenius norms.
    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.matrix)
    }
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(1.0)
}

/// Density matrix with its space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
    pub space: FockSpace,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, space: FockSpace) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: matrix.nrows() });
        }
        Ok(Self { matrix, space })
    }

    /// Pure state |ψ⟩⟨ψ|, normalized.
    pub fn from_pure(psi: &[C64], space: FockSpace) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: psi.len() });
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = v / C64::new(norm, 0.0);
        Ok(Self { matrix: &v * v.adjoint(), space })
    }

    /// Fock state |n⟩ in a single-mode space.
    pub fn fock(space: FockSpace, n: usize) -> Result<Self> {
        if n >= space.dim() {
            return Err(Error::TruncationTooSmall(format!("level {n} beyond dimension {}", space.dim())));
        }
        let mut m = CMatrix::zeros(space.dim(), space.dim());
        m[(n, n)] = C64::new(1.0, 0.0);
        Ok(Self { matrix: m, space })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Tr(Oρ).
    pub fn expect(&self, op: &CMatrix) -> C64 {
        trace_product(op, &self.matrix)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Hermitizes and renormalizes the trace when either has drifted by more
    /// than `tol`. Returns whether anything was changed.
    pub fn restore(&mut self, tol: f64) -> bool {
        let herm = self.hermiticity_error();
        let tr = self.trace();
        if herm <= tol && (tr - C64::new(1.0, 0.0)).norm() <= tol {
            return false;
        }
        log::debug!("restoring density matrix: hermiticity {herm:e}, trace {tr}");
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let t = h.trace().re;
        self.matrix = h / C64::new(t, 0.0);
        true
    }

    /// Population of the two highest levels of each mode.
    pub fn top_populations(&self) -> Vec<f64> {
        self.space.top_populations(&self.matrix)
    }
}

/// y += a·x, elementwise.
pub(crate) fn add_scaled(y: &mut CMatrix, a: C64, x: &CMatrix) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}

/// Tr(A·B) without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Jump operator `op` with rate; the dissipator uses √rate·op.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseOp {
    pub op: CMatrix,
    pub rate: f64,
}

impl CollapseOp {
    pub fn new(op: CMatrix, rate: f64) -> Self {
        Self { op, rate }
    }
}

/// Hamiltonian plus dissipators. The generator is cached as
/// A = −iH − ½ΣLₖ†Lₖ so that ℒ(X) = AX + XA† + ΣLₖXLₖ†.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    hamiltonian: HamiltonianMatrix,
    collapse: Vec<CollapseOp>,
    jumps: Vec<CMatrix>,
    jumps_adj: Vec<CMatrix>,
    generator: CMatrix,
    generator_adj: CMatrix,
}

impl LindbladModel {
    pub fn new(hamiltonian: HamiltonianMatrix, collapse: Vec<CollapseOp>) -> Result<Self> {
        let n = hamiltonian.space.dim();
        let mut jumps = Vec::new();
        for c in &collapse {
            if c.op.nrows() != n || c.op.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.op.nrows() });
            }
            if !(c.rate.is_finite() && c.rate >= 0.0) {
                return Err(Error::InvalidArgument(format!("collapse rate must be >= 0, got {}", c.rate)));
            }
            if c.rate > 0.0 {
                jumps.push(&c.op * C64::new(c.rate.sqrt(), 0.0));
            }
        }
        let mut generator = &hamiltonian.matrix * C64::new(0.0, -1.0);
        for j in &jumps {
            generator -= j.adjoint() * j * C64::new(0.5, 0.0);
        }
        let generator_adj = generator.adjoint();
        let jumps_adj = jumps.iter().map(|j| j.adjoint()).collect();
        Ok(Self { hamiltonian, collapse, jumps, jumps_adj, generator, generator_adj })
    }

    pub fn hamiltonian(&self) -> &HamiltonianMatrix {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[CollapseOp] {
        &self.collapse
    }

    pub fn space(&self) -> &FockSpace {
        &self.hamiltonian.space
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.space.dim()
    }

    /// Non-Hermitian effective generator A.
    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub(crate) fn jumps(&self) -> &[CMatrix] {
        &self.jumps
    }

    /// ℒ(X) for any square X (also non-Hermitian, as needed by the
    /// regression theorem).
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = &self.generator * x;
        out.gemm(C64::new(1.0, 0.0), x, &self.generator_adj, C64::new(1.0, 0.0));
        for (j, jd) in self.jumps.iter().zip(&self.jumps_adj) {
            let jx = j * x;
            out.gemm(C64::new(1.0, 0.0), &jx, jd, C64::new(1.0, 0.0));
        }
        out
    }

    /// Adjoint generator acting on observables: ℒ†(O) = A†O + OA + ΣLₖ†OLₖ.
    pub fn apply_adjoint(&self, o: &CMatrix) -> CMatrix {
        let mut out = &self.generator_adj * o;
        out.gemm(C64::new(1.0, 0.0), o, &self.generator, C64::new(1.0, 0.0));
        for (j, jd) in self.jumps.iter().zip(&self.jumps_adj) {
            let jo = jd * o;
            out.gemm(C64::new(1.0, 0.0), &jo, j, C64::new(1.0, 0.0));
        }
        out
    }

    /// Frequency scale used to make residuals dimensionless.
    pub fn rate_scale(&self) -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..self.dim() {
            s = s.max(self.generator[(i, i)].norm());
        }
        let mut offdiag: f64 = 0.0;
        for i in 0..self.dim() {
            let row: f64 = (0..self.dim()).filter(|&j| j != i).map(|j| self.generator[(i, j)].norm()).sum();
            offdiag = offdiag.max(row);
        }
        (s + offdiag).max(1e-300)
    }

    /// Dense column-stacked superoperator, dimension n² × n².
    pub fn superoperator(&self) -> CMatrix {
        let n = self.dim();
        let id = CMatrix::identity(n, n);
        let mut s = id.kronecker(&self.generator);
        s += self.generator.conjugate().kronecker(&id);
        for j in &self.jumps {
            s += j.conjugate().kronecker(j);
        }
        s
    }
}

/// −i[H, ρ] + Σ(LρL† − ½{L†L, ρ}).
pub fn lindblad_rhs(model: &LindbladModel, rho: &DensityMatrix) -> Result<CMatrix> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: rho.dim() });
    }
    Ok(model.apply(&rho.matrix))
}
