//! Steady states of the master equation.
//!
//! Three routes are available: a dense LU solve of the vectorized
//! Liouvillian with one row replaced by the trace condition, preconditioned
//! GMRES on the matrix form of the same problem, and plain time integration
//! until the residual stops changing. `Auto` uses the dense solve for small
//! spaces and GMRES otherwise.

use serde::{Deserialize, Serialize};

use super::gmres::gmres;
use super::integrate::{integrate, IntegratorOptions};
use super::sylvester::LyapunovSolver;
use super::{DensityMatrix, LindbladModel};
use crate::{CMatrix, Error, Result, C64};

/// Largest Hilbert-space dimension solved by dense LU under `Auto`.
pub const DIRECT_DIM_LIMIT: usize = 32;
/// Top-two-level population above which a truncation is considered too small.
pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyMethod {
    #[default]
    Auto,
    Direct,
    Krylov,
    Integration,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyOptions {
    pub method: SteadyMethod,
    /// Bound on ‖ℒ(ρ)‖_F divided by the generator's rate scale.
    pub residual_tol: f64,
    pub direct_limit: usize,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            method: SteadyMethod::Auto,
            residual_tol: 1e-10,
            direct_limit: DIRECT_DIM_LIMIT,
            restart: 60,
            max_iter: 3000,
        }
    }
}

impl SteadyOptions {
    pub fn with_method(method: SteadyMethod) -> Self {
        Self { method, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyStateReport {
    pub rho: DensityMatrix,
    pub method: SteadyMethod,
    pub residual: f64,
    pub iterations: usize,
}

/// Steady state with default options.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    Ok(steady_state_with(model, &SteadyOptions::default())?.rho)
}

pub fn steady_state_with(model: &LindbladModel, opts: &SteadyOptions) -> Result<SteadyStateReport> {
    let method = match opts.method {
        SteadyMethod::Auto if model.dim() <= opts.direct_limit => SteadyMethod::Direct,
        SteadyMethod::Auto => SteadyMethod::Krylov,
        m => m,
    };
    if model.jumps().is_empty() {
        return Err(Error::NonUniqueSteadyState("model has no dissipation".into()));
    }
    let (x, iterations) = match method {
        SteadyMethod::Direct => (direct(model)?, 1),
        SteadyMethod::Krylov => krylov(model, opts)?,
        SteadyMethod::Integration => integration(model, opts)?,
        SteadyMethod::Auto => unreachable!(),
    };
    let h = (&x + x.adjoint()) * C64::new(0.5, 0.0);
    let tr = h.trace().re;
    if !(tr.is_finite() && tr.abs() > 1e-300) {
        return Err(Error::SteadyStateFailed("solution has vanishing trace".into()));
    }
    let rho = DensityMatrix { matrix: h / C64::new(tr, 0.0), space: model.space().clone() };
    let residual = model.apply(&rho.matrix).norm() / model.rate_scale();
    if residual > opts.residual_tol {
        return Err(Error::SteadyStateFailed(format!(
            "relative residual {residual:e} above {:e} ({method:?})",
            opts.residual_tol
        )));
    }
    Ok(SteadyStateReport { rho, method, residual, iterations })
}

fn direct(model: &LindbladModel) -> Result<CMatrix> {
    let n = model.dim();
    let mut s = model.superoperator();
    for col in 0..n * n {
        s[(0, col)] = C64::new(0.0, 0.0);
    }
    for i in 0..n {
        s[(0, i + i * n)] = C64::new(1.0, 0.0);
    }
    let lu = s.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n * n).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min < 1e-13 * max {
        return Err(Error::NonUniqueSteadyState(format!("pivot ratio {:e}", min / max.max(1e-300))));
    }
    let mut rhs = nalgebra::DVector::<C64>::zeros(n * n);
    rhs[0] = C64::new(1.0, 0.0);
    let v = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NonUniqueSteadyState("singular Liouvillian".into()))?;
    Ok(CMatrix::from_column_slice(n, n, v.as_slice()))
}

fn krylov(model: &LindbladModel, opts: &SteadyOptions) -> Result<(CMatrix, usize)> {
    let n = model.dim();
    // Solve ℒ(X) + s·Tr(X)·|0⟩⟨0| = s·|0⟩⟨0|. Its unique solution is the
    // normalized steady state whenever the latter is unique.
    let s = model.rate_scale();
    let mut b = CMatrix::zeros(n, n);
    b[(0, 0)] = C64::new(s, 0.0);
    let op = |x: &CMatrix| {
        let mut out = model.apply(x);
        out[(0, 0)] += x.trace() * s;
        out
    };
    let pre = LyapunovSolver::new(model.generator());
    let out = gmres(op, |y| pre.solve(y), &b, 1e-13, opts.restart, opts.max_iter);
    if !out.converged {
        log::warn!("GMRES stopped at relative residual {:e} after {} iterations", out.rel_residual, out.iterations);
    }
    log::debug!("GMRES steady state: {} iterations, residual {:e}", out.iterations, out.rel_residual);
    Ok((out.x, out.iterations))
}

fn integration(model: &LindbladModel, opts: &SteadyOptions) -> Result<(CMatrix, usize)> {
    let scale = model.rate_scale();
    let slowest = model
        .collapse_ops()
        .iter()
        .filter(|c| c.rate > 0.0)
        .map(|c| c.rate)
        .fold(f64::INFINITY, f64::min);
    let chunk = 20.0 / slowest;
    let iopts = IntegratorOptions::with_tol(1e-12)?;
    let mut x = model.space().vacuum().matrix;
    for round in 1..=200 {
        let mut next = None;
        integrate(model, x.clone(), &[chunk], &iopts, true, |_, y| {
            next = Some(y.clone());
            Ok(())
        })?;
        x = next.expect("one output");
        let residual = model.apply(&x).norm() / scale;
        if residual < 0.1 * opts.residual_tol {
            return Ok((x, round));
        }
    }
    Err(Error::SteadyStateFailed("time integration did not converge".into()))
}

/// Result of [`steady_state_adaptive`].
#[derive(Clone, Debug)]
pub struct AdaptiveSteadyState {
    pub report: SteadyStateReport,
    pub dims: Vec<usize>,
    /// Top-two-level population of each mode in the final state.
    pub top_populations: Vec<f64>,
    pub truncation_adequate: bool,
}

/// Solves for the steady state and, while any mode carries more than 10⁻⁶ in
/// its two highest levels, doubles that mode's truncation and retries.
/// Stops at the dimension cap and reports the last attempt.
pub fn steady_state_adaptive<B>(build: B, dims: Vec<usize>, opts: &SteadyOptions) -> Result<AdaptiveSteadyState>
where
    B: Fn(&[usize]) -> Result<LindbladModel>,
{
    let mut dims = dims;
    let mut last: Option<AdaptiveSteadyState> = None;
    loop {
        let model = match build(&dims) {
            Ok(m) => m,
            Err(Error::DimensionCap { .. }) if last.is_some() => break,
            Err(e) => return Err(e),
        };
        let report = steady_state_with(&model, opts)?;
        let top = report.rho.top_populations();
        let adequate = top.iter().all(|&p| p < TRUNCATION_THRESHOLD);
        let state = AdaptiveSteadyState { report, dims: dims.clone(), top_populations: top.clone(), truncation_adequate: adequate };
        if adequate {
            return Ok(state);
        }
        last = Some(state);
        for (d, p) in dims.iter_mut().zip(&top) {
            if *p >= TRUNCATION_THRESHOLD {
                *d *= 2;
            }
        }
    }
    let state = last.expect("at least one attempt");
    log::warn!(
        "truncation {:?} still inadequate at the dimension cap (top populations {:?})",
        state.dims,
        state.top_populations
    );
    Ok(state)
}
