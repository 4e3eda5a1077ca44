//! Two-time correlations from the quantum regression theorem:
//! ⟨A(t+τ)B(t)⟩_ss = Tr[A·e^{ℒτ}(B·ρ_ss)] for τ ≥ 0.

use super::integrate::{integrate, IntegratorOptions};
use super::{trace_product, DensityMatrix, LindbladModel};
use crate::{CMatrix, Error, Result, C64};

/// Propagates `x0` under ℒ and records Tr(O_k·X(τ)) for every observable.
/// Returns one sequence per observable.
pub fn propagate_traces(
    model: &LindbladModel,
    x0: CMatrix,
    observables: &[&CMatrix],
    taus: &[f64],
    tol: f64,
) -> Result<Vec<Vec<C64>>> {
    let opts = IntegratorOptions::with_tol(tol)?;
    for o in observables {
        if o.nrows() != model.dim() || o.ncols() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: o.nrows() });
        }
    }
    let mut out = vec![Vec::with_capacity(taus.len()); observables.len()];
    integrate(model, x0, taus, &opts, false, |_, x| {
        for (seq, o) in out.iter_mut().zip(observables) {
            seq.push(trace_product(o, x));
        }
        Ok(())
    })?;
    Ok(out)
}

/// ⟨A(t+τ)B(t)⟩ in the state `rho_ss` for each τ of the ascending grid.
pub fn two_time_correlation(
    model: &LindbladModel,
    rho_ss: &DensityMatrix,
    op_a: &CMatrix,
    op_b: &CMatrix,
    taus: &[f64],
    tol: f64,
) -> Result<Vec<C64>> {
    if rho_ss.dim() != model.dim() || op_b.nrows() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: rho_ss.dim() });
    }
    let x0 = op_b * &rho_ss.matrix;
    Ok(propagate_traces(model, x0, &[op_a], taus, tol)?.remove(0))
}
