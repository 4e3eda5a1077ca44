//! Adaptive Dormand–Prince 5(4) integration of dX/dt = ℒ(X).

use super::{add_scaled, DensityMatrix, LindbladModel};
use crate::{CMatrix, Error, Result, C64};

/// Drift of trace or hermiticity tolerated before a density matrix is
/// restored during evolution.
pub const RESTORE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl IntegratorOptions {
    /// Local error tolerance in [1e-12, 1e-4], used for both the relative
    /// and absolute parts.
    pub fn with_tol(tol: f64) -> Result<Self> {
        if !(1e-12..=1e-4).contains(&tol) {
            return Err(Error::InvalidArgument(format!("integrator tolerance {tol} outside [1e-12, 1e-4]")));
        }
        Ok(Self { rtol: tol, atol: tol, max_steps: 2_000_000 })
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-9, max_steps: 2_000_000 }
    }
}

// The generator is time independent, so the nodes c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lincomb(y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)]) -> CMatrix {
    let mut out = y.clone();
    for &(c, k) in terms {
        if c != 0.0 {
            add_scaled(&mut out, C64::new(h * c, 0.0), k);
        }
    }
    out
}

fn error_norm(err: &CMatrix, y0: &CMatrix, y1: &CMatrix, opts: &IntegratorOptions) -> f64 {
    let mut acc = 0.0;
    for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
        let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
        acc += (e.norm() / sc).powi(2);
    }
    (acc / err.len() as f64).sqrt()
}

/// Integrates ℒ from X(0) = `x0`, calling `on_output(k, X(times[k]))` at every
/// requested time. `times` must be ascending and nonnegative. When
/// `restore` is set the state is treated as a density matrix and hermitized
/// and renormalized whenever it drifts.
pub(crate) fn integrate<F>(
    model: &LindbladModel,
    x0: CMatrix,
    times: &[f64],
    opts: &IntegratorOptions,
    restore: bool,
    mut on_output: F,
) -> Result<()>
where
    F: FnMut(usize, &CMatrix) -> Result<()>,
{
    if x0.nrows() != model.dim() || x0.ncols() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x0.nrows() });
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("output times must be finite, nonnegative and ascending".into()));
    }
    let scale = model.rate_scale();
    let mut t = 0.0;
    let mut y = x0;
    let mut k1 = model.apply(&y);
    let mut h = (0.05 / scale).min(times.last().copied().unwrap_or(0.0).max(1e-300));
    let mut steps = 0usize;

    for (idx, &t_out) in times.iter().enumerate() {
        while t < t_out {
            if steps >= opts.max_steps {
                return Err(Error::Stiff { t });
            }
            let remaining = t_out - t;
            let clamped = h >= remaining;
            let h_try = if clamped { remaining } else { h };
            if h_try < 1e-14 * t.max(1.0 / scale) {
                return Err(Error::Stiff { t });
            }
            let k2 = model.apply(&lincomb(&y, h_try, &[(A21, &k1)]));
            let k3 = model.apply(&lincomb(&y, h_try, &[(A31, &k1), (A32, &k2)]));
            let k4 = model.apply(&lincomb(&y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = model.apply(&lincomb(&y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = model.apply(&lincomb(
                &y,
                h_try,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ));
            let y_new = lincomb(&y, h_try, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = model.apply(&y_new);
            let mut err = k1.clone() * C64::new(h_try * E1, 0.0);
            for (e, k) in [(E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)] {
                add_scaled(&mut err, C64::new(h_try * e, 0.0), k);
            }
            let en = error_norm(&err, &y, &y_new, opts);
            steps += 1;
            let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            if en <= 1.0 {
                t = if clamped { t_out } else { t + h_try };
                y = y_new;
                k1 = k7;
                if restore && restore_in_place(&mut y) {
                    k1 = model.apply(&y);
                }
                // A clamped step says nothing about the natural step size.
                if !clamped || factor < 1.0 {
                    h = h_try * factor;
                }
            } else {
                h = h_try * factor.min(1.0);
            }
        }
        on_output(idx, &y)?;
    }
    Ok(())
}

fn restore_in_place(y: &mut CMatrix) -> bool {
    let herm = (&*y - y.adjoint()).norm();
    let tr = y.trace();
    if herm <= RESTORE_TOLERANCE && (tr - C64::new(1.0, 0.0)).norm() <= RESTORE_TOLERANCE {
        return false;
    }
    log::debug!("renormalizing state during evolution: hermiticity {herm:e}, trace {tr}");
    let h = (&*y + y.adjoint()) * C64::new(0.5, 0.0);
    let t = h.trace().re;
    *y = h / C64::new(t, 0.0);
    true
}

/// ρ(t_final) under the master equation.
pub fn evolve(model: &LindbladModel, rho0: &DensityMatrix, t_final: f64, tol: f64) -> Result<DensityMatrix> {
    let opts = IntegratorOptions::with_tol(tol)?;
    let mut out = evolve_trajectory_with(model, rho0, &[t_final], &opts)?;
    Ok(out.pop().expect("one output time"))
}

/// ρ at each of the ascending `times`.
pub fn evolve_trajectory(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
    tol: f64,
) -> Result<Vec<DensityMatrix>> {
    let opts = IntegratorOptions::with_tol(tol)?;
    evolve_trajectory_with(model, rho0, times, &opts)
}

pub(crate) fn evolve_trajectory_with(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<DensityMatrix>> {
    if rho0.space != *model.space() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: rho0.dim() });
    }
    let mut out = Vec::with_capacity(times.len());
    integrate(model, rho0.matrix.clone(), times, opts, true, |_, y| {
        out.push(DensityMatrix { matrix: y.clone(), space: rho0.space.clone() });
        Ok(())
    })?;
    Ok(out)
}
