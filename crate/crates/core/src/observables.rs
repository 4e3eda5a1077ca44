//! Observables at the cavity output.
//!
//! With vacuum input the input-output relation a_out = √(2κ)a − a_in makes
//! every normally ordered output moment a scaled intracavity moment. In the
//! single-polariton model the cavity field is a = C̃γ₁ + (terms in γ₂), and
//! γ₂ is in its vacuum, so normally ordered moments of a_out equal 2κC̃²
//! times those of γ₁ (per pair of operators). The two-mode model keeps the
//! cavity mode itself and the factor is 2κ.
//!
//! The squeezing spectrum of the output quadrature
//! x_out = a_out e^{−iθ} + a_out† e^{iθ} is
//! S(ω) = 1 + ∫ C(τ) e^{−iωτ} dτ with C(τ) = ⟨:x_out(t+τ), x_out(t):⟩.
//! Time-normal ordering gives
//! C(τ) = f·(2Re[e^{−2iθ}⟨γ(t+τ)γ(t)⟩] + 2Re⟨γ†(t+τ)γ(t)⟩ − ⟨x⟩²),
//! with f the output factor above. C is real and C(−τ) = C(τ), so only
//! τ ≥ 0 is propagated and S(ω) = 1 + 2∫₀^∞ C(τ)cos(ωτ)dτ. Both
//! correlations come from one regression-theorem propagation of γρ_ss.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::effective::{CAVITY, GAMMA1};
use crate::engine::{propagate_traces, steady_state, DensityMatrix, FockSpace, LindbladModel};
use crate::parallel::Execution;
use crate::polariton::PolaritonBasis;
use crate::{CMatrix, Error, Result, C64};

/// ⟨a†a⟩ below which g²(0) is undefined.
pub const VACUUM_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Analytic,
    Regression,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub omegas: Vec<f64>,
    pub s_out: Vec<f64>,
    pub method_tag: SpectrumMethod,
}

impl SpectrumResult {
    pub fn new(omegas: Vec<f64>, s_out: Vec<f64>, method_tag: SpectrumMethod) -> Result<Self> {
        if omegas.len() != s_out.len() {
            return Err(Error::DimensionMismatch { expected: omegas.len(), got: s_out.len() });
        }
        check_grid(&omegas)?;
        Ok(Self { omegas, s_out, method_tag })
    }
}

fn check_grid(omegas: &[f64]) -> Result<()> {
    if omegas.iter().any(|w| !w.is_finite()) || omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("frequency grid must be finite and strictly ascending".into()));
    }
    Ok(())
}

/// Mode that feeds the detector and the factor converting its normally
/// ordered moments to output-field moments.
pub fn output_channel(space: &FockSpace, basis: &PolaritonBasis) -> (usize, f64) {
    if let Some(m) = space.mode_index(GAMMA1) {
        (m, 2.0 * basis.kappa * basis.c_tilde * basis.c_tilde)
    } else {
        (space.mode_index(CAVITY).unwrap_or(0), 2.0 * basis.kappa)
    }
}

/// Output photon flux ⟨a_out†a_out⟩: 2κC̃²⟨γ₁†γ₁⟩ for the single-polariton
/// model, 2κ⟨a†a⟩ for a model that carries the cavity mode.
pub fn output_flux(rho_ss: &DensityMatrix, basis: &PolaritonBasis) -> f64 {
    let (mode, factor) = output_channel(&rho_ss.space, basis);
    let n = rho_ss.space.number(mode).expect("mode index comes from the space");
    factor * rho_ss.expect(&n).re
}

/// Mean occupation of `mode`.
pub fn mean_number(rho: &DensityMatrix, mode: usize) -> Result<f64> {
    Ok(rho.expect(&rho.space.number(mode)?).re)
}

/// g²(0) = ⟨a†²a²⟩/⟨a†a⟩² of `mode`.
pub fn g2_zero(rho_ss: &DensityMatrix, mode: usize) -> Result<f64> {
    let a = rho_ss.space.annihilation(mode)?;
    let ad = a.adjoint();
    let n = rho_ss.expect(&(&ad * &a)).re;
    if n <= VACUUM_THRESHOLD {
        return Err(Error::UndefinedCorrelation(format!("<a†a> = {n:e} is vacuum")));
    }
    let pairs = rho_ss.expect(&(&ad * &ad * &a * &a)).re;
    Ok(pairs / (n * n))
}

/// g²(0) ≥ 0 and g²(0) ≥ 1 − 1/⟨n⟩, with a small numerical slack.
pub fn g2_bound_holds(g2: f64, mean_n: f64) -> bool {
    let slack = 1e-9 * (1.0 + g2.abs());
    g2 >= -slack && g2 >= 1.0 - 1.0 / mean_n - slack
}

fn quadrature(a: &CMatrix, theta: f64) -> CMatrix {
    let e = C64::from_polar(1.0, -theta);
    a * e + a.adjoint() * e.conj()
}

/// ⟨(x^θ)²⟩ − ⟨x^θ⟩² with x^θ = a e^{−iθ} + a† e^{iθ} on mode 0, the
/// polariton γ₁ or the cavity mode. The vacuum gives 1.
pub fn quadrature_variance(rho: &DensityMatrix, theta: f64) -> f64 {
    quadrature_variance_of(rho, 0, theta).expect("mode 0 always exists")
}

pub fn quadrature_variance_of(rho: &DensityMatrix, mode: usize, theta: f64) -> Result<f64> {
    let x = quadrature(&rho.space.annihilation(mode)?, theta);
    let mean = rho.expect(&x).re;
    Ok(rho.expect(&(&x * &x)).re - mean * mean)
}

/// Quadrature angle of minimum variance for the pair term
/// (α/2)γ₁†²e^{2iφ_L} + h.c.: θ* = π/4 + arg(αe^{2iφ_L})/2, folded to [0, π).
/// π/4 for positive real α; the coefficients at φ = φ_L = 0 have α < 0,
/// which gives 3π/4.
pub fn squeezed_angle(alpha: C64, phi_l: f64) -> f64 {
    let psi = (alpha * C64::from_polar(1.0, 2.0 * phi_l)).arg();
    (FRAC_PI_4 + 0.5 * psi).rem_euclid(PI)
}

/// Numerical settings of [`squeezing_spectrum_numeric`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions {
    /// Fixed correlation window. `None` picks 20/`decay_rate` and extends
    /// it by doubling until the correlation has decayed.
    pub tau_max: Option<f64>,
    /// Slowest decay rate of the correlation, e.g. κ₁ − |α| for the
    /// linearized model. `None` uses the smallest amplitude damping rate of
    /// the collapse operators.
    pub decay_rate: Option<f64>,
    /// Uniform τ points for the trapezoidal rule.
    pub points: usize,
    /// Integrator tolerance.
    pub tol: f64,
    /// Doublings allowed for an automatic window.
    pub max_extensions: usize,
    pub execution: Execution,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { tau_max: None, decay_rate: None, points: 2048, tol: 1e-10, max_extensions: 8, execution: Execution::Parallel }
    }
}

/// |C(τ)| on the last part of the window must fall below this fraction of
/// max|C|.
pub const DECAY_FRACTION: f64 = 1e-6;

/// Normally ordered, mean-subtracted correlation of the output quadrature
/// on a uniform τ grid over [0, tau_max].
pub fn output_quadrature_correlation(
    model: &LindbladModel,
    rho_ss: &DensityMatrix,
    basis: &PolaritonBasis,
    theta: f64,
    taus: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let (mode, factor) = output_channel(model.space(), basis);
    let g = model.space().annihilation(mode)?;
    let gd = g.adjoint();
    let mean = rho_ss.expect(&g);
    let x_mean = 2.0 * (mean * C64::from_polar(1.0, -theta)).re;
    let x0 = &g * &rho_ss.matrix;
    let traces = propagate_traces(model, x0, &[&g, &gd], taus, tol)?;
    let rot = C64::from_polar(1.0, -2.0 * theta);
    Ok(traces[0]
        .iter()
        .zip(&traces[1])
        .map(|(gaa, gda)| factor * (2.0 * (rot * gaa).re + 2.0 * gda.re - x_mean * x_mean))
        .collect())
}

/// S(ω) = 1 + 2∫₀^{τ_max} C(τ)cos(ωτ)dτ by the trapezoidal rule.
pub fn spectrum_from_correlation(corr: &[f64], dtau: f64, omega: f64) -> f64 {
    let n = corr.len();
    let mut acc = 0.0;
    for (k, c) in corr.iter().enumerate() {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        acc += w * c * (omega * dtau * k as f64).cos();
    }
    1.0 + 2.0 * dtau * acc
}

fn smallest_damping(model: &LindbladModel) -> f64 {
    model
        .collapse_ops()
        .iter()
        .map(|c| 0.5 * c.rate)
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// Squeezing spectrum of the output quadrature at angle θ (default θ* from
/// [`squeezed_angle`] is chosen by the caller; π/4 for positive α) from
/// the regression theorem.
pub fn squeezing_spectrum_numeric(
    model: &LindbladModel,
    basis: &PolaritonBasis,
    omega_grid: &[f64],
    theta: f64,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    let rho = steady_state(model)?;
    squeezing_spectrum_numeric_with_state(model, &rho, basis, omega_grid, theta, opts)
}

/// As [`squeezing_spectrum_numeric`] with a precomputed steady state.
pub fn squeezing_spectrum_numeric_with_state(
    model: &LindbladModel,
    rho_ss: &DensityMatrix,
    basis: &PolaritonBasis,
    omega_grid: &[f64],
    theta: f64,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    check_grid(omega_grid)?;
    if opts.points < 3 {
        return Err(Error::InvalidArgument("spectrum needs at least 3 tau points".into()));
    }
    let (mut tau_max, auto) = match opts.tau_max {
        Some(t) if t.is_finite() && t > 0.0 => (t, false),
        Some(t) => return Err(Error::InvalidArgument(format!("tau_max must be positive, got {t}"))),
        None => {
            let rate = opts.decay_rate.unwrap_or_else(|| smallest_damping(model));
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::InvalidArgument(format!("decay rate hint must be positive, got {rate}")));
            }
            (20.0 / rate, true)
        }
    };
    let mut extensions = 0;
    loop {
        let dtau = tau_max / (opts.points - 1) as f64;
        let taus: Vec<f64> = (0..opts.points).map(|k| dtau * k as f64).collect();
        let corr = output_quadrature_correlation(model, rho_ss, basis, theta, &taus, opts.tol)?;
        let peak = corr.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if peak < 1e-14 {
            return SpectrumResult::new(omega_grid.to_vec(), vec![1.0; omega_grid.len()], SpectrumMethod::Regression);
        }
        let tail_start = opts.points - (opts.points / 50).max(1);
        let tail = corr[tail_start..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if tail < DECAY_FRACTION * peak {
            let s_out = opts.execution.map(omega_grid, |&w| spectrum_from_correlation(&corr, dtau, w));
            return SpectrumResult::new(omega_grid.to_vec(), s_out, SpectrumMethod::Regression);
        }
        if !auto || extensions >= opts.max_extensions {
            return Err(Error::Accuracy(format!(
                "correlation at tau_max = {tau_max} is still {:.1e} of its peak; use a larger tau_max",
                tail / peak
            )));
        }
        log::debug!("correlation not decayed at tau_max = {tau_max}; doubling");
        tau_max *= 2.0;
        extensions += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{parametric_variances, squeezing_spectrum_analytic};
    use crate::engine::{evolve, CollapseOp, HamiltonianMatrix};
    use approx::assert_relative_eq;

    fn basis(kappa: f64, kappa1: f64, c_tilde: f64) -> PolaritonBasis {
        PolaritonBasis {
            omega1: 0.0,
            omega2: 10.0,
            delta_omega: 10.0,
            mixing_x: c_tilde.acos(),
            g_tilde: 1.0,
            kappa,
            kappa1,
            s_tilde: (1.0 - c_tilde * c_tilde).sqrt(),
            c_tilde,
            strong_coupling: true,
            degenerate: false,
        }
    }

    /// (α/2)(γ†² + γ²) with damping κ₁ on n levels.
    fn squeezer(n: usize, alpha: f64, kappa1: f64) -> LindbladModel {
        let s = FockSpace::single(n, GAMMA1).unwrap();
        let g = s.annihilation(0).unwrap();
        let gd2 = g.adjoint() * g.adjoint();
        let h = (&gd2 + gd2.adjoint()) * C64::new(0.5 * alpha, 0.0);
        LindbladModel::new(HamiltonianMatrix::new(h, s).unwrap(), vec![CollapseOp::new(g, 2.0 * kappa1)]).unwrap()
    }

    fn coherent(n: usize, z: C64) -> DensityMatrix {
        let mut psi = vec![C64::new(0.0, 0.0); n];
        let mut c = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
        for (k, p) in psi.iter_mut().enumerate() {
            *p = c;
            c *= z / ((k + 1) as f64).sqrt();
        }
        DensityMatrix::from_pure(&psi, FockSpace::single(n, "a").unwrap()).unwrap()
    }

    #[test]
    fn flux_examples() {
        let s = FockSpace::single(4, GAMMA1).unwrap();
        assert_eq!(output_flux(&s.vacuum(), &basis(1.0, 1.0, 1.0)), 0.0);
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        let rho = DensityMatrix::new(m, s).unwrap();
        assert_relative_eq!(output_flux(&rho, &basis(1.0, 1.0, 1.0)), 1.0);
        assert_relative_eq!(output_flux(&rho, &basis(1.0, 1.0, 0.6)), 0.36);

        let model = squeezer(30, 0.4, 1.0);
        let rho = steady_state(&model).unwrap();
        let b = basis(1.0, 1.0, 0.8);
        let expect = 2.0 * 0.64 * 0.16 / (2.0 * (1.0 - 0.16));
        assert_relative_eq!(output_flux(&rho, &b), expect, max_relative = 1e-8);
    }

    #[test]
    fn g2_examples() {
        let s = FockSpace::single(5, "a").unwrap();
        let fock2 = DensityMatrix::fock(s.clone(), 2).unwrap();
        assert_relative_eq!(g2_zero(&fock2, 0).unwrap(), 0.5, max_relative = 1e-14);
        assert!(matches!(g2_zero(&s.vacuum(), 0), Err(Error::UndefinedCorrelation(_))));
        let coh = coherent(40, C64::new(1.2, -0.7));
        assert_relative_eq!(g2_zero(&coh, 0).unwrap(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn squeezed_vacuum_pair_statistics() {
        // S(r)|0⟩ from brute-force evolution under H = (i/2)(a² − a†²) for
        // t = r; a pure squeezed vacuum has g²(0) = 3 + 1/⟨n⟩.
        let n = 40;
        let r = 0.1;
        let s = FockSpace::single(n, "a").unwrap();
        let a = s.annihilation(0).unwrap();
        let h = (&a * &a - a.adjoint() * a.adjoint()) * C64::new(0.0, 0.5);
        let m = LindbladModel::new(HamiltonianMatrix::new(h, s.clone()).unwrap(), vec![]).unwrap();
        let rho = evolve(&m, &s.vacuum(), r, 1e-12).unwrap();
        let mean = mean_number(&rho, 0).unwrap();
        assert_relative_eq!(mean, r.sinh().powi(2), max_relative = 1e-8);
        let g2 = g2_zero(&rho, 0).unwrap();
        assert!((g2 / (3.0 + 1.0 / mean) - 1.0).abs() < 0.02);
    }

    #[test]
    fn weak_parametric_steady_state_statistics() {
        // Gaussian moments of the damped squeezer: n = α²/(2D),
        // |⟨γ²⟩| = ακ₁/(2D), so g²(0) = 2 + κ₁²/α².
        let (alpha, kappa1) = (0.05, 1.0);
        let rho = steady_state(&squeezer(12, alpha, kappa1)).unwrap();
        let g2 = g2_zero(&rho, 0).unwrap();
        let expect = 2.0 + kappa1 * kappa1 / (alpha * alpha);
        assert!((g2 / expect - 1.0).abs() < 0.02, "{g2} vs {expect}");
        assert!(g2_bound_holds(g2, mean_number(&rho, 0).unwrap()));
    }

    #[test]
    fn vacuum_variance_is_one() {
        let s = FockSpace::single(6, "a").unwrap();
        for k in 0..8 {
            assert_relative_eq!(quadrature_variance(&s.vacuum(), 0.4 * k as f64), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn parametric_variances_and_minimizer() {
        let (alpha, kappa1) = (0.5, 1.0);
        let rho = steady_state(&squeezer(40, alpha, kappa1)).unwrap();
        let (sq, anti) = parametric_variances(alpha, kappa1).unwrap();
        assert!((quadrature_variance(&rho, FRAC_PI_4) - 2.0 / 3.0).abs() < 1e-6);
        assert!((quadrature_variance(&rho, FRAC_PI_4) - sq).abs() < 1e-6);
        assert!((quadrature_variance(&rho, 3.0 * FRAC_PI_4) - anti).abs() < 1e-5);
        let best = (0..180)
            .map(|k| PI * k as f64 / 180.0)
            .min_by(|a, b| quadrature_variance(&rho, *a).total_cmp(&quadrature_variance(&rho, *b)))
            .unwrap();
        assert_relative_eq!(best, FRAC_PI_4, epsilon = 1e-12);
        for k in 0..12 {
            let t = 0.3 * k as f64;
            let prod = quadrature_variance(&rho, t) * quadrature_variance(&rho, t + 0.5 * PI);
            assert!(prod >= 1.0 - 1e-6);
        }
    }

    #[test]
    fn squeezed_angle_convention() {
        assert_relative_eq!(squeezed_angle(C64::new(0.3, 0.0), 0.0), FRAC_PI_4);
        assert_relative_eq!(squeezed_angle(C64::new(-0.3, 0.0), 0.0), 3.0 * FRAC_PI_4);
        // A rotated pair term moves the angle by φ_L.
        assert_relative_eq!(squeezed_angle(C64::new(0.3, 0.0), 0.2), FRAC_PI_4 + 0.2, epsilon = 1e-15);
    }

    #[test]
    fn spectrum_of_vacuum_is_flat() {
        let model = squeezer(6, 0.0, 1.0);
        let grid = [-5.0, 0.0, 5.0];
        let s = squeezing_spectrum_numeric(&model, &basis(1.0, 1.0, 1.0), &grid, FRAC_PI_4, &SpectrumOptions::default())
            .unwrap();
        assert_eq!(s.s_out, vec![1.0; 3]);
        assert_eq!(s.method_tag, SpectrumMethod::Regression);
    }

    #[test]
    fn spectrum_matches_lorentzian() {
        let (alpha, kappa1) = (0.5, 1.0);
        let model = squeezer(30, alpha, kappa1);
        let b = basis(1.0, kappa1, 1.0);
        let grid: Vec<f64> = (-20..=20).map(|k| 0.5 * k as f64).collect();
        let opts = SpectrumOptions { decay_rate: Some(kappa1 - alpha), ..Default::default() };
        let num = squeezing_spectrum_numeric(&model, &b, &grid, FRAC_PI_4, &opts).unwrap();
        let ana = squeezing_spectrum_analytic(alpha, 1.0, kappa1, 1.0, &grid).unwrap();
        for ((w, n), a) in grid.iter().zip(&num.s_out).zip(&ana.s_out) {
            assert!((n / a - 1.0).abs() < 0.02, "omega {w}: {n} vs {a}");
            assert!(*n >= 0.0);
        }
        let far = 100.0 * (kappa1 + alpha);
        let tail = squeezing_spectrum_numeric(&model, &b, &[-far, far], FRAC_PI_4, &opts).unwrap();
        assert!(tail.s_out.iter().all(|s| (s - 1.0).abs() < 1e-3));
    }

    #[test]
    fn short_fixed_window_is_an_accuracy_error() {
        let model = squeezer(20, 0.5, 1.0);
        let opts = SpectrumOptions { tau_max: Some(1.0), ..Default::default() };
        let r = squeezing_spectrum_numeric(&model, &basis(1.0, 1.0, 1.0), &[0.0], FRAC_PI_4, &opts);
        assert!(matches!(r, Err(Error::Accuracy(_))));
    }
}
