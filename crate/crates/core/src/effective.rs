//! Effective nonlinear Hamiltonians for the lower polariton γ₁.
//!
//! Two descriptions are provided. The single-mode model works directly with
//! γ₁:
//!
//! ℋ = δω₁γ†γ + ½(αγ†²e^{2iφ_L} + h.c.) + χγ†²γ² + i(νγ†²γe^{iφ_L} − h.c.),
//!
//! with collapse operator √(2κ₁)γ. The two-mode model keeps the cavity mode
//! `a` and the symmetric spin wave `b` coupled to it, with the laser-driven
//! spin wave replaced by its mean-field amplitude, and collapse operators
//! √(2κ)a and √γ b.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::engine::{destroy, CollapseOp, FockSpace, HamiltonianMatrix, LindbladModel};
use crate::geometry::{MatchFlag, PhaseMatchReport, Selectors};
use crate::polariton::{coupling_g_tilde, diagonalize, driven_mode_amplitude, PolaritonBasis, SystemParams};
use crate::{CMatrix, Error, Result, C64};

/// Mode label of the single-polariton model.
pub const GAMMA1: &str = "gamma1";
/// Mode labels of the two-mode model.
pub const CAVITY: &str = "a";
pub const SPIN_WAVE: &str = "b";

/// Coefficients of the single-polariton Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoefficients {
    pub delta_omega1: f64,
    pub alpha: C64,
    pub chi: f64,
    pub nu: C64,
    /// |α/χ|; infinite when χ = 0 (serialized as null).
    pub epsilon: f64,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// 𝒞_χ = (½ + ½δ_{Q,±G₀/4}cos4φ)(1 − δ_{k,G/2}).
pub fn selector_chi(sel: &Selectors, phi: f64) -> f64 {
    if sel.k_half {
        return 0.0;
    }
    0.5 + 0.5 * indicator(sel.quarter) * (4.0 * phi).cos()
}

/// 𝒞_α = ½(δ_{Q′,Q+G/2}e^{−2iφ} + δ_{Q′,−Q+G/2}e^{2iφ})(1 − δ_{k,G/2}).
pub fn selector_alpha(sel: &Selectors, phi: f64) -> C64 {
    if sel.k_half {
        return c(0.0);
    }
    (phase(-2.0 * phi) * indicator(sel.plus_half) + phase(2.0 * phi) * indicator(sel.minus_half)) * 0.5
}

/// 𝒞_ν = (1/√2)(δ_{Q′,3Q}e^{−3iφ} + δ_{Q′,−3Q}e^{3iφ})(1 − δ_{k,G/2}).
pub fn selector_nu(sel: &Selectors, phi: f64) -> C64 {
    if sel.k_half {
        return c(0.0);
    }
    (phase(-3.0 * phi) * indicator(sel.triple_plus) + phase(3.0 * phi) * indicator(sel.triple_minus)) / SQRT_2
}

fn check_regime(report: &PhaseMatchReport) -> Result<()> {
    if report.has(MatchFlag::LaserEqualsCavity) {
        return Err(Error::UnsupportedRegime(
            "laser and cavity spin waves coincide (Q' = ±Q); coherent pumping of the cavity is not modeled".into(),
        ));
    }
    Ok(())
}

/// δω₁, α, χ, ν and ε for the given geometry. The explicit 1/ω_z factors use
/// `params.omega_z`; pass the output of [`resonant_substitution`] to apply the
/// resonant replacement there while keeping the physical basis.
pub fn compute_coefficients(
    params: &SystemParams,
    basis: &PolaritonBasis,
    report: &PhaseMatchReport,
) -> Result<EffectiveCoefficients> {
    check_regime(report)?;
    if params.omega_z == 0.0 {
        return Err(Error::ResonantDetuning);
    }
    let sel = &report.selectors;
    let pair_terms = [sel.pair, sel.plus_half && !sel.k_half, sel.minus_half && !sel.k_half];
    assert!(
        pair_terms.iter().filter(|&&x| x).count() <= 1,
        "pair-creation selectors are mutually exclusive"
    );
    let (s, cx) = (basis.s_tilde, basis.c_tilde);
    let sqrt_n = params.sqrt_n();
    let gsn_over_wz = basis.g_tilde * sqrt_n / params.omega_z;
    let om2_over_wz = params.omega_rabi * params.omega_rabi / params.omega_z;
    let shape = s * s + gsn_over_wz * s * cx;

    let delta_omega1 = basis.omega1 + 2.0 * om2_over_wz * shape;
    let alpha = -(c(indicator(sel.pair)) + selector_alpha(sel, params.phi)) * (om2_over_wz * shape);
    let chi = basis.g_tilde / sqrt_n * s.powi(3) * cx * (1.0 + selector_chi(sel, params.phi));
    let nu = selector_nu(sel, params.phi)
        * (-params.omega_rabi / (4.0 * sqrt_n) * (s.powi(3) + 3.0 * gsn_over_wz * s * s * cx));
    let epsilon = if chi == 0.0 { f64::INFINITY } else { alpha.norm() / chi.abs() };
    Ok(EffectiveCoefficients { delta_omega1, alpha, chi, nu, epsilon })
}

/// Replaces ω_z by (ω_z² + γ²/4)/ω_z. At ω_z = 0 the result is +∞, under
/// which every 1/ω_z term of the coefficients vanishes exactly.
pub fn resonant_substitution(params: &SystemParams) -> Result<SystemParams> {
    let mut out = params.clone();
    if params.omega_z == 0.0 {
        if params.gamma == 0.0 {
            return Err(Error::InvalidArgument(
                "resonant substitution needs gamma > 0 or omega_z != 0".into(),
            ));
        }
        out.omega_z = f64::INFINITY;
    } else {
        let wz = params.omega_z;
        out.omega_z = (wz * wz + 0.25 * params.gamma * params.gamma) / wz;
    }
    Ok(out)
}

/// Coefficients with the resonant substitution applied to the explicit
/// 1/ω_z factors.
pub fn compute_coefficients_resonant(
    params: &SystemParams,
    basis: &PolaritonBasis,
    report: &PhaseMatchReport,
) -> Result<EffectiveCoefficients> {
    compute_coefficients(&resonant_substitution(params)?, basis, report)
}

fn shift_at(params: &SystemParams, g_tilde: f64, report: &PhaseMatchReport, delta_c: f64) -> Result<f64> {
    let mut p = params.clone();
    p.delta_c = delta_c;
    let basis = diagonalize(&p, g_tilde)?;
    Ok(compute_coefficients(&p, &basis, report)?.delta_omega1)
}

/// δ_c at which δω₁ = 0, searched in [−10|ω_z|, 10|ω_z|]; the root of
/// smallest |δ_c| is returned when there are several.
pub fn choose_delta_c_for_zero_shift(params: &SystemParams) -> Result<f64> {
    let w = 10.0 * params.omega_z.abs();
    choose_delta_c_in(params, -w, w)
}

/// As [`choose_delta_c_for_zero_shift`] on an explicit bracket.
pub fn choose_delta_c_in(params: &SystemParams, lo: f64, hi: f64) -> Result<f64> {
    params.validate()?;
    if params.omega_z == 0.0 {
        return Err(Error::ResonantDetuning);
    }
    if !(lo < hi) {
        return Err(Error::RootNotFound { lo, hi });
    }
    let report = crate::geometry::classify(&params.geometry)?;
    let g_tilde = coupling_g_tilde(params, &report);
    let coupling = g_tilde.abs() * params.sqrt_n();
    let wz = params.omega_z;

    // Uniform grid plus refinement around the avoided crossing, where δω₁
    // changes on the scale g̃√N.
    let mut grid: Vec<f64> = (0..=4000).map(|k| lo + (hi - lo) * k as f64 / 4000.0).collect();
    if coupling > 0.0 {
        for k in -400..=400 {
            let x = wz + coupling * (k as f64 / 40.0);
            if x > lo && x < hi {
                grid.push(x);
            }
        }
        let closed = coupling * coupling / wz;
        if closed > lo && closed < hi {
            grid.push(closed);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let f = |x: f64| shift_at(params, g_tilde, &report, x);
    let mut roots = Vec::new();
    let mut prev = (grid[0], f(grid[0])?);
    if prev.1 == 0.0 {
        roots.push(prev.0);
    }
    for &x in &grid[1..] {
        let fx = f(x)?;
        if fx == 0.0 {
            roots.push(x);
        } else if prev.1 != 0.0 && prev.1.signum() != fx.signum() {
            roots.push(bisect(&f, prev.0, x, prev.1)?);
        }
        prev = (x, fx);
    }
    let root = roots
        .into_iter()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or(Error::RootNotFound { lo, hi })?;
    let resid = f(root)?;
    if resid.abs() >= 1e-8 {
        return Err(Error::Accuracy(format!("|δω₁| = {resid:e} at the bracketed root δ_c = {root}")));
    }
    Ok(root)
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let fb = f(b)?;
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Matrix of the single-polariton Hamiltonian on |0⟩…|n_max−1⟩.
pub fn build_single_mode_hamiltonian(
    coeffs: &EffectiveCoefficients,
    phi_l: f64,
    n_max: usize,
) -> Result<HamiltonianMatrix> {
    if n_max < 2 {
        return Err(Error::TruncationTooSmall(format!("single-mode truncation {n_max} < 2")));
    }
    let space = FockSpace::single(n_max, GAMMA1)?;
    let g = destroy(n_max);
    let gd = g.adjoint();
    let gd2 = &gd * &gd;
    let n = &gd * &g;
    let mut h = &n * c(coeffs.delta_omega1) + &gd2 * (&gd2.adjoint()) * c(coeffs.chi);
    let upper = &gd2 * (coeffs.alpha * phase(2.0 * phi_l) * 0.5)
        + &gd2 * &g * (C64::i() * coeffs.nu * phase(phi_l));
    h += &upper + upper.adjoint();
    HamiltonianMatrix::new(h, space)
}

/// Single-polariton master equation with collapse operator √(2κ₁)γ₁.
pub fn single_mode_model(
    coeffs: &EffectiveCoefficients,
    basis: &PolaritonBasis,
    phi_l: f64,
    n_max: usize,
) -> Result<LindbladModel> {
    let h = build_single_mode_hamiltonian(coeffs, phi_l, n_max)?;
    let g = h.space.annihilation(0)?;
    LindbladModel::new(h, vec![CollapseOp::new(g, 2.0 * basis.kappa1)])
}

/// Two-mode (cavity ⊗ spin wave) Hamiltonian with the laser-driven spin wave
/// replaced by its mean-field amplitude β. Mode order is (a, b).
pub fn build_two_mode_hamiltonian(
    params: &SystemParams,
    basis: &PolaritonBasis,
    report: &PhaseMatchReport,
    n_max_a: usize,
    n_max_b: usize,
) -> Result<HamiltonianMatrix> {
    check_regime(report)?;
    let expected_g = coupling_g_tilde(params, report).abs();
    if (basis.g_tilde - expected_g).abs() > 1e-12 * expected_g.max(1.0) {
        return Err(Error::InvalidArgument("polariton basis was computed for different parameters".into()));
    }
    if report.has(MatchFlag::TripleMatched) && (n_max_a < 3 || n_max_b < 3) {
        return Err(Error::TruncationTooSmall("triple phase matching needs at least 3 levels per mode".into()));
    }
    let space = FockSpace::new(vec![n_max_a, n_max_b], vec![CAVITY.into(), SPIN_WAVE.into()])?;
    let sel = &report.selectors;
    let beta = driven_mode_amplitude(params)?;
    let beta_c = beta.conj();
    let phi = params.phi;
    let sqrt_n = params.sqrt_n();
    let nk = indicator(!sel.k_half);
    let pair = indicator(sel.pair);
    let quarter = indicator(sel.quarter);
    let tp = indicator(sel.triple_plus);
    let tm = indicator(sel.triple_minus);
    let ph = indicator(sel.plus_half);
    let mh = indicator(sel.minus_half);

    // b_Q and b_{−Q} projected on the spin wave that couples to the cavity.
    let (cq, cmq) = if sel.k_half { (c(1.0), c(1.0)) } else { (phase(phi) / SQRT_2, phase(-phi) / SQRT_2) };
    let b = destroy(n_max_b);
    let bq = &b * cq;
    let bmq = &b * cmq;
    let bqd = bq.adjoint();
    let bmqd = bmq.adjoint();
    let eye_b = CMatrix::identity(n_max_b, n_max_b);
    let ep = phase(phi);
    let em = phase(-phi);

    // Operator multiplying `a` in the cavity-assisted cubic terms.
    let mut t = (&bmq * ep + &bq * em) * (beta_c * beta_c * pair);
    t += (&bqd * ep + &bmqd * em) * c(2.0 * beta.norm_sqr());
    t += &bqd * &bqd * &bq * ep + &bmqd * &bmqd * &bmq * em;
    let plus = &bqd * &bmqd * &bmq * c(2.0)
        + &bmqd * &bmqd * &bq * c(quarter)
        + &bmqd * &bq * (beta_c * 2.0 * tp)
        + &bmqd * &bmqd * (beta * tm)
        + &bq * (beta_c * beta_c * ph);
    let minus = &bqd * &bmqd * &bq * c(2.0)
        + &bqd * &bqd * &bmq * c(quarter)
        + &bqd * &bmq * (beta_c * 2.0 * tm)
        + &bqd * &bqd * (beta * tp)
        + &bmq * (beta_c * beta_c * mh);
    t += (plus * ep + minus * em) * c(nk);
    let t = t * c(-params.g / (4.0 * sqrt_n));

    // Laser-assisted cubic terms, acting on b only.
    let mut l = &bqd * &bq * (beta_c * 2.0);
    l += &bmqd * &bmq * (beta_c * 2.0 * nk);
    l += &bqd * &bmqd * (beta * pair * (1.0 + nk));
    l += (&bqd * &bqd * &bmq * c(tp)
        + &bmqd * &bmqd * &bq * c(tm)
        + &bqd * &bqd * (beta * ph)
        + &bmqd * &bmqd * (beta * mh))
        * c(nk);
    let l = l * (C64::new(0.0, -params.omega_rabi / (2.0 * sqrt_n)) * phase(-params.phi_l));

    let a = destroy(n_max_a);
    let eye_a = CMatrix::identity(n_max_a, n_max_a);
    let coupling = (&bqd * ep + &bmqd * em) * c(params.g * sqrt_n / 2.0);
    let quad = (a.adjoint() * &a).kronecker(&eye_b) * c(params.delta_c)
        + eye_a.kronecker(&(b.adjoint() * &b)) * c(params.omega_z);
    let mixed = a.kronecker(&(coupling + t)) + eye_a.kronecker(&l);
    let h = quad + &mixed + mixed.adjoint();
    HamiltonianMatrix::new(h, space)
}

/// Two-mode master equation with collapse operators √(2κ)a and √γ b.
pub fn two_mode_model(
    params: &SystemParams,
    basis: &PolaritonBasis,
    report: &PhaseMatchReport,
    n_max_a: usize,
    n_max_b: usize,
) -> Result<LindbladModel> {
    let h = build_two_mode_hamiltonian(params, basis, report, n_max_a, n_max_b)?;
    let a = h.space.annihilation(0)?;
    let b = h.space.annihilation(1)?;
    LindbladModel::new(h, vec![CollapseOp::new(a, 2.0 * params.kappa), CollapseOp::new(b, params.gamma)])
}
