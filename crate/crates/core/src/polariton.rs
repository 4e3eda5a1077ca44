//! Normal modes of the quadratic cavity/spin-wave Hamiltonian.
//!
//! Frequencies live in the frame rotating at the laser frequency ω_p and
//! are measured in units of the cavity linewidth κ: ω_z = ω₀ − ω_p and
//! δ_c = ω_c − ω_p.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryConfig, PhaseMatchReport};
use crate::{Error, Result, C64};

/// Ratio Ω√N/|ω_z| above which the mean-field drive amplitude is flagged.
pub const PERTURBATIVE_LIMIT: f64 = 0.3;
/// κ₁ must stay below δω divided by this factor for the polariton picture.
pub const STRONG_COUPLING_FACTOR: f64 = 10.0;

/// Physical inputs, in units of κ.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub n_atoms: usize,
    pub g: f64,
    pub omega_rabi: f64,
    pub omega_z: f64,
    pub delta_c: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub phi: f64,
    pub phi_l: f64,
    pub geometry: GeometryConfig,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::InvalidArgument("n_atoms must be at least 1".into()));
        }
        if self.geometry.n_atoms != self.n_atoms {
            return Err(Error::InvalidArgument(format!(
                "geometry has {} atoms but the system has {}",
                self.geometry.n_atoms, self.n_atoms
            )));
        }
        for (name, v) in [
            ("g", self.g),
            ("omega_rabi", self.omega_rabi),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("omega_z", self.omega_z),
            ("delta_c", self.delta_c),
            ("phi", self.phi),
            ("phi_l", self.phi_l),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")));
            }
        }
        self.geometry.validate()
    }

    pub fn sqrt_n(&self) -> f64 {
        (self.n_atoms as f64).sqrt()
    }

    /// Ω√N/|ω_z|, the small parameter of the low-saturation expansion.
    pub fn drive_ratio(&self) -> f64 {
        self.omega_rabi * self.sqrt_n() / self.omega_z.abs()
    }
}

/// Diagonal form of the quadratic Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolaritonBasis {
    /// Lower polariton frequency in the rotating frame.
    pub omega1: f64,
    /// Upper polariton frequency in the rotating frame.
    pub omega2: f64,
    /// δω = ω₂ − ω₁.
    pub delta_omega: f64,
    pub mixing_x: f64,
    pub g_tilde: f64,
    pub kappa: f64,
    pub kappa1: f64,
    pub s_tilde: f64,
    pub c_tilde: f64,
    /// κ₁ < δω/10.
    pub strong_coupling: bool,
    /// g̃√N = 0 and ω_z = ω₁: the mixing angle was set to 0 by convention.
    pub degenerate: bool,
}

/// Effective linewidth of γ₁ with the strong-coupling check κ₁ < δω/10.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linewidth {
    pub kappa1: f64,
    pub strong_coupling: bool,
}

/// g̃ = g·cosφ when Q sits at the zone centre or edge, g/√2 otherwise.
pub fn coupling_g_tilde(params: &SystemParams, report: &PhaseMatchReport) -> f64 {
    if report.selectors.k_half {
        params.g * params.phi.cos()
    } else {
        params.g / std::f64::consts::SQRT_2
    }
}

/// Diagonalizes the 2×2 quadratic form [[δ_c, g̃√N], [g̃√N, ω_z]].
pub fn diagonalize(params: &SystemParams, g_tilde: f64) -> Result<PolaritonBasis> {
    if !g_tilde.is_finite() {
        return Err(Error::InvalidArgument(format!("g_tilde must be finite, got {g_tilde}")));
    }
    // g̃ = g cosφ can be negative; flipping the sign of the spin-wave
    // operator maps it to |g̃| without changing any observable.
    let g_tilde = g_tilde.abs();
    let coupling = g_tilde * params.sqrt_n();
    let detuning = params.omega_z - params.delta_c;
    let delta_omega = detuning.hypot(2.0 * coupling);
    let sum = params.delta_c + params.omega_z;
    let omega1 = 0.5 * (sum - delta_omega);
    let omega2 = 0.5 * (sum + delta_omega);
    // ω_z − ω₁ written without cancellation.
    let denom = 0.5 * (delta_omega + detuning);

    let mut degenerate = false;
    let mixing_x = if coupling == 0.0 {
        if denom == 0.0 {
            degenerate = true;
            log::warn!("degenerate polariton basis (g̃√N = 0 and ω_z = ω₁); mixing angle set to 0");
        }
        0.0
    } else {
        // denom > 0 whenever coupling > 0.
        (coupling / denom).atan().min(FRAC_PI_2.next_down())
    };
    let s_tilde = mixing_x.sin();
    let c_tilde = mixing_x.cos();
    let lw = effective_linewidth(params, mixing_x, delta_omega);
    Ok(PolaritonBasis {
        omega1,
        omega2,
        delta_omega,
        mixing_x,
        g_tilde,
        kappa: params.kappa,
        kappa1: lw.kappa1,
        s_tilde,
        c_tilde,
        strong_coupling: lw.strong_coupling,
        degenerate,
    })
}

/// Classifies the geometry, picks g̃ and diagonalizes.
pub fn polariton_basis(params: &SystemParams) -> Result<(PhaseMatchReport, PolaritonBasis)> {
    params.validate()?;
    let report = crate::geometry::classify(&params.geometry)?;
    let basis = diagonalize(params, coupling_g_tilde(params, &report))?;
    Ok((report, basis))
}

/// κ₁ = κcos²X + (γ/2)sin²X. `delta_omega` is the polariton splitting used
/// for the κ₁ ≪ δω check.
pub fn effective_linewidth(params: &SystemParams, x: f64, delta_omega: f64) -> Linewidth {
    let (s, c) = x.sin_cos();
    let kappa1 = params.kappa * c * c + 0.5 * params.gamma * s * s;
    let strong_coupling = kappa1 < delta_omega / STRONG_COUPLING_FACTOR;
    Linewidth { kappa1, strong_coupling }
}

/// Mean-field amplitude of the laser-driven spin wave, −i(Ω√N/ω_z)e^{−iφ_L}.
pub fn driven_mode_amplitude(params: &SystemParams) -> Result<C64> {
    if params.omega_z == 0.0 {
        return Err(Error::ResonantDetuning);
    }
    let ratio = params.omega_rabi * params.sqrt_n() / params.omega_z;
    if ratio.abs() > PERTURBATIVE_LIMIT {
        log::warn!(
            "drive ratio Ω√N/|ω_z| = {:.3} exceeds {PERTURBATIVE_LIMIT}; low-saturation expansion is questionable",
            ratio.abs()
        );
    }
    Ok(C64::new(0.0, -ratio) * C64::from_polar(1.0, -params.phi_l))
}

/// δ_c that realizes mixing angle `x` for given ω_z and g̃√N, from
/// ω₁ = ω_z − g̃√N/tanX and δ_c = ω₁ + g̃√N·tanX.
pub fn delta_c_for_mixing_angle(omega_z: f64, coupling: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < FRAC_PI_2) || coupling <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < X < pi/2 and g̃√N > 0, got X = {x}, g̃√N = {coupling}"
        )));
    }
    let t = x.tan();
    Ok(omega_z - coupling / t + coupling * t)
}
