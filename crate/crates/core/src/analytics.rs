//! Closed forms of the linearized (degenerate parametric amplifier) regime,
//! H = (α/2)(γ₁†² + γ₁²) with damping κ₁, and regime classification.

use serde::{Deserialize, Serialize};

use crate::effective::EffectiveCoefficients;
use crate::observables::{SpectrumMethod, SpectrumResult};
use crate::{Error, Result};

/// |α − κ₁| below this fraction of κ₁ is treated as the threshold itself.
pub const THRESHOLD_WINDOW: f64 = 1e-9;

fn check_rates(alpha_abs: f64, kappa1: f64) -> Result<()> {
    if !(alpha_abs.is_finite() && alpha_abs >= 0.0) {
        return Err(Error::InvalidArgument(format!("|alpha| must be finite and >= 0, got {alpha_abs}")));
    }
    if !(kappa1.is_finite() && kappa1 > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa1 must be finite and > 0, got {kappa1}")));
    }
    Ok(())
}

/// ⟨γ₁†γ₁⟩ at time t starting from the vacuum.
///
/// Away from threshold this is
/// α²/(2D) + e^{−2κ₁t}sinh²(αt) + ½e^{−2κ₁t}[1 − κ₁(κ₁cosh2αt + α sinh2αt)/D]
/// with D = κ₁² − α². At |α| = κ₁ the first and last terms are separately
/// singular; their sum tends to κ₁t/2 − 1/8 + e^{−4κ₁t}/8, which is used
/// inside [`THRESHOLD_WINDOW`].
pub fn parametric_photon_number(alpha_abs: f64, kappa1: f64, t: f64) -> Result<f64> {
    check_rates(alpha_abs, kappa1)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    let (a, k) = (alpha_abs, kappa1);
    if (a - k).abs() <= THRESHOLD_WINDOW * k {
        return Ok(0.5 * k * t - 0.125 + 0.125 * (-4.0 * k * t).exp());
    }
    // Exponentials combined pairwise so nothing overflows below threshold.
    let grow = (2.0 * (a - k) * t).exp();
    let fall = (-2.0 * (a + k) * t).exp();
    let damp = (-2.0 * k * t).exp();
    let ch = 0.5 * (grow + fall);
    let sh = 0.5 * (grow - fall);
    let sinh2 = 0.25 * (grow - 2.0 * damp + fall);
    let d = k * k - a * a;
    // Grouped so that t = 0 gives (−d)/d + 1 = 0 exactly.
    let num = a * a - k * k * ch - k * a * sh;
    Ok(0.5 * (num / d + damp) + sinh2)
}

/// Stationary ⟨γ₁†γ₁⟩ = α²/(2(κ₁² − α²)) below threshold.
pub fn parametric_steady_photon_number(alpha_abs: f64, kappa1: f64) -> Result<f64> {
    check_rates(alpha_abs, kappa1)?;
    if alpha_abs >= kappa1 {
        return Err(Error::UnsupportedRegime("no stationary state at or above threshold".into()));
    }
    Ok(0.5 * alpha_abs * alpha_abs / (kappa1 * kappa1 - alpha_abs * alpha_abs))
}

/// Stationary variances (squeezed, anti-squeezed) of γ₁e^{−iθ} + h.c.:
/// κ₁/(κ₁ + |α|) and κ₁/(κ₁ − |α|).
pub fn parametric_variances(alpha_abs: f64, kappa1: f64) -> Result<(f64, f64)> {
    check_rates(alpha_abs, kappa1)?;
    if alpha_abs >= kappa1 {
        return Err(Error::UnsupportedRegime("no stationary state at or above threshold".into()));
    }
    Ok((kappa1 / (kappa1 + alpha_abs), kappa1 / (kappa1 - alpha_abs)))
}

/// Output squeezing spectrum 1 − 4κC̃²|α| / ((κ₁ + |α|)² + ω²).
///
/// With γ > 0 the prefactor carries κ while the width carries κ₁, so S(0)
/// stays above 0 at threshold unless C̃²κ = κ₁.
pub fn squeezing_spectrum_analytic(
    alpha_abs: f64,
    kappa: f64,
    kappa1: f64,
    c_tilde: f64,
    omega_grid: &[f64],
) -> Result<SpectrumResult> {
    check_rates(alpha_abs, kappa1)?;
    let depth = 4.0 * kappa * c_tilde * c_tilde * alpha_abs;
    let width2 = (kappa1 + alpha_abs).powi(2);
    let s_out = omega_grid.iter().map(|w| 1.0 - depth / (width2 + w * w)).collect();
    SpectrumResult::new(omega_grid.to_vec(), s_out, SpectrumMethod::Analytic)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    ParametricBelowThreshold,
    ParametricAboveThreshold,
    KerrDominated,
    /// α = χ = 0: nothing nonlinear left.
    LinearEmpty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// |α/χ|; null in JSON when χ = 0.
    pub epsilon: f64,
    pub regime: Regime,
    /// |α|/κ₁.
    pub threshold_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

/// Parametric when ε ≥ 1 (above threshold if |α| > κ₁), Kerr-dominated
/// when ε < 1.
pub fn classify_regime(coeffs: &EffectiveCoefficients, kappa1: f64) -> Result<RegimeReport> {
    let alpha = coeffs.alpha.norm();
    check_rates(alpha, kappa1)?;
    let threshold_ratio = alpha / kappa1;
    if alpha == 0.0 && coeffs.chi == 0.0 {
        return Ok(RegimeReport {
            epsilon: f64::NAN,
            regime: Regime::LinearEmpty,
            threshold_ratio,
            warning: Some("alpha = chi = 0: linear model, no squeezing or blockade".into()),
        });
    }
    let epsilon = if coeffs.chi == 0.0 { f64::INFINITY } else { alpha / coeffs.chi.abs() };
    let (regime, warning) = if epsilon < 1.0 {
        (Regime::KerrDominated, None)
    } else if alpha > kappa1 {
        (
            Regime::ParametricAboveThreshold,
            Some("above threshold: linearization invalid at long times".to_string()),
        )
    } else {
        (Regime::ParametricBelowThreshold, None)
    };
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(RegimeReport { epsilon, regime, threshold_ratio, warning })
}
