//! Exact simulation of up to three two-level atoms and the cavity mode,
//! without the Holstein–Primakoff expansion, as a check on the effective
//! models.
//!
//! Atom j sits at z_j = j·d (j = 1…N). Each atom is a 2-level factor with
//! basis (|1⟩, |2⟩) = (ground, excited), so S_j = |1⟩⟨2| has the matrix of a
//! two-level annihilation operator and S_j^z + ½ = S_j†S_j. The constant
//! −Nω_z/2 from S_j^z is dropped. Mode order is (cavity, atom 1, …, atom N).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::effective::two_mode_model;
use crate::engine::{steady_state, CollapseOp, DensityMatrix, FockSpace, HamiltonianMatrix, LindbladModel};
use crate::geometry::spin_wave_momenta;
use crate::observables::{g2_zero, mean_number, VACUUM_THRESHOLD};
use crate::polariton::{polariton_basis, SystemParams};
use crate::{CMatrix, Error, Result, C64};

pub const MAX_ATOMS: usize = 3;
pub const MIN_CAVITY_LEVELS: usize = 4;
/// Largest Ω√N/|ω_z| at which the effective model is compared.
pub const MAX_DRIVE_RATIO: f64 = 0.1;

/// Full model: cavity ⊗ N two-level atoms.
#[derive(Clone, Debug)]
pub struct FullModel {
    pub model: LindbladModel,
    pub n_atoms: usize,
    pub n_c: usize,
}

impl FullModel {
    pub fn space(&self) -> &FockSpace {
        self.model.space()
    }

    pub fn hamiltonian(&self) -> &HamiltonianMatrix {
        self.model.hamiltonian()
    }

    pub fn collapse_ops(&self) -> &[CollapseOp] {
        self.model.collapse_ops()
    }

    /// a†a + Σ_j (S_j^z + ½).
    pub fn excitation_number(&self) -> CMatrix {
        let s = self.space();
        let mut n = s.number(0).expect("cavity mode");
        for j in 1..=self.n_atoms {
            n += s.number(j).expect("atom mode");
        }
        n
    }

    /// ‖[H, N_exc]‖_F; zero without the laser.
    pub fn excitation_commutator_norm(&self) -> f64 {
        let h = &self.hamiltonian().matrix;
        let n = self.excitation_number();
        (h * &n - &n * h).norm()
    }
}

/// Builds the full Hamiltonian and the decay channels √(2κ)a and √γ S_j.
pub fn build_full_model(params: &SystemParams, n_c: usize) -> Result<FullModel> {
    params.validate()?;
    let n = params.n_atoms;
    if n > MAX_ATOMS {
        return Err(Error::InvalidArgument(format!("the exact model supports at most {MAX_ATOMS} atoms, got {n}")));
    }
    if n_c < MIN_CAVITY_LEVELS {
        return Err(Error::TruncationTooSmall(format!("cavity truncation {n_c} < {MIN_CAVITY_LEVELS}")));
    }
    let mut dims = vec![n_c];
    let mut labels = vec!["a".to_string()];
    for j in 1..=n {
        dims.push(2);
        labels.push(format!("atom{j}"));
    }
    let space = FockSpace::new(dims, labels)?;
    let a = space.annihilation(0)?;
    let ad = a.adjoint();
    let geo = &params.geometry;

    let mut h = &ad * &a * C64::new(params.delta_c, 0.0);
    let mut collapse = vec![CollapseOp::new(a.clone(), 2.0 * params.kappa)];
    for j in 1..=n {
        let s = space.annihilation(j)?;
        let sd = s.adjoint();
        h += &sd * &s * C64::new(params.omega_z, 0.0);
        let coupling = params.g * (TAU * geo.cavity_phase_fraction(j) + params.phi).cos();
        let jc = &sd * &a + &ad * &s;
        h += jc * C64::new(coupling, 0.0);
        let drive = C64::new(0.0, params.omega_rabi) * C64::from_polar(1.0, TAU * geo.laser_phase_fraction(j) - params.phi_l);
        let pump = &sd * drive;
        h += &pump + pump.adjoint();
        if params.gamma > 0.0 {
            collapse.push(CollapseOp::new(s, params.gamma));
        }
    }
    let ham = HamiltonianMatrix::new(h, space)?;
    Ok(FullModel { model: LindbladModel::new(ham, collapse)?, n_atoms: n, n_c })
}

/// Discrete transform b_q = N^{-1/2} Σ_j b_j e^{−iqjd}, rows indexed by the
/// N quasimomenta in ascending order, columns by j = 1…N.
pub fn fourier_matrix(n_atoms: usize) -> CMatrix {
    let qs = spin_wave_momenta(n_atoms);
    let norm = 1.0 / (n_atoms as f64).sqrt();
    CMatrix::from_fn(n_atoms, n_atoms, |r, c| {
        let q = *qs[r].numer() as f64 / *qs[r].denom() as f64;
        C64::from_polar(norm, -TAU * q * (c + 1) as f64)
    })
}

/// Largest deviation of [b_q, b_q′†] = Σ_j F_qj F*_q′j from δ_qq′.
pub fn fourier_unitarity_residual(n_atoms: usize) -> f64 {
    let f = fourier_matrix(n_atoms);
    let comm = &f * f.adjoint();
    (comm - CMatrix::identity(n_atoms, n_atoms)).iter().fold(0.0, |m, z| m.max(z.norm()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelObservables {
    pub mean_n_cavity: f64,
    /// Null when the cavity is in its vacuum.
    pub g2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub drive_ratio: f64,
    pub n_c: usize,
    pub n_max_eff: usize,
    pub full: ModelObservables,
    pub effective: ModelObservables,
    /// |n_eff − n_full|/n_full; 0 when both are vacuum.
    pub relative_deviation_n: f64,
    pub relative_deviation_g2: Option<f64>,
}

fn observe(rho: &DensityMatrix) -> Result<ModelObservables> {
    let mean_n_cavity = mean_number(rho, 0)?;
    let g2 = match g2_zero(rho, 0) {
        Ok(v) => Some(v),
        Err(Error::UndefinedCorrelation(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ModelObservables { mean_n_cavity, g2 })
}

fn relative(eff: f64, full: f64) -> f64 {
    if full.abs() <= VACUUM_THRESHOLD && eff.abs() <= VACUUM_THRESHOLD {
        0.0
    } else {
        (eff - full).abs() / full.abs()
    }
}

/// Steady-state ⟨a†a⟩ and g²(0) of the full model and of the two-mode
/// effective model (n_max_eff levels per mode).
pub fn compare_with_effective(params: &SystemParams, n_c: usize, n_max_eff: usize) -> Result<OracleComparison> {
    params.validate()?;
    let drive_ratio = params.drive_ratio();
    if !(drive_ratio <= MAX_DRIVE_RATIO) {
        return Err(Error::Perturbativity(format!(
            "drive ratio Ω√N/|ω_z| = {drive_ratio:.3} exceeds {MAX_DRIVE_RATIO}; the effective model is not expected to hold"
        )));
    }
    let full = build_full_model(params, n_c)?;
    let (report, basis) = polariton_basis(params)?;
    let eff = two_mode_model(params, &basis, &report, n_max_eff, n_max_eff)?;
    let full_obs = observe(&steady_state(&full.model)?)?;
    let eff_obs = observe(&steady_state(&eff)?)?;
    let relative_deviation_g2 = match (eff_obs.g2, full_obs.g2) {
        (Some(e), Some(f)) => Some(relative(e, f)),
        _ => None,
    };
    Ok(OracleComparison {
        drive_ratio,
        n_c,
        n_max_eff,
        relative_deviation_n: relative(eff_obs.mean_n_cavity, full_obs.mean_n_cavity),
        relative_deviation_g2,
        full: full_obs,
        effective: eff_obs,
    })
}
