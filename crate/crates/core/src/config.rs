//! Experiment configuration files.
//!
//! All frequencies and rates are in units of the cavity linewidth κ.
//!
//! ```toml
//! [system]            # required: g, omega_rabi, omega_z, delta_c
//! n_atoms = 2
//! g = 80.0
//! omega_rabi = 30.0
//! omega_z = 137.0
//! delta_c = 67.0
//! kappa = 1.0         # default 1
//! gamma = 0.1         # default 0.1
//! phi = 0.0
//! phi_l = 0.0
//!
//! [geometry]
//! d_over_lambda = "1"   # number, decimal string or "p/q"
//! theta = "pi/3"        # "pi/3", "60deg" or radians
//!
//! [task]
//! kind = "g2scan"
//! omega_p = { start = -10.0, stop = 10.0, count = 81 }
//!
//! [numerics]
//! n_max = 20
//!
//! [output]
//! path = "fig4.csv"
//! format = "csv"
//! ```
//!
//! Unknown keys are rejected. Parse errors carry the line and column.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::SteadyMethod;
use crate::geometry::{Angle, GeometryConfig, Real};
use crate::polariton::SystemParams;
use crate::{Error, Result};

pub const DEFAULT_KAPPA: f64 = 1.0;
pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_N_ATOMS: usize = 2;
pub const DEFAULT_N_MAX: usize = 20;
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classify,
    Basis,
    Coeffs,
    Spectrum,
    G2scan,
    Variance,
    Evolve,
    Regime,
    Oracle,
    Sweep,
}

impl TaskKind {
    pub const ALL: [TaskKind; 10] = [
        TaskKind::Classify,
        TaskKind::Basis,
        TaskKind::Coeffs,
        TaskKind::Spectrum,
        TaskKind::G2scan,
        TaskKind::Variance,
        TaskKind::Evolve,
        TaskKind::Regime,
        TaskKind::Oracle,
        TaskKind::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Classify => "classify",
            TaskKind::Basis => "basis",
            TaskKind::Coeffs => "coeffs",
            TaskKind::Spectrum => "spectrum",
            TaskKind::G2scan => "g2scan",
            TaskKind::Variance => "variance",
            TaskKind::Evolve => "evolve",
            TaskKind::Regime => "regime",
            TaskKind::Oracle => "oracle",
            TaskKind::Sweep => "sweep",
        }
    }

    /// Tasks that produce one row per parameter point and can run inside a
    /// sweep.
    pub fn is_pointwise(self) -> bool {
        !matches!(self, TaskKind::Spectrum | TaskKind::Evolve | TaskKind::Sweep)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown task `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SingleMode,
    TwoMode,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaCChoice {
    /// Use `system.delta_c` as given.
    #[default]
    Given,
    /// Replace it by the root of δω₁(δ_c) = 0 closest to zero.
    ZeroShift,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format `{s}` (csv or json)"))),
        }
    }
}

/// Uniform grid start..=stop with `count` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| if k + 1 == self.count { self.stop } else { self.start + step * k as f64 })
            .collect()
    }

    fn validate(&self, key: &str) -> Result<()> {
        if self.count < 2 {
            return Err(Error::Config(format!("{key}.count must be at least 2, got {}", self.count)));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Error::Config(format!("{key} needs finite start < stop")));
        }
        Ok(())
    }
}

/// `SystemParams` fields a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    NAtoms,
    G,
    OmegaRabi,
    OmegaZ,
    DeltaC,
    Kappa,
    Gamma,
    Phi,
    PhiL,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::NAtoms => "n_atoms",
            SweepParameter::G => "g",
            SweepParameter::OmegaRabi => "omega_rabi",
            SweepParameter::OmegaZ => "omega_z",
            SweepParameter::DeltaC => "delta_c",
            SweepParameter::Kappa => "kappa",
            SweepParameter::Gamma => "gamma",
            SweepParameter::Phi => "phi",
            SweepParameter::PhiL => "phi_l",
        }
    }

    /// Copy of `params` with this field set to `value`.
    pub fn apply(self, params: &SystemParams, value: f64) -> Result<SystemParams> {
        let mut p = params.clone();
        match self {
            SweepParameter::NAtoms => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(format!("n_atoms sweep point {value} is not a positive integer")));
                }
                p.n_atoms = value as usize;
                p.geometry.n_atoms = p.n_atoms;
            }
            SweepParameter::G => p.g = value,
            SweepParameter::OmegaRabi => p.omega_rabi = value,
            SweepParameter::OmegaZ => p.omega_z = value,
            SweepParameter::DeltaC => p.delta_c = value,
            SweepParameter::Kappa => p.kappa = value,
            SweepParameter::Gamma => p.gamma = value,
            SweepParameter::Phi => p.phi = value,
            SweepParameter::PhiL => p.phi_l = value,
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn grid(&self) -> Grid {
        Grid { start: self.start, stop: self.stop, count: self.count }
    }
}

/// g2scan relation ω_z = ω_atom − ω_p, δ_c = ω_cavity − ω_p; the difference
/// ω_z − δ_c stays fixed along the scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserScan {
    pub omega_p: Grid,
    /// ω₀ on the scan's frequency axis.
    pub atom_frequency: f64,
    /// ω_c on the scan's frequency axis.
    pub cavity_frequency: f64,
}

impl LaserScan {
    pub fn params_at(&self, base: &SystemParams, omega_p: f64) -> SystemParams {
        SystemParams {
            omega_z: self.atom_frequency - omega_p,
            delta_c: self.cavity_frequency - omega_p,
            ..base.clone()
        }
    }

    /// Human-readable form of the resolved relation.
    pub fn relation(&self) -> String {
        format!(
            "omega_z = {} - omega_p, delta_c = {} - omega_p (omega_z - delta_c = {})",
            self.atom_frequency,
            self.cavity_frequency,
            self.atom_frequency - self.cavity_frequency
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskConfig {
    pub kind: TaskKind,
    /// Task evaluated at each point of a sweep.
    pub inner: Option<TaskKind>,
    pub axis: Option<SweepAxis>,
    pub scan: Option<LaserScan>,
    pub delta_c: DeltaCChoice,
    /// Apply ω_z → (ω_z² + γ²/4)/ω_z before computing coefficients.
    pub resonant: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    /// Single-polariton Fock truncation.
    pub n_max: usize,
    pub n_max_a: usize,
    pub n_max_b: usize,
    /// Cavity truncation of the exact few-atom model.
    pub n_c: usize,
    /// Per-mode truncation of the effective model in oracle comparisons.
    pub n_max_eff: usize,
    /// Integrator tolerance, in [1e-12, 1e-4].
    pub tol: f64,
    pub steady_method: SteadyMethod,
    pub tau_max: Option<f64>,
    pub tau_points: usize,
    pub omega_grid: Grid,
    /// Quadrature angle; the minimum-variance angle when absent.
    pub theta: Option<Angle>,
    pub t_final: f64,
    pub time_points: usize,
    /// Model used by spectrum, variance and g2 tasks; the two-mode model
    /// for g2scan and the single-polariton model otherwise when absent.
    pub model: Option<ModelKind>,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            n_max_a: 10,
            n_max_b: 10,
            n_c: 8,
            n_max_eff: 8,
            tol: DEFAULT_TOL,
            steady_method: SteadyMethod::Auto,
            tau_max: None,
            tau_points: 2048,
            omega_grid: Grid { start: -10.0, stop: 10.0, count: 201 },
            theta: None,
            t_final: 5.0,
            time_points: 21,
            model: None,
        }
    }
}

impl Numerics {
    pub fn model_for(&self, task: TaskKind) -> ModelKind {
        self.model.unwrap_or(if task == TaskKind::G2scan { ModelKind::TwoMode } else { ModelKind::SingleMode })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputConfig {
    /// Standard output when absent.
    pub path: Option<PathBuf>,
    /// CSV for tabular tasks and JSON for single records when absent.
    pub format: Option<OutputFormat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub task: TaskConfig,
    pub numerics: Numerics,
    pub output: OutputConfig,
}

// Raw file layout. Everything optional here gets its default in `resolve`.

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geometry: Option<RawGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    task: Option<RawTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    numerics: Option<RawNumerics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_atoms: Option<usize>,
    g: f64,
    omega_rabi: f64,
    omega_z: f64,
    delta_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_l: Option<f64>,
}

/// A number or a string, for values with exact textual forms.
#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum Textual {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Textual {
    fn text(&self) -> String {
        match self {
            Textual::Int(i) => i.to_string(),
            Textual::Float(x) => x.to_string(),
            Textual::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(skip_serializing_if = "Option::is_none")]
    d_over_lambda: Option<Textual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<Textual>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<TaskKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inner: Option<TaskKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<SweepAxis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_p: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    atom_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cavity_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_c: Option<DeltaCChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resonant: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max_a: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max_b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_c: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max_eff: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steady_method: Option<SteadyMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_grid: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<Textual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<ModelKind>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<OutputFormat>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let msg = e.message().trim().to_string();
    match e.span() {
        Some(span) => {
            let (line, col) = line_col(text, span.start);
            Error::Config(format!("config error at line {line}, column {col}: {msg}"))
        }
        None => Error::Config(format!("config error: {msg}")),
    }
}

/// Parses and validates a configuration; the task must be named in
/// `[task] kind`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_for(text, None)
}

/// As [`parse_config`], with the task supplied by the caller (e.g. the CLI
/// subcommand). A different `[task] kind` in the file is overridden.
pub fn parse_config_for(text: &str, task: Option<TaskKind>) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    resolve(raw, task)
}

fn resolve(raw: RawConfig, task_override: Option<TaskKind>) -> Result<ExperimentConfig> {
    let s = raw.system;
    let n_atoms = s.n_atoms.unwrap_or(DEFAULT_N_ATOMS);
    let geo = raw.geometry.unwrap_or(RawGeometry { d_over_lambda: None, theta: None });
    let d_over_lambda: Real = match geo.d_over_lambda {
        Some(v) => v.text().parse().map_err(|e| Error::Config(format!("geometry.d_over_lambda: {e}")))?,
        None => Real::int(1),
    };
    let theta: Angle = match geo.theta {
        Some(v) => v.text().parse().map_err(|e| Error::Config(format!("geometry.theta: {e}")))?,
        None => Angle::pi_fraction(1, 3),
    };
    let geometry = GeometryConfig::new(d_over_lambda, theta, n_atoms).map_err(|e| Error::Config(format!("geometry: {e}")))?;
    let params = SystemParams {
        n_atoms,
        g: s.g,
        omega_rabi: s.omega_rabi,
        omega_z: s.omega_z,
        delta_c: s.delta_c,
        kappa: s.kappa.unwrap_or(DEFAULT_KAPPA),
        gamma: s.gamma.unwrap_or(DEFAULT_GAMMA),
        phi: s.phi.unwrap_or(0.0),
        phi_l: s.phi_l.unwrap_or(0.0),
        geometry,
    };
    params.validate().map_err(|e| Error::Config(format!("system: {e}")))?;

    let rt = raw.task.unwrap_or(RawTask {
        kind: None,
        inner: None,
        axis: None,
        omega_p: None,
        atom_frequency: None,
        cavity_frequency: None,
        delta_c: None,
        resonant: None,
    });
    let kind = match (task_override, rt.kind) {
        (Some(t), Some(k)) if t != k => {
            log::warn!("command-line task `{t}` overrides `{k}` from the config");
            t
        }
        (Some(t), _) => t,
        (None, Some(k)) => k,
        (None, None) => return Err(Error::Config("missing required key `kind` in [task]".into())),
    };
    let scan = match rt.omega_p {
        Some(grid) => {
            grid.validate("task.omega_p")?;
            Some(LaserScan {
                omega_p: grid,
                atom_frequency: rt.atom_frequency.unwrap_or(params.omega_z),
                cavity_frequency: rt.cavity_frequency.unwrap_or(params.delta_c),
            })
        }
        None => {
            if rt.atom_frequency.is_some() || rt.cavity_frequency.is_some() {
                return Err(Error::Config("task.atom_frequency/cavity_frequency need task.omega_p".into()));
            }
            None
        }
    };
    if kind == TaskKind::G2scan && scan.is_none() {
        return Err(Error::Config("g2scan needs task.omega_p = { start, stop, count }".into()));
    }
    if let Some(axis) = &rt.axis {
        axis.grid().validate("task.axis")?;
        if axis.parameter == SweepParameter::NAtoms {
            for v in axis.grid().points() {
                SweepParameter::NAtoms.apply(&params, v)?;
            }
        }
    }
    if kind == TaskKind::Sweep {
        if rt.axis.is_none() {
            return Err(Error::Config("sweep needs task.axis = { parameter, start, stop, count }".into()));
        }
        match rt.inner {
            None => return Err(Error::Config("sweep needs task.inner (the task run at each point)".into())),
            Some(inner) if !inner.is_pointwise() => {
                return Err(Error::Config(format!("task `{inner}` cannot run inside a sweep")));
            }
            _ => {}
        }
    }
    let task = TaskConfig {
        kind,
        inner: rt.inner,
        axis: rt.axis,
        scan,
        delta_c: rt.delta_c.unwrap_or_default(),
        resonant: rt.resonant.unwrap_or(false),
    };

    let rn = raw.numerics.unwrap_or_default();
    let d = Numerics::default();
    let theta = match rn.theta {
        Some(v) => Some(v.text().parse().map_err(|e| Error::Config(format!("numerics.theta: {e}")))?),
        None => None,
    };
    let numerics = Numerics {
        n_max: rn.n_max.unwrap_or(d.n_max),
        n_max_a: rn.n_max_a.unwrap_or(d.n_max_a),
        n_max_b: rn.n_max_b.unwrap_or(d.n_max_b),
        n_c: rn.n_c.unwrap_or(d.n_c),
        n_max_eff: rn.n_max_eff.unwrap_or(d.n_max_eff),
        tol: rn.tol.unwrap_or(d.tol),
        steady_method: rn.steady_method.unwrap_or(d.steady_method),
        tau_max: rn.tau_max,
        tau_points: rn.tau_points.unwrap_or(d.tau_points),
        omega_grid: rn.omega_grid.unwrap_or(d.omega_grid),
        theta,
        t_final: rn.t_final.unwrap_or(d.t_final),
        time_points: rn.time_points.unwrap_or(d.time_points),
        model: rn.model,
    };
    validate_numerics(&numerics)?;

    let ro = raw.output.unwrap_or_default();
    Ok(ExperimentConfig { params, task, numerics, output: OutputConfig { path: ro.path, format: ro.format } })
}

fn validate_numerics(n: &Numerics) -> Result<()> {
    for (key, v, min) in [
        ("n_max", n.n_max, 2),
        ("n_max_a", n.n_max_a, 2),
        ("n_max_b", n.n_max_b, 2),
        ("n_c", n.n_c, 4),
        ("n_max_eff", n.n_max_eff, 2),
        ("tau_points", n.tau_points, 3),
        ("time_points", n.time_points, 2),
    ] {
        if v < min {
            return Err(Error::Config(format!("numerics.{key} must be at least {min}, got {v}")));
        }
    }
    if !(1e-12..=1e-4).contains(&n.tol) {
        return Err(Error::Config(format!("numerics.tol must lie in [1e-12, 1e-4], got {}", n.tol)));
    }
    if let Some(t) = n.tau_max {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Config(format!("numerics.tau_max must be positive, got {t}")));
        }
    }
    if !(n.t_final.is_finite() && n.t_final > 0.0) {
        return Err(Error::Config(format!("numerics.t_final must be positive, got {}", n.t_final)));
    }
    n.omega_grid.validate("numerics.omega_grid")
}

impl ExperimentConfig {
    /// Fully explicit TOML that parses back to an identical config.
    pub fn to_toml(&self) -> Result<String> {
        let p = &self.params;
        let n = &self.numerics;
        let raw = RawConfig {
            system: RawSystem {
                n_atoms: Some(p.n_atoms),
                g: p.g,
                omega_rabi: p.omega_rabi,
                omega_z: p.omega_z,
                delta_c: p.delta_c,
                kappa: Some(p.kappa),
                gamma: Some(p.gamma),
                phi: Some(p.phi),
                phi_l: Some(p.phi_l),
            },
            geometry: Some(RawGeometry {
                d_over_lambda: Some(Textual::Text(p.geometry.d_over_lambda.to_string())),
                theta: Some(Textual::Text(p.geometry.theta.to_string())),
            }),
            task: Some(RawTask {
                kind: Some(self.task.kind),
                inner: self.task.inner,
                axis: self.task.axis,
                omega_p: self.task.scan.map(|s| s.omega_p),
                atom_frequency: self.task.scan.map(|s| s.atom_frequency),
                cavity_frequency: self.task.scan.map(|s| s.cavity_frequency),
                delta_c: Some(self.task.delta_c),
                resonant: Some(self.task.resonant),
            }),
            numerics: Some(RawNumerics {
                n_max: Some(n.n_max),
                n_max_a: Some(n.n_max_a),
                n_max_b: Some(n.n_max_b),
                n_c: Some(n.n_c),
                n_max_eff: Some(n.n_max_eff),
                tol: Some(n.tol),
                steady_method: Some(n.steady_method),
                tau_max: n.tau_max,
                tau_points: Some(n.tau_points),
                omega_grid: Some(n.omega_grid),
                theta: n.theta.map(|t| Textual::Text(t.to_string())),
                t_final: Some(n.t_final),
                time_points: Some(n.time_points),
                model: n.model,
            }),
            output: Some(RawOutput { path: self.output.path.clone(), format: self.output.format }),
        };
        toml::to_string(&raw).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "[system]\ng = 4\nomega_rabi = 200\nomega_z = 1000\ndelta_c = 0.5\n\n[task]\nkind = \"coeffs\"\n";

    const FIG4: &str = r#"
[system]
n_atoms = 2
g = 80
omega_rabi = 30
omega_z = 137
delta_c = 67

[geometry]
d_over_lambda = 1
theta = "pi/3"

[task]
kind = "g2scan"
omega_p = { start = -15.0, stop = 15.0, count = 61 }

[numerics]
n_max_a = 10
n_max_b = 10
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.params.kappa, 1.0);
        assert_eq!(c.params.gamma, 0.1);
        assert_eq!(c.params.n_atoms, DEFAULT_N_ATOMS);
        assert_eq!(c.numerics.n_max, 20);
        assert_eq!(c.numerics.tol, 1e-9);
        assert_eq!(c.task.kind, TaskKind::Coeffs);
        assert_eq!(c.params.geometry.d_over_lambda, Real::int(1));
        assert_eq!(c.output, OutputConfig::default());
    }

    #[test]
    fn unknown_key_is_located() {
        let text = MINIMAL.replace("omega_z = 1000", "omega_x = 1000");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("omega_x"), "{err}");
        assert!(err.contains("line 4, column 1"), "{err}");
    }

    #[test]
    fn type_mismatch_and_missing_key() {
        let err = parse_config(&MINIMAL.replace("g = 4", "g = \"four\"")).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = parse_config(&MINIMAL.replace("g = 4\n", "")).unwrap_err().to_string();
        assert!(err.contains("missing field `g`"), "{err}");
        assert!(parse_config("[system]\ng = 1\nomega_rabi = 1\nomega_z = 1\ndelta_c = 1\n").is_err());
    }

    #[test]
    fn fig4_scan_resolves_detunings() {
        let c = parse_config(FIG4).unwrap();
        let scan = c.task.scan.unwrap();
        let at = scan.params_at(&c.params, 0.0);
        assert_eq!((at.omega_z, at.delta_c), (137.0, 67.0));
        let shifted = scan.params_at(&c.params, 5.0);
        assert_eq!(shifted.omega_z - shifted.delta_c, 70.0);
        assert_eq!(shifted.omega_z, 132.0);
        assert!(scan.relation().contains("omega_z = 137 - omega_p"));
        assert_eq!(c.numerics.model_for(TaskKind::G2scan), ModelKind::TwoMode);
    }

    #[test]
    fn sweep_validation() {
        let ok = format!("{MINIMAL}inner = \"coeffs\"\naxis = {{ parameter = \"omega_rabi\", start = 100, stop = 200, count = 2 }}\n")
            .replace("kind = \"coeffs\"", "kind = \"sweep\"");
        let c = parse_config(&ok).unwrap();
        assert_eq!(c.task.axis.unwrap().parameter, SweepParameter::OmegaRabi);
        assert!(parse_config(&ok.replace("count = 2", "count = 1")).is_err());
        assert!(parse_config(&ok.replace("omega_rabi\"", "omega_q\"")).is_err());
        assert!(parse_config(&ok.replace("inner = \"coeffs\"", "inner = \"spectrum\"")).is_err());
    }

    #[test]
    fn command_line_task_wins() {
        let c = parse_config_for(MINIMAL, Some(TaskKind::Regime)).unwrap();
        assert_eq!(c.task.kind, TaskKind::Regime);
        let no_task = "[system]\ng = 1\nomega_rabi = 1\nomega_z = 1\ndelta_c = 1\n";
        assert_eq!(parse_config_for(no_task, Some(TaskKind::Basis)).unwrap().task.kind, TaskKind::Basis);
    }

    #[test]
    fn numerics_ranges() {
        assert!(parse_config(&format!("{MINIMAL}\n[numerics]\ntol = 1e-3\n")).is_err());
        assert!(parse_config(&format!("{MINIMAL}\n[numerics]\nn_max = 1\n")).is_err());
        let c = parse_config(&format!("{MINIMAL}\n[numerics]\ntheta = \"3pi/4\"\n")).unwrap();
        assert_eq!(c.numerics.theta, Some(Angle::pi_fraction(3, 4)));
    }

    #[test]
    fn fig4_round_trip() {
        let c = parse_config(FIG4).unwrap();
        assert_eq!(parse_config(&c.to_toml().unwrap()).unwrap(), c);
    }

    proptest! {
        #[test]
        fn round_trip(g in 0.0f64..100.0, om in 0.0f64..300.0, wz in -1e3f64..1e3, dc in -1e3f64..1e3,
                      n in 1usize..200, p in 1i64..7, q in 1i64..7, tol in 1e-12f64..1e-4, tau in proptest::option::of(1.0f64..100.0)) {
            let text = format!(
                "[system]\nn_atoms = {n}\ng = {g}\nomega_rabi = {om}\nomega_z = {wz}\ndelta_c = {dc}\n\
                 [geometry]\nd_over_lambda = \"{p}/{q}\"\ntheta = \"{p}pi/{}\"\n[task]\nkind = \"spectrum\"\n\
                 [numerics]\ntol = {tol:e}\n{}",
                p + q,
                tau.map(|t| format!("tau_max = {t}\n")).unwrap_or_default()
            );
            let c = parse_config(&text).unwrap();
            let again = parse_config(&c.to_toml().unwrap()).unwrap();
            prop_assert_eq!(again, c);
        }
    }
}
