//! Task execution, parameter sweeps and result serialization.
//!
//! Every task produces a [`Table`] with fixed columns:
//!
//! | task     | columns |
//! |----------|---------|
//! | classify | q_cavity, q_laser, q_cavity_exact, q_laser_exact, flags, approximate |
//! | basis    | omega1, omega2, delta_omega, mixing_x, g_tilde, kappa1, s_tilde, c_tilde, strong_coupling, degenerate |
//! | coeffs   | delta_omega1, alpha_re, alpha_im, chi, nu_re, nu_im, epsilon |
//! | regime   | epsilon, regime, threshold_ratio, warning |
//! | oracle   | drive_ratio, mean_n_full, g2_full, mean_n_effective, g2_effective, relative_deviation_n, relative_deviation_g2 |
//! | variance | theta, variance, variance_orthogonal |
//! | spectrum | omega, s_out |
//! | evolve   | t, mean_n, flux |
//! | g2scan   | omega_p, g2, mean_n_cavity, mean_n_spin |
//! | sweep    | the swept parameter, the inner task's columns, error |
//!
//! A sweep point that fails leaves its cells empty and records the message
//! in `error`; the remaining points still run. Points are independent and
//! may run concurrently, rows always come back in grid order, and numbers
//! are printed in Rust's shortest round-trip form, so identical configs
//! give identical bytes. JSON output mirrors the CSV table
//! (`columns` plus `rows` as arrays) and carries `schema_version`.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::analytics::classify_regime;
use crate::config::{DeltaCChoice, ExperimentConfig, ModelKind, OutputFormat, TaskKind};
use crate::effective::{
    choose_delta_c_for_zero_shift, compute_coefficients, compute_coefficients_resonant, single_mode_model,
    two_mode_model, EffectiveCoefficients,
};
use crate::engine::{
    evolve_trajectory, steady_state_adaptive, AdaptiveSteadyState, DensityMatrix, LindbladModel, SteadyOptions,
};
use crate::geometry::{classify, PhaseMatchReport};
use crate::observables::{
    g2_bound_holds, g2_zero, mean_number, output_flux, quadrature_variance_of, squeezed_angle,
    squeezing_spectrum_numeric_with_state, SpectrumOptions,
};
use crate::oracle::compare_with_effective;
use crate::parallel::Execution;
use crate::polariton::{polariton_basis, PolaritonBasis, SystemParams};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Null,
}

impl Cell {
    fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Null, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // Non-finite numbers become null.
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Null => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub task: TaskKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Context echoed into JSON output (resolved relations, warnings).
    pub notes: Vec<String>,
}

impl Table {
    fn new(task: TaskKind, columns: &[&str]) -> Self {
        Self { task, columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), notes: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].clone()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Config(format!("csv output: {e}"));
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv output: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv output: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "task": self.task.name(),
            "columns": self.columns,
            "rows": rows,
            "notes": self.notes,
        });
        let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(format!("json output: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

/// CSV for row-per-point tasks, JSON for single records.
pub fn default_format(task: TaskKind) -> OutputFormat {
    match task {
        TaskKind::Spectrum | TaskKind::G2scan | TaskKind::Evolve | TaskKind::Sweep => OutputFormat::Csv,
        _ => OutputFormat::Json,
    }
}

/// Writes `contents` to `path` through a temporary sibling file and a
/// rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Config(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}

fn columns(kind: TaskKind) -> &'static [&'static str] {
    match kind {
        TaskKind::Classify => &["q_cavity", "q_laser", "q_cavity_exact", "q_laser_exact", "flags", "approximate"],
        TaskKind::Basis => &[
            "omega1",
            "omega2",
            "delta_omega",
            "mixing_x",
            "g_tilde",
            "kappa1",
            "s_tilde",
            "c_tilde",
            "strong_coupling",
            "degenerate",
        ],
        TaskKind::Coeffs => &["delta_omega1", "alpha_re", "alpha_im", "chi", "nu_re", "nu_im", "epsilon"],
        TaskKind::Regime => &["epsilon", "regime", "threshold_ratio", "warning"],
        TaskKind::Oracle => &[
            "drive_ratio",
            "mean_n_full",
            "g2_full",
            "mean_n_effective",
            "g2_effective",
            "relative_deviation_n",
            "relative_deviation_g2",
        ],
        TaskKind::Variance => &["theta", "variance", "variance_orthogonal"],
        TaskKind::G2scan => &["g2", "mean_n_cavity", "mean_n_spin"],
        TaskKind::Spectrum => &["omega", "s_out"],
        TaskKind::Evolve => &["t", "mean_n", "flux"],
        TaskKind::Sweep => &["error"],
    }
}

/// Applies the configured δ_c choice.
pub fn resolve_params(config: &ExperimentConfig, params: &SystemParams) -> Result<SystemParams> {
    let mut p = params.clone();
    if config.task.delta_c == DeltaCChoice::ZeroShift {
        p.delta_c = choose_delta_c_for_zero_shift(&p)?;
    }
    Ok(p)
}

/// Geometry, basis and coefficients at one parameter point.
pub struct Prepared {
    pub params: SystemParams,
    pub report: PhaseMatchReport,
    pub basis: PolaritonBasis,
    pub coeffs: EffectiveCoefficients,
}

pub fn prepare(config: &ExperimentConfig, params: &SystemParams) -> Result<Prepared> {
    let params = resolve_params(config, params)?;
    let (report, basis) = polariton_basis(&params)?;
    let coeffs = if config.task.resonant {
        compute_coefficients_resonant(&params, &basis, &report)?
    } else {
        compute_coefficients(&params, &basis, &report)?
    };
    Ok(Prepared { params, report, basis, coeffs })
}

fn steady_options(config: &ExperimentConfig) -> SteadyOptions {
    SteadyOptions::with_method(config.numerics.steady_method)
}

/// Open-system model for tasks that need a steady state, with the
/// truncation grown until the top levels are empty.
pub fn solve_model(config: &ExperimentConfig, prep: &Prepared, kind: ModelKind) -> Result<(LindbladModel, AdaptiveSteadyState)> {
    let n = &config.numerics;
    let build = |dims: &[usize]| -> Result<LindbladModel> {
        match kind {
            ModelKind::SingleMode => single_mode_model(&prep.coeffs, &prep.basis, prep.params.phi_l, dims[0]),
            ModelKind::TwoMode => two_mode_model(&prep.params, &prep.basis, &prep.report, dims[0], dims[1]),
        }
    };
    let dims = match kind {
        ModelKind::SingleMode => vec![n.n_max],
        ModelKind::TwoMode => vec![n.n_max_a, n.n_max_b],
    };
    let state = steady_state_adaptive(build, dims, &steady_options(config))?;
    let model = build(&state.dims)?;
    Ok((model, state))
}

fn flag_names(report: &PhaseMatchReport) -> String {
    report
        .flags
        .iter()
        .map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default())
        .collect::<Vec<_>>()
        .join(";")
}

/// Cavity-side g²(0) and occupations of a steady state.
fn g2_cells(state: &DensityMatrix, basis: &PolaritonBasis, kind: ModelKind) -> Result<Vec<Cell>> {
    let (g2, n_cav, n_spin) = match kind {
        ModelKind::TwoMode => (g2_zero(state, 0), mean_number(state, 0)?, mean_number(state, 1)?),
        ModelKind::SingleMode => {
            // a ≈ C̃γ₁ and b ≈ S̃γ₁ with γ₂ in its vacuum.
            let n = mean_number(state, 0)?;
            let c2 = basis.c_tilde * basis.c_tilde;
            (g2_zero(state, 0), c2 * n, (1.0 - c2) * n)
        }
    };
    let g2 = match g2 {
        Ok(v) => {
            let n_mode = if kind == ModelKind::TwoMode { n_cav } else { mean_number(state, 0)? };
            if !g2_bound_holds(v, n_mode) {
                return Err(Error::Accuracy(format!("g2 = {v} violates g2 >= 1 - 1/<n> at <n> = {n_mode}")));
            }
            Some(v)
        }
        Err(Error::UndefinedCorrelation(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(vec![Cell::opt(g2), Cell::Num(n_cav), Cell::Num(n_spin)])
}

/// Cells of a single-row task at one parameter point.
pub fn point_row(config: &ExperimentConfig, kind: TaskKind, params: &SystemParams) -> Result<Vec<Cell>> {
    match kind {
        TaskKind::Classify => {
            let r = classify(&params.geometry)?;
            Ok(vec![
                Cell::Num(r.q_cavity),
                Cell::Num(r.q_laser),
                r.q_cavity_exact.clone().map_or(Cell::Null, Cell::Text),
                r.q_laser_exact.clone().map_or(Cell::Null, Cell::Text),
                Cell::Text(flag_names(&r)),
                Cell::Bool(r.approximate),
            ])
        }
        TaskKind::Basis => {
            let p = resolve_params(config, params)?;
            let (_, b) = polariton_basis(&p)?;
            Ok(vec![
                Cell::Num(b.omega1),
                Cell::Num(b.omega2),
                Cell::Num(b.delta_omega),
                Cell::Num(b.mixing_x),
                Cell::Num(b.g_tilde),
                Cell::Num(b.kappa1),
                Cell::Num(b.s_tilde),
                Cell::Num(b.c_tilde),
                Cell::Bool(b.strong_coupling),
                Cell::Bool(b.degenerate),
            ])
        }
        TaskKind::Coeffs => {
            let k = prepare(config, params)?.coeffs;
            Ok(vec![
                Cell::Num(k.delta_omega1),
                Cell::Num(k.alpha.re),
                Cell::Num(k.alpha.im),
                Cell::Num(k.chi),
                Cell::Num(k.nu.re),
                Cell::Num(k.nu.im),
                Cell::Num(k.epsilon),
            ])
        }
        TaskKind::Regime => {
            let prep = prepare(config, params)?;
            let r = classify_regime(&prep.coeffs, prep.basis.kappa1)?;
            let regime = serde_json::to_value(r.regime).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            Ok(vec![Cell::Num(r.epsilon), Cell::Text(regime), Cell::Num(r.threshold_ratio), r.warning.map_or(Cell::Null, Cell::Text)])
        }
        TaskKind::Oracle => {
            let p = resolve_params(config, params)?;
            let c = compare_with_effective(&p, config.numerics.n_c, config.numerics.n_max_eff)?;
            Ok(vec![
                Cell::Num(c.drive_ratio),
                Cell::Num(c.full.mean_n_cavity),
                Cell::opt(c.full.g2),
                Cell::Num(c.effective.mean_n_cavity),
                Cell::opt(c.effective.g2),
                Cell::Num(c.relative_deviation_n),
                Cell::opt(c.relative_deviation_g2),
            ])
        }
        TaskKind::Variance => {
            let prep = prepare(config, params)?;
            let kind = config.numerics.model_for(TaskKind::Variance);
            let (_, state) = solve_model(config, &prep, kind)?;
            let theta = config
                .numerics
                .theta
                .map(|t| t.radians())
                .unwrap_or_else(|| squeezed_angle(prep.coeffs.alpha, prep.params.phi_l));
            let rho = &state.report.rho;
            Ok(vec![
                Cell::Num(theta),
                Cell::Num(quadrature_variance_of(rho, 0, theta)?),
                Cell::Num(quadrature_variance_of(rho, 0, theta + FRAC_PI_2)?),
            ])
        }
        TaskKind::G2scan => {
            let prep = prepare(config, params)?;
            let kind = config.numerics.model_for(TaskKind::G2scan);
            let (_, state) = solve_model(config, &prep, kind)?;
            g2_cells(&state.report.rho, &prep.basis, kind)
        }
        TaskKind::Spectrum | TaskKind::Evolve | TaskKind::Sweep => {
            Err(Error::Config(format!("task `{kind}` does not produce a single row")))
        }
    }
}

fn spectrum_table(config: &ExperimentConfig, exec: Execution) -> Result<Table> {
    let prep = prepare(config, &config.params)?;
    let kind = config.numerics.model_for(TaskKind::Spectrum);
    let (model, state) = solve_model(config, &prep, kind)?;
    let theta = config
        .numerics
        .theta
        .map(|t| t.radians())
        .unwrap_or_else(|| squeezed_angle(prep.coeffs.alpha, prep.params.phi_l));
    let gap = prep.basis.kappa1 - prep.coeffs.alpha.norm();
    let opts = SpectrumOptions {
        tau_max: config.numerics.tau_max,
        decay_rate: (kind == ModelKind::SingleMode && gap > 0.0).then_some(gap),
        points: config.numerics.tau_points,
        tol: config.numerics.tol,
        execution: exec,
        ..SpectrumOptions::default()
    };
    let omegas = config.numerics.omega_grid.points();
    let s = squeezing_spectrum_numeric_with_state(&model, &state.report.rho, &prep.basis, &omegas, theta, &opts)?;
    let mut t = Table::new(TaskKind::Spectrum, columns(TaskKind::Spectrum));
    t.notes.push(format!("theta = {theta}"));
    t.notes.push(format!("truncation = {:?}", state.dims));
    t.rows = s.omegas.iter().zip(&s.s_out).map(|(w, v)| vec![Cell::Num(*w), Cell::Num(*v)]).collect();
    Ok(t)
}

fn evolve_table(config: &ExperimentConfig) -> Result<Table> {
    let prep = prepare(config, &config.params)?;
    let n = &config.numerics;
    let kind = n.model_for(TaskKind::Evolve);
    let model = match kind {
        ModelKind::SingleMode => single_mode_model(&prep.coeffs, &prep.basis, prep.params.phi_l, n.n_max)?,
        ModelKind::TwoMode => two_mode_model(&prep.params, &prep.basis, &prep.report, n.n_max_a, n.n_max_b)?,
    };
    let times: Vec<f64> = (0..n.time_points).map(|k| n.t_final * k as f64 / (n.time_points - 1) as f64).collect();
    let traj = evolve_trajectory(&model, &model.space().vacuum(), &times, n.tol)?;
    let mut t = Table::new(TaskKind::Evolve, columns(TaskKind::Evolve));
    for (time, rho) in times.iter().zip(&traj) {
        t.rows.push(vec![Cell::Num(*time), Cell::Num(mean_number(rho, 0)?), Cell::Num(output_flux(rho, &prep.basis))]);
    }
    Ok(t)
}

/// Runs g2scan (over ω_p) or sweep (over `task.axis`). Failed points keep
/// the sweep going.
pub fn run_sweep(config: &ExperimentConfig, exec: Execution) -> Result<Table> {
    match config.task.kind {
        TaskKind::G2scan => {
            let scan = config.task.scan.ok_or_else(|| Error::Config("g2scan needs task.omega_p".into()))?;
            let points = scan.omega_p.points();
            let results = exec.map(&points, |&wp| point_row(config, TaskKind::G2scan, &scan.params_at(&config.params, wp)));
            let mut t = Table::new(TaskKind::G2scan, &["omega_p", "g2", "mean_n_cavity", "mean_n_spin"]);
            t.notes.push(scan.relation());
            for (wp, r) in points.iter().zip(results) {
                let mut row = vec![Cell::Num(*wp)];
                match r {
                    Ok(cells) => row.extend(cells),
                    Err(e) => {
                        log::warn!("g2scan point omega_p = {wp} failed: {e}");
                        t.notes.push(format!("omega_p = {wp}: {e}"));
                        row.extend(std::iter::repeat_n(Cell::Null, 3));
                    }
                }
                t.rows.push(row);
            }
            Ok(t)
        }
        TaskKind::Sweep => {
            let axis = config.task.axis.ok_or_else(|| Error::Config("sweep needs task.axis".into()))?;
            let inner = config.task.inner.ok_or_else(|| Error::Config("sweep needs task.inner".into()))?;
            let inner_cols = columns(inner);
            let points = axis.grid().points();
            let results = exec.map(&points, |&v| {
                axis.parameter.apply(&config.params, v).and_then(|p| point_row(config, inner, &p))
            });
            let mut cols = vec![axis.parameter.name()];
            cols.extend_from_slice(inner_cols);
            cols.push("error");
            let mut t = Table::new(TaskKind::Sweep, &cols);
            t.notes.push(format!("inner task = {inner}"));
            for (v, r) in points.iter().zip(results) {
                let mut row = vec![Cell::Num(*v)];
                match r {
                    Ok(cells) => {
                        row.extend(cells);
                        row.push(Cell::Null);
                    }
                    Err(e) => {
                        row.extend(std::iter::repeat_n(Cell::Null, inner_cols.len()));
                        row.push(Cell::Text(e.to_string()));
                    }
                }
                t.rows.push(row);
            }
            Ok(t)
        }
        other => Err(Error::Config(format!("task `{other}` is not a sweep"))),
    }
}

/// Runs the configured task.
pub fn run_task(config: &ExperimentConfig, exec: Execution) -> Result<Table> {
    let kind = config.task.kind;
    match kind {
        TaskKind::G2scan | TaskKind::Sweep => run_sweep(config, exec),
        TaskKind::Spectrum => spectrum_table(config, exec),
        TaskKind::Evolve => evolve_table(config),
        _ => {
            let mut t = Table::new(kind, columns(kind));
            t.rows.push(point_row(config, kind, &config.params)?);
            Ok(t)
        }
    }
}

/// Renders `table` in the configured (or default) format and writes it to
/// the configured path, or returns the text when no path is set.
pub fn emit(config: &ExperimentConfig, table: &Table) -> Result<Option<String>> {
    let format = config.output.format.unwrap_or_else(|| default_format(table.task));
    let text = table.render(format)?;
    match &config.output.path {
        Some(path) => {
            write_atomic(path, &text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}
