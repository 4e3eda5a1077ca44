use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qlarr_core::config::{parse_config_for, OutputFormat, TaskKind};
use qlarr_core::parallel::Execution;
use qlarr_core::sweep::{emit, run_task};
use qlarr_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

/// Nonlinear optics of a laser-driven atomic array in a single-mode cavity.
/// All frequencies in the config are in units of the cavity linewidth κ.
#[derive(Parser)]
#[command(name = "qlarr", version)]
struct Cli {
    #[command(subcommand)]
    task: Task,
}

#[derive(Subcommand)]
enum Task {
    /// Fold Q, Q′ into the Brillouin zone and list the phase-matching flags.
    Classify(Common),
    /// Polariton frequencies, mixing angle and linewidth.
    Basis(Common),
    /// Effective-Hamiltonian coefficients δω₁, α, χ, ν and ε.
    Coeffs {
        #[command(flatten)]
        common: Common,
        /// Apply ω_z → (ω_z² + γ²/4)/ω_z in the coefficients.
        #[arg(long)]
        resonant: bool,
    },
    /// Squeezing spectrum of the output field.
    Spectrum(Common),
    /// g²(0) scan over the laser frequency.
    G2scan(Common),
    /// Steady-state quadrature variances.
    Variance(Common),
    /// Photon number after switching on the drive.
    Evolve(Common),
    /// Parametric or Kerr regime from ε = |α/χ|.
    Regime(Common),
    /// Exact few-atom model against the two-mode effective model.
    Oracle(Common),
    /// Any single-row task over a parameter grid.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long, short)]
    config: PathBuf,
    /// Output file (written atomically); standard output if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, short, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Worker threads for independent points; 1 runs sequentially,
    /// 0 uses all cores.
    #[arg(long, short, default_value_t = 0)]
    jobs: usize,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Task {
    fn parts(self) -> (TaskKind, Common, bool) {
        match self {
            Task::Classify(c) => (TaskKind::Classify, c, false),
            Task::Basis(c) => (TaskKind::Basis, c, false),
            Task::Coeffs { common, resonant } => (TaskKind::Coeffs, common, resonant),
            Task::Spectrum(c) => (TaskKind::Spectrum, c, false),
            Task::G2scan(c) => (TaskKind::G2scan, c, false),
            Task::Variance(c) => (TaskKind::Variance, c, false),
            Task::Evolve(c) => (TaskKind::Evolve, c, false),
            Task::Regime(c) => (TaskKind::Regime, c, false),
            Task::Oracle(c) => (TaskKind::Oracle, c, false),
            Task::Sweep(c) => (TaskKind::Sweep, c, false),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_SOLVER
    }
}

fn run(task: Task) -> Result<(), (u8, String)> {
    let (kind, common, resonant) = task.parts();
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| (EXIT_CONFIG, format!("cannot read {}: {e}", common.config.display())))?;
    let mut config = parse_config_for(&text, Some(kind)).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    config.task.resonant |= resonant;
    if common.out.is_some() {
        config.output.path = common.out;
    }
    if common.format.is_some() {
        config.output.format = common.format;
    }
    if let Some(scan) = &config.task.scan {
        if kind == TaskKind::G2scan {
            eprintln!("qlarr: {}", scan.relation());
        }
    }
    let table = run_task(&config, Execution::from_jobs(common.jobs)).map_err(|e| (exit_code(&e), e.to_string()))?;
    // Writing the result is the solver side's last step; an unwritable
    // path is still a configuration problem.
    match emit(&config, &table) {
        Ok(Some(out)) => print!("{out}"),
        Ok(None) => {}
        Err(e @ Error::Io(_)) => return Err((EXIT_CONFIG, e.to_string())),
        Err(e) => return Err((exit_code(&e), e.to_string())),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.task) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("qlarr: {msg}");
            ExitCode::from(code)
        }
    }
}
