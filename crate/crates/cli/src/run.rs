//! `run`: simulate one scenario and write its ledger.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qsplit_core::ledger::{convergence_order, LedgerMode};
use qsplit_core::{
    closed_ledger, evolve_autonomous, evolve_driven, first_law_report, open_ledger, FirstLawReport,
    ThermoSample, ThermoTrajectory, TimeGrid,
};
use serde::Serialize;

use crate::config::{self, LoadedScenario, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::models::{self, System};

pub const CSV_HEADER: &str = "t,U_S,U_E,U_SE,Qdot_S,Wdot_S,Q_S,W_S,residual_first_law,residual_conservation,residual_total,distance_d,U_I,cluster_merge_flag";

/// Per-sample bound on energy bookkeeping in open-subsystem mode.
pub const OPEN_TOLERANCE: f64 = 1e-9;
/// Per-sample bound on `|Tr(rho H_bar) - Tr(rho H)|` in closed mode.
pub const CLOSED_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub tolerance: f64,
    pub max_value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub invariant: &'static str,
    pub t: f64,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceEstimate {
    pub quantity: &'static str,
    pub dt: f64,
    pub dt_half: f64,
    pub coarse: f64,
    pub fine: f64,
    pub order: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub name: String,
    pub mode: LedgerMode,
    pub config: ScenarioConfig,
    pub dims: (usize, usize),
    pub steps: usize,
    pub csv: PathBuf,
    pub summary: FirstLawReport,
    pub convergence: ConvergenceEstimate,
    pub invariants: Vec<InvariantCheck>,
    pub violation: Option<Violation>,
    pub wall_time_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub report_path: PathBuf,
    pub report: RunReport,
    pub thermo: ThermoTrajectory,
}

impl RunOutcome {
    /// `Err` naming the first violated invariant, if any.
    pub fn check(&self) -> Result<()> {
        match &self.report.violation {
            None => Ok(()),
            Some(v) => Err(CliError::Invariant {
                name: v.invariant.to_string(),
                time: v.t,
                value: v.value,
                tolerance: v.tolerance,
            }),
        }
    }
}

/// Propagate and build the ledger for `system` on `grid`.
pub fn simulate(system: &System, mode: LedgerMode, grid: &TimeGrid) -> Result<ThermoTrajectory> {
    let thermo = match (system, mode) {
        (System::Bipartite(model), LedgerMode::OpenSubsystem) => {
            let traj = evolve_autonomous(model, grid)?;
            open_ledger(&traj, model)?
        }
        (System::Bipartite(model), LedgerMode::ClosedDriven) => {
            let traj = evolve_autonomous(model, grid)?;
            closed_ledger(&traj, &*system.schedule())?
        }
        (System::Driven { schedule, initial }, LedgerMode::ClosedDriven) => {
            let traj = evolve_driven(&**schedule, initial, grid)?;
            closed_ledger(&traj, &**schedule)?
        }
        (System::Driven { .. }, LedgerMode::OpenSubsystem) => {
            return Err(CliError::Input("driven systems have no open-subsystem ledger".into()))
        }
    };
    Ok(thermo)
}

type Probe = (&'static str, fn(&ThermoSample) -> f64, f64);

fn probes(mode: LedgerMode) -> Vec<Probe> {
    match mode {
        LedgerMode::OpenSubsystem => vec![
            ("energy-additivity", |s| s.residual_conservation, OPEN_TOLERANCE),
            ("total-energy-conservation", |s| s.residual_total, OPEN_TOLERANCE),
            ("interaction-constraint", |s| s.residual_constraint, OPEN_TOLERANCE),
        ],
        LedgerMode::ClosedDriven => vec![(
            "commuting-part-energy",
            |s| s.residual_conservation,
            CLOSED_TOLERANCE,
        )],
    }
}

pub fn check_invariants(thermo: &ThermoTrajectory) -> (Vec<InvariantCheck>, Option<Violation>) {
    let probes = probes(thermo.mode);
    let checks = probes
        .iter()
        .map(|(name, f, tol)| {
            let max_value = thermo.samples.iter().map(f).fold(0.0f64, f64::max);
            InvariantCheck {
                name,
                tolerance: *tol,
                max_value,
                passed: max_value <= *tol,
            }
        })
        .collect();
    let violation = thermo.samples.iter().find_map(|s| {
        probes.iter().find_map(|(name, f, tol)| {
            let value = f(s);
            (!(value <= *tol)).then_some(Violation {
                invariant: name,
                t: s.t,
                value,
                tolerance: *tol,
            })
        })
    });
    (checks, violation)
}

fn convergence(
    system: &System,
    mode: LedgerMode,
    grid: &TimeGrid,
    coarse: &ThermoTrajectory,
) -> Result<ConvergenceEstimate> {
    let fine_grid = grid.refined();
    let fine = simulate(system, mode, &fine_grid)?;
    let (quantity, measure): (&'static str, fn(&ThermoTrajectory) -> f64) = match mode {
        LedgerMode::OpenSubsystem => ("integrated-first-law-residual", |t| {
            t.samples.iter().map(|s| s.residual_first_law).sum()
        }),
        LedgerMode::ClosedDriven => ("final-heat", |t| t.last().map_or(0.0, |s| s.q_s.abs())),
    };
    let (c, f) = (measure(coarse), measure(&fine));
    Ok(ConvergenceEstimate {
        quantity,
        dt: grid.dt,
        dt_half: fine_grid.dt,
        coarse: c,
        fine: f,
        order: convergence_order(c, f),
    })
}

pub fn format_csv(thermo: &ThermoTrajectory) -> String {
    let mut out = String::with_capacity(256 * (thermo.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &thermo.samples {
        let values = [
            s.t,
            s.u_s,
            s.u_e,
            s.u_se,
            s.qdot_s,
            s.wdot_s,
            s.q_s,
            s.w_s,
            s.residual_first_law,
            s.residual_conservation,
            s.residual_total,
            s.distance_d,
            s.u_interaction,
        ];
        for v in values {
            let _ = write!(out, "{v:.16e},");
        }
        out.push(if s.cluster_merge_flag { '1' } else { '0' });
        out.push('\n');
    }
    out
}

/// Write via a temporary file in the same directory and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn output_paths(scenario: &LoadedScenario, opts: &RunOptions) -> (PathBuf, PathBuf) {
    let dir = opts.out_dir.clone().unwrap_or_else(|| scenario.base_dir.clone());
    let stem = file_stem(&scenario.config.name);
    let place = |p: &Option<PathBuf>, default: String| match p {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => dir.join(p),
        None => dir.join(default),
    };
    (
        place(&scenario.config.outputs.csv, format!("{stem}.csv")),
        place(&scenario.config.outputs.report, format!("{stem}.report.json")),
    )
}

/// Load, simulate, check and write. Invariant violations are recorded in the
/// outcome (artifacts are still written); use [`RunOutcome::check`] to turn
/// them into an error.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let started = Instant::now();
    let mut scenario = config::load(path)?;
    if let Some(dt) = opts.dt {
        scenario.config.grid.dt = dt;
    }
    if let Some(t1) = opts.t_max {
        scenario.config.grid.t1 = t1;
    }
    config::validate(&scenario.config, path)?;
    let c = &scenario.config;
    let grid = TimeGrid::new(c.grid.t0, c.grid.t1, c.grid.dt)
        .map_err(|e| CliError::config(path, "grid", e.to_string()))?;
    let system = models::build(&scenario)?;

    let thermo = simulate(&system, c.mode, &grid)?;
    let summary = first_law_report(&thermo)?;
    let (invariants, violation) = check_invariants(&thermo);
    let convergence = convergence(&system, c.mode, &grid, &thermo)?;

    let (csv_path, report_path) = output_paths(&scenario, opts);
    write_atomic(&csv_path, format_csv(&thermo).as_bytes())?;
    let report = RunReport {
        name: c.name.clone(),
        mode: c.mode,
        config: c.clone(),
        dims: system.dims(),
        steps: grid.steps(),
        csv: csv_path.clone(),
        summary,
        convergence,
        invariants,
        violation,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_vec_pretty(&report).expect("report serializes");
    write_atomic(&report_path, &json)?;
    Ok(RunOutcome {
        csv_path,
        report_path,
        report,
        thermo,
    })
}
