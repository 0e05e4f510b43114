//! `run`, `sweep` and `verify`, plus the CSV writers they share.

use std::fs;
use std::path::{Path, PathBuf};

use strainlim::diagnostics::{self, ConvergenceReport, EnergyLedger, StrainMonitor, StudyAxis};
use strainlim::{verification, Error, Observer, Simulator, State};

use crate::config::{ConfigError, RunConfig, StudyKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_PROPERTY: i32 = 3;

/// Snapshots written per run, not counting t = 0.
pub const SNAPSHOTS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Core(e) if is_validation(e) => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }
}

fn is_validation(e: &Error) -> bool {
    match e {
        Error::InvalidInput(_) | Error::InvalidData(_) | Error::Precondition(_) | Error::SafetyCondition { .. } => true,
        Error::Study { source, .. } => is_validation(source),
        _ => false,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv { path: path.to_path_buf(), source }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(csv_err(path))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Keeps every `every`-th observed state, and the last one.
struct SnapshotKeeper {
    every: usize,
    total: usize,
    seen: usize,
    states: Vec<State>,
}

impl Observer for SnapshotKeeper {
    fn observe(&mut self, _: &Simulator, state: &State) -> strainlim::Result<()> {
        if self.seen.is_multiple_of(self.every) || self.seen == self.total {
            self.states.push(state.clone());
        }
        self.seen += 1;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub energy_rows: usize,
    pub snapshot_files: Vec<PathBuf>,
    pub final_energy: String,
    pub max_strain_expr: f64,
}

pub fn snapshot_name(t: f64) -> String {
    format!("state_{t:.6}.csv")
}

/// Per quadrature point: x[, y], u, v, packed ε, packed T.
pub fn write_snapshot(sim: &Simulator, state: &State, path: &Path) -> Result<(), CliError> {
    let space = sim.space();
    let dim = space.dim();
    let packed = dim * (dim + 1) / 2;
    let mut header: Vec<String> = ["x", "y"][..dim].iter().map(|s| s.to_string()).collect();
    for prefix in ["u", "v"] {
        header.extend((0..dim).map(|c| format!("{prefix}{c}")));
    }
    for prefix in ["eps", "T"] {
        header.extend((0..packed).map(|c| format!("{prefix}{c}")));
    }
    let k = sim.kinematics(state);
    let field = space.field_from_interior(&state.u, Some(sim.scenario().lift.clone()));
    let u = space.field_at_qp(&field, state.t);
    let mut w = writer(path)?;
    w.write_record(&header).map_err(csv_err(path))?;
    for (i, qp) in space.quad_points().iter().enumerate() {
        let mut row: Vec<String> = qp.x[..dim].iter().copied().map(num).collect();
        row.extend(u[i][..dim].iter().copied().map(num));
        row.extend(k.velocity[i][..dim].iter().copied().map(num));
        row.extend(k.eps[i].packed().iter().copied().map(num));
        row.extend(state.stress[i].packed().iter().copied().map(num));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_energy(ledger: &EnergyLedger, path: &Path) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["t", "kinetic", "elastic", "dissipation_cum", "external_cum", "balance_residual"]).map_err(csv_err(path))?;
    for r in &ledger.records {
        let s = &r.snapshot;
        w.write_record([
            num(s.t),
            num(s.kinetic),
            s.elastic.to_string(),
            num(r.dissipation_cum),
            num(r.external_cum),
            opt(r.balance_residual),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_monitor(monitor: &StrainMonitor, path: &Path) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["t", "max_strain_expr", "margin", "max_eps", "max_stress"]).map_err(csv_err(path))?;
    for r in &monitor.records {
        w.write_record([num(r.t), num(r.max_strain_expr), r.margin.to_string(), num(r.max_eps), num(r.max_stress)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_report(report: &ConvergenceReport, path: &Path) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["axis_value", "error_or_diff", "fitted_order"]).map_err(csv_err(path))?;
    let last = report.values.len().saturating_sub(1);
    for (i, (x, y)) in report.axis_values.iter().zip(&report.values).enumerate() {
        let order = if i == last { opt(report.fitted_order) } else { String::new() };
        w.write_record([num(*x), num(*y), order]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let solver = cfg.solver_config()?;
    let sim = Simulator::from_scenario(cfg.scenario()?)?;
    prepare_out_dir(cfg)?;
    let steps = solver.step_times().len();
    let mut ledger = EnergyLedger::new();
    let mut monitor = StrainMonitor::new();
    let mut keeper = SnapshotKeeper { every: steps.div_ceil(SNAPSHOTS).max(1), total: steps, seen: 0, states: Vec::new() };
    sim.run(&solver, &mut [&mut ledger, &mut monitor, &mut keeper])?;

    write_energy(&ledger, &cfg.out_dir.join("energy.csv"))?;
    write_monitor(&monitor, &cfg.out_dir.join("monitor.csv"))?;
    let mut snapshot_files = Vec::new();
    for state in &keeper.states {
        let path = cfg.out_dir.join(snapshot_name(state.t));
        write_snapshot(&sim, state, &path)?;
        snapshot_files.push(path);
    }
    Ok(RunSummary {
        steps,
        energy_rows: ledger.records.len(),
        snapshot_files,
        final_energy: ledger.records.last().map(|r| r.total().to_string()).unwrap_or_default(),
        max_strain_expr: monitor.max_strain_expr(),
    })
}

pub fn sweep(cfg: &RunConfig) -> Result<ConvergenceReport, CliError> {
    let Some(study) = cfg.study else {
        return Err(ConfigError::MissingKey { key: "study".into(), line: 0 }.into());
    };
    let need = |key: &str, empty: bool| {
        if empty {
            Err(CliError::from(ConfigError::MissingKey { key: key.into(), line: 0 }))
        } else {
            Ok(())
        }
    };
    let solver = cfg.solver_config()?;
    let scenario = cfg.scenario()?;
    let report = match study {
        StudyKind::Regularization => {
            need("n_list", cfg.n_list.is_empty())?;
            diagnostics::regularization_sweep(&scenario, &solver, &cfg.n_list)?
        }
        StudyKind::RefinementH | StudyKind::RefinementDt => {
            need("levels", cfg.levels.is_empty())?;
            if scenario.exact.is_none() {
                return Err(CliError::Validation(format!(
                    "study {} needs a scenario with an exact solution (standing-wave or manufactured:<name>), got {}",
                    study.name(),
                    cfg.scenario
                )));
            }
            let axis = if study == StudyKind::RefinementH { StudyAxis::MeshSize } else { StudyAxis::TimeStep };
            diagnostics::refinement_study(&scenario, axis, &cfg.levels, &solver)?
        }
        StudyKind::Stability => {
            need("delta_list", cfg.delta_list.is_empty())?;
            let sim = Simulator::from_scenario(scenario)?;
            diagnostics::stability_study(&sim, &solver, &cfg.delta_list, cfg.seed)?
        }
    };
    prepare_out_dir(cfg)?;
    write_report(&report, &cfg.out_dir.join("report.csv"))?;
    Ok(report)
}

/// Runs the property suite, printing one line per group. Returns the exit code.
pub fn verify(samples: usize, seed: u64) -> i32 {
    let outcomes = verification::run_all(samples, seed);
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    if outcomes.iter().all(|o| o.passed) {
        EXIT_OK
    } else {
        EXIT_PROPERTY
    }
}
