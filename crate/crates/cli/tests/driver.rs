use std::fs;
use std::path::Path;
use std::process::Command;

use strainlim_cli::config::ScenarioKind;
use strainlim_cli::{commands, parse_config, ConfigError, EXIT_VALIDATION};

fn config(out: &Path, body: &str) -> String {
    format!("out_dir = {}\n{body}", out.display())
}

const PLUCK: &str = "domain = 0 1\ncells = 128\nmodel = prototype\ndt = 1e-3\nt_end = 1\nscenario = gaussian-pluck\n";

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_strainlim")).args(args).output().unwrap()
}

#[test]
fn minimal_config_gets_defaults() {
    let c = parse_config(PLUCK).unwrap();
    assert_eq!(c.cells, [128, 1]);
    assert_eq!(c.scenario, ScenarioKind::GaussianPluck);
    assert_eq!(c.reg_n, Some(16));
}

#[test]
fn negative_alpha_names_the_key() {
    let err = parse_config(&format!("{PLUCK}alpha = -1\n")).unwrap_err();
    assert!(matches!(err, ConfigError::RangeError { ref key, line: 7, .. } if key == "alpha"));
    assert!(err.to_string().contains("must be > 0"), "{err}");
}

#[test]
fn misspelled_key_is_reported_at_its_line() {
    let text = PLUCK.replace("model = prototype", "modle = prototype");
    assert_eq!(parse_config(&text).unwrap_err(), ConfigError::UnknownKey { key: "modle".into(), line: 3 });
}

#[test]
fn serialization_round_trips() {
    let texts = [
        PLUCK.to_string(),
        "dim = 2\ndomain = -1 1 0 0.5\ncells_x = 6\ncells_y = 3\nmodel = powerlaw\np = 3.5\nalpha = 0.3\nbeta = 2\nreg_n = none\n\
         scheme = rk4\ndt = 0.001\nt_end = 0.1\nscenario = manufactured:standing-wave\nseed = 42\nout_dir = /tmp/x y\n\
         study = stability\ndelta_list = 1e-3 1e-5\n"
            .to_string(),
        format!("{PLUCK}study = regularization\nn_list = 4, 16, 64\nlevels = 0.1 0.05\n"),
    ];
    for text in texts {
        let c = parse_config(&text).unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c, "{}", c.to_text());
    }
}

#[test]
fn pluck_run_writes_one_energy_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let c = parse_config(&config(dir.path(), PLUCK)).unwrap();
    let s = commands::run(&c).unwrap();
    assert_eq!(s.steps, 1000);
    let energy = dir.path().join("energy.csv");
    assert_eq!(header(&energy), "t,kinetic,elastic,dissipation_cum,external_cum,balance_residual");
    assert_eq!(fs::read_to_string(&energy).unwrap().lines().count(), 1 + s.steps + 1);
    let monitor = dir.path().join("monitor.csv");
    assert_eq!(header(&monitor), "t,max_strain_expr,margin,max_eps,max_stress");
    assert_eq!(s.snapshot_files.len(), commands::SNAPSHOTS + 1);
    assert!(dir.path().join("state_1.000000.csv").exists());
    assert_eq!(header(&dir.path().join("state_0.000000.csv")), "x,u0,v0,eps0,T0");
}

#[test]
fn snapshot_columns_in_2d() {
    let dir = tempfile::tempdir().unwrap();
    let body = "dim = 2\ndomain = 0 1 0 1\ncells = 4\nmodel = prototype\ndt = 0.01\nt_end = 0.02\nscenario = near-limit\n";
    let c = parse_config(&config(dir.path(), body)).unwrap();
    let s = commands::run(&c).unwrap();
    let last = s.snapshot_files.last().unwrap();
    assert_eq!(header(last), "x,y,u0,u1,v0,v1,eps0,eps1,eps2,T0,T1,T2");
    // 4 x 4 squares, two triangles each, three points per triangle
    assert_eq!(fs::read_to_string(last).unwrap().lines().count(), 1 + 96);
}

#[test]
fn regularization_sweep_report() {
    let dir = tempfile::tempdir().unwrap();
    let body = "domain = 0 1\ncells = 16\nmodel = prototype\ndt = 0.01\nt_end = 0.2\nscenario = gaussian-pluck\n\
                study = regularization\nn_list = 4 16 64 256\n";
    let c = parse_config(&config(dir.path(), body)).unwrap();
    let r = commands::sweep(&c).unwrap();
    assert_eq!(r.values.len(), 3);
    let text = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "axis_value,error_or_diff,fitted_order");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(','));
    assert!(!lines[3].ends_with(','));
}

#[test]
fn refinement_needs_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{PLUCK}study = refinement-h\nlevels = 8 16 32\n");
    let c = parse_config(&config(dir.path(), &body)).unwrap();
    let err = commands::sweep(&c).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_VALIDATION);
}

#[test]
fn supercritical_data_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    let body = "domain = 0 1\ncells = 16\nmodel = prototype\nbeta = 5\ndt = 0.01\nt_end = 0.5\nscenario = standing-wave\n";
    fs::write(&path, config(dir.path(), body)).unwrap();
    let out = binary(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("safety strain condition") && msg.contains("margin -"), "{msg}");
}

#[test]
fn config_errors_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, PLUCK.replace("model", "modle")).unwrap();
    let out = binary(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3: unknown key `modle`"));
}

#[test]
fn verify_passes() {
    let out = binary(&["verify", "--samples", "500"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().count() >= 3 && text.lines().all(|l| l.starts_with("PASS")), "{text}");
}
