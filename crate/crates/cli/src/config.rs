//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Every key may appear once.
//! Defaults: `dim = 1`, `model` required, `q = 2`, `p = 2`, `alpha = 1`,
//! `beta = 1`, `reg_n = 16`, `scheme = midpoint`, `seed = 0`,
//! `out_dir = ./out`. `domain`, `cells` (or `cells_x` and `cells_y` when
//! `dim = 2`), `dt`, `t_end` and `scenario` are required.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::sync::Arc;

use strainlim::scenarios::{self, StandingWave};
use strainlim::{ConstitutiveModel, MeshSpec, Regularization, Scenario, ScalarPotential, Scheme, SolverConfig};

/// Amplitude and angular frequency of the built-in standing wave.
pub const WAVE_AMPLITUDE: f64 = 0.1;
pub const WAVE_OMEGA: f64 = 2.0;
/// Safety margin of the `gaussian-pluck` initial data.
pub const PLUCK_MARGIN: f64 = 0.3;

const KEYS: &[&str] = &[
    "dim", "domain", "cells", "cells_x", "cells_y", "model", "q", "p", "alpha", "beta", "reg_n", "scheme", "dt", "t_end",
    "scenario", "seed", "out_dir", "study", "n_list", "levels", "delta_list",
];

/// Line 0 means the key was never written and the error refers to end of input.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("{}: missing required key `{key}`", at(*.line))]
    MissingKey { key: String, line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { key: String, line: usize },
    #[error("{}: `{key}` {message}", at(*.line))]
    RangeError { key: String, line: usize, message: String },
}

fn at(line: usize) -> String {
    if line == 0 {
        "end of input".to_string()
    } else {
        format!("line {line}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Prototype,
    PowerLaw,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    GaussianPluck,
    NearLimit,
    StandingWave,
    Manufactured(String),
}

/// Built-in exact solutions for `manufactured:<name>`.
pub const MANUFACTURED_NAMES: &[&str] = &["standing-wave", "rest"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyKind {
    Regularization,
    /// Mesh refinement; `levels` are cell counts.
    RefinementH,
    /// Time-step refinement; `levels` are step sizes.
    RefinementDt,
    Stability,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub domain: Vec<f64>,
    pub cells: [usize; 2],
    pub model: ModelKind,
    pub q: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub reg_n: Option<u32>,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub study: Option<StudyKind>,
    pub n_list: Vec<u32>,
    pub levels: Vec<f64>,
    pub delta_list: Vec<f64>,
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn required(&self, key: &str) -> Result<(&str, usize), ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::MissingKey { key: key.into(), line: 0 })
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<(T, usize), ConfigError> {
        match self.raw(key) {
            Some((v, line)) => v
                .parse()
                .map(|x| (x, line))
                .map_err(|_| range(key, line, format!("cannot parse `{v}`"))),
            None => default.map(|d| (d, 0)).ok_or_else(|| ConfigError::MissingKey { key: key.into(), line: 0 }),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<(Vec<T>, usize), ConfigError> {
        let Some((v, line)) = self.raw(key) else {
            return Ok((Vec::new(), 0));
        };
        let items = v
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| range(key, line, format!("cannot parse list item `{s}`"))))
            .collect::<Result<Vec<T>, _>>()?;
        if items.is_empty() {
            return Err(range(key, line, "must not be empty".into()));
        }
        Ok((items, line))
    }
}

fn range(key: &str, line: usize, message: String) -> ConfigError {
    ConfigError::RangeError { key: key.into(), line, message }
}

fn positive(key: &str, (v, line): (f64, usize)) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(range(key, line, format!("must be > 0 (got {v})")))
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: content.into() });
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey { key: k.into(), line });
        }
        if v.is_empty() {
            return Err(range(k, line, "has an empty value".into()));
        }
        if map.insert(k.to_string(), (v.to_string(), line)).is_some() {
            return Err(ConfigError::DuplicateKey { key: k.into(), line });
        }
    }
    Ok(Entries { map })
}

/// Parses and validates a configuration. No computation happens here.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;

    let (dim, dim_line) = e.parsed("dim", Some(1usize))?;
    if dim != 1 && dim != 2 {
        return Err(range("dim", dim_line, format!("must be 1 or 2 (got {dim})")));
    }

    let (domain, dl) = e.list::<f64>("domain")?;
    if dl == 0 {
        return Err(ConfigError::MissingKey { key: "domain".into(), line: 0 });
    }
    if domain.len() != 2 * dim {
        return Err(range("domain", dl, format!("needs {} numbers for dim = {dim}", 2 * dim)));
    }
    if domain.iter().any(|v| !v.is_finite()) || domain.chunks(2).any(|c| c[0] >= c[1]) {
        return Err(range("domain", dl, "bounds must be finite with a < b (and c < d)".into()));
    }

    let cells_key = |key: &str, v: (usize, usize)| {
        if v.0 >= 2 {
            Ok(v.0)
        } else {
            Err(range(key, v.1, format!("must be >= 2 (got {})", v.0)))
        }
    };
    let cells = if dim == 1 {
        for k in ["cells_x", "cells_y"] {
            if let Some((_, line)) = e.raw(k) {
                return Err(range(k, line, "is only valid with dim = 2".into()));
            }
        }
        [cells_key("cells", e.parsed("cells", None)?)?, 1]
    } else if e.raw("cells").is_some() && e.raw("cells_x").is_none() && e.raw("cells_y").is_none() {
        let n = cells_key("cells", e.parsed("cells", None)?)?;
        [n, n]
    } else {
        if let Some((_, line)) = e.raw("cells") {
            return Err(range("cells", line, "cannot be combined with cells_x / cells_y".into()));
        }
        [cells_key("cells_x", e.parsed("cells_x", None)?)?, cells_key("cells_y", e.parsed("cells_y", None)?)?]
    };

    let (model_name, ml) = e.required("model")?;
    let model = match model_name {
        "prototype" => ModelKind::Prototype,
        "powerlaw" => ModelKind::PowerLaw,
        "linear" => ModelKind::Linear,
        other => return Err(range("model", ml, format!("must be prototype, powerlaw or linear (got `{other}`)"))),
    };
    let (q, ql) = e.parsed("q", Some(2.0f64))?;
    if !(q.is_finite() && q >= 1.0) {
        return Err(range("q", ql, format!("must be >= 1 (got {q})")));
    }
    let (p, pl) = e.parsed("p", Some(2.0f64))?;
    if !(p.is_finite() && p > 1.0) {
        return Err(range("p", pl, format!("must be > 1 (got {p})")));
    }
    let alpha = positive("alpha", e.parsed("alpha", Some(1.0))?)?;
    let beta = positive("beta", e.parsed("beta", Some(1.0))?)?;

    let reg_n = match e.raw("reg_n") {
        None => Some(16),
        Some(("none", _)) => None,
        Some((v, line)) => match v.parse::<u32>() {
            Ok(n) if n >= 1 => Some(n),
            _ => return Err(range("reg_n", line, format!("must be an integer >= 1 or `none` (got `{v}`)"))),
        },
    };

    let scheme = match e.raw("scheme") {
        None | Some(("midpoint", _)) => Scheme::ImplicitMidpoint,
        Some(("rk4", _)) => Scheme::Rk4,
        Some((v, line)) => return Err(range("scheme", line, format!("must be rk4 or midpoint (got `{v}`)"))),
    };

    let dt = positive("dt", e.parsed("dt", None)?)?;
    let (t_end, tl) = e.parsed("t_end", None)?;
    let t_end = positive("t_end", (t_end, tl))?;
    if dt > t_end {
        return Err(range("dt", e.raw("dt").map_or(0, |r| r.1), format!("must not exceed t_end = {t_end}")));
    }

    let (sc, sl) = e.required("scenario")?;
    let scenario = match sc {
        "gaussian-pluck" => ScenarioKind::GaussianPluck,
        "near-limit" => ScenarioKind::NearLimit,
        "standing-wave" => ScenarioKind::StandingWave,
        other => match other.strip_prefix("manufactured:") {
            Some(name) if MANUFACTURED_NAMES.contains(&name) => ScenarioKind::Manufactured(name.into()),
            Some(name) => {
                return Err(range("scenario", sl, format!("unknown manufactured solution `{name}` (known: {})", MANUFACTURED_NAMES.join(", "))))
            }
            None => {
                return Err(range(
                    "scenario",
                    sl,
                    format!("must be gaussian-pluck, near-limit, standing-wave or manufactured:<name> (got `{other}`)"),
                ))
            }
        },
    };

    let (seed, _) = e.parsed("seed", Some(0u64))?;
    let out_dir = PathBuf::from(e.raw("out_dir").map_or("./out", |r| r.0));

    let study = match e.raw("study") {
        None => None,
        Some((v, line)) => Some(match v {
            "regularization" => StudyKind::Regularization,
            "refinement-h" => StudyKind::RefinementH,
            "refinement-dt" => StudyKind::RefinementDt,
            "stability" => StudyKind::Stability,
            other => {
                return Err(range(
                    "study",
                    line,
                    format!("must be regularization, refinement-h, refinement-dt or stability (got `{other}`)"),
                ))
            }
        }),
    };
    let (n_list, nl) = e.list::<u32>("n_list")?;
    if n_list.contains(&0) {
        return Err(range("n_list", nl, "entries must be >= 1".into()));
    }
    let (levels, ll) = e.list::<f64>("levels")?;
    if levels.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(range("levels", ll, "entries must be > 0".into()));
    }
    let (delta_list, dll) = e.list::<f64>("delta_list")?;
    if delta_list.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(range("delta_list", dll, "entries must be > 0".into()));
    }

    Ok(RunConfig {
        dim,
        domain,
        cells,
        model,
        q,
        p,
        alpha,
        beta,
        reg_n,
        scheme,
        dt,
        t_end,
        scenario,
        seed,
        out_dir,
        study,
        n_list,
        levels,
        delta_list,
    })
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioKind::GaussianPluck => f.write_str("gaussian-pluck"),
            ScenarioKind::NearLimit => f.write_str("near-limit"),
            ScenarioKind::StandingWave => f.write_str("standing-wave"),
            ScenarioKind::Manufactured(n) => write!(f, "manufactured:{n}"),
        }
    }
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Regularization => "regularization",
            StudyKind::RefinementH => "refinement-h",
            StudyKind::RefinementDt => "refinement-dt",
            StudyKind::Stability => "stability",
        }
    }
}

impl RunConfig {
    /// Canonical text form; `parse_config(&c.to_text()) == Ok(c)`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "domain = {}", join(&self.domain));
        if self.dim == 1 {
            let _ = writeln!(s, "cells = {}", self.cells[0]);
        } else {
            let _ = writeln!(s, "cells_x = {}\ncells_y = {}", self.cells[0], self.cells[1]);
        }
        let model = match self.model {
            ModelKind::Prototype => "prototype",
            ModelKind::PowerLaw => "powerlaw",
            ModelKind::Linear => "linear",
        };
        let _ = writeln!(s, "model = {model}\nq = {}\np = {}\nalpha = {}\nbeta = {}", self.q, self.p, self.alpha, self.beta);
        let _ = writeln!(s, "reg_n = {}", self.reg_n.map_or("none".to_string(), |n| n.to_string()));
        let scheme = match self.scheme {
            Scheme::Rk4 => "rk4",
            Scheme::ImplicitMidpoint => "midpoint",
        };
        let _ = writeln!(s, "scheme = {scheme}\ndt = {}\nt_end = {}", self.dt, self.t_end);
        let _ = writeln!(s, "scenario = {}\nseed = {}\nout_dir = {}", self.scenario, self.seed, self.out_dir.display());
        if let Some(study) = self.study {
            let _ = writeln!(s, "study = {}", study.name());
        }
        if !self.n_list.is_empty() {
            let _ = writeln!(s, "n_list = {}", join(&self.n_list));
        }
        if !self.levels.is_empty() {
            let _ = writeln!(s, "levels = {}", join(&self.levels));
        }
        if !self.delta_list.is_empty() {
            let _ = writeln!(s, "delta_list = {}", join(&self.delta_list));
        }
        s
    }

    pub fn mesh(&self) -> MeshSpec {
        let d = &self.domain;
        if self.dim == 1 {
            MeshSpec::Interval { a: d[0], b: d[1], cells: self.cells[0] }
        } else {
            MeshSpec::Rectangle { a: d[0], b: d[1], c: d[2], d: d[3], nx: self.cells[0], ny: self.cells[1] }
        }
    }

    pub fn constitutive_model(&self) -> strainlim::Result<ConstitutiveModel> {
        let potential = match self.model {
            ModelKind::Prototype => ScalarPotential::prototype(self.q)?,
            ModelKind::PowerLaw => ScalarPotential::PowerLaw { p: self.p },
            ModelKind::Linear => ScalarPotential::Linear,
        };
        let m = ConstitutiveModel::new(potential, self.alpha, self.beta)?;
        match self.reg_n {
            Some(n) => m.with_regularization(n, Regularization::LinearTikhonov),
            None => Ok(m),
        }
    }

    pub fn scenario(&self) -> strainlim::Result<Scenario> {
        let model = self.constitutive_model()?;
        let mesh = self.mesh();
        match &self.scenario {
            ScenarioKind::GaussianPluck => scenarios::gaussian_pluck(mesh, model, PLUCK_MARGIN, self.t_end),
            ScenarioKind::NearLimit => scenarios::near_limit(mesh, model, self.t_end),
            ScenarioKind::StandingWave => scenarios::standing_wave(mesh, model, WAVE_AMPLITUDE, WAVE_OMEGA, self.t_end),
            ScenarioKind::Manufactured(name) => {
                let amplitude = if name == "rest" { 0.0 } else { WAVE_AMPLITUDE };
                let exact = Arc::new(StandingWave { dim: self.dim, bounds: mesh.bounds(), amplitude, omega: WAVE_OMEGA });
                let mut s = scenarios::manufactured(exact, model, mesh, self.t_end)?;
                s.name = format!("manufactured:{name}");
                Ok(s)
            }
        }
    }

    pub fn solver_config(&self) -> strainlim::Result<SolverConfig> {
        SolverConfig::new(self.dt, self.t_end, self.scheme)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "domain = 0 1\ncells = 8\nmodel = prototype\ndt = 0.01\nt_end = 0.1\nscenario = gaussian-pluck\n";

    #[test]
    fn defaults_fill_in() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.dim, 1);
        assert_eq!((c.q, c.p, c.alpha, c.beta), (2.0, 2.0, 1.0, 1.0));
        assert_eq!(c.reg_n, Some(16));
        assert_eq!(c.scheme, Scheme::ImplicitMidpoint);
        assert_eq!(c.seed, 0);
        assert_eq!(c.out_dir, PathBuf::from("./out"));
        assert!(c.study.is_none());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# experiment\n\n{MINIMAL}seed = 9   # trailing\n");
        assert_eq!(parse_config(&text).unwrap().seed, 9);
    }

    #[test]
    fn missing_required_key() {
        let text = MINIMAL.replace("dt = 0.01\n", "");
        assert_eq!(parse_config(&text).unwrap_err(), ConfigError::MissingKey { key: "dt".into(), line: 0 });
    }

    #[test]
    fn duplicate_and_syntax() {
        let dup = format!("{MINIMAL}cells = 9\n");
        assert_eq!(parse_config(&dup).unwrap_err(), ConfigError::DuplicateKey { key: "cells".into(), line: 7 });
        let bad = format!("{MINIMAL}cells 9\n");
        assert!(matches!(parse_config(&bad).unwrap_err(), ConfigError::Syntax { line: 7, .. }));
    }

    #[test]
    fn dimension_specific_cells() {
        let two = MINIMAL.replace("domain = 0 1\ncells = 8", "dim = 2\ndomain = 0 1 0 2\ncells_x = 4\ncells_y = 6");
        let c = parse_config(&two).unwrap();
        assert_eq!(c.cells, [4, 6]);
        assert!(matches!(c.mesh(), MeshSpec::Rectangle { nx: 4, ny: 6, .. }));
        let wrong = MINIMAL.replace("cells = 8", "cells_x = 8");
        let err = parse_config(&wrong).unwrap_err();
        assert!(matches!(err, ConfigError::RangeError { ref key, line: 2, .. } if key == "cells_x"), "{err}");
    }

    #[test]
    fn reg_none_and_manufactured_names() {
        let c = parse_config(&format!("{MINIMAL}reg_n = none\n").replace("gaussian-pluck", "manufactured:standing-wave")).unwrap();
        assert_eq!(c.reg_n, None);
        assert_eq!(c.scenario, ScenarioKind::Manufactured("standing-wave".into()));
        let err = parse_config(&MINIMAL.replace("gaussian-pluck", "manufactured:nope")).unwrap_err();
        assert!(err.to_string().contains("line 6"), "{err}");
    }

    #[test]
    fn resolves_scenario_and_solver() {
        let c = parse_config(MINIMAL).unwrap();
        let s = c.scenario().unwrap();
        assert_eq!(s.model.reg_n, Some(16));
        assert_eq!(c.solver_config().unwrap().step_times().len(), 10);
    }
}
