//! Energy ledger, strain-limit monitor and convergence / stability studies.
//!
//! The ledger tests the momentum equation against ∂ₜu. With
//! T₀ = G⁻¹(α ε) the balance reads
//!
//! ```text
//! d/dt [ ½‖∂ₜu‖² + α⁻¹ ∫ φ*(α|ε|) ] + β⁻¹ ∫ (T − T₀)·(G(T) − G(T₀)) = ∫ f·∂ₜu
//! ```
//!
//! for the map G of the model handed to the ledger (normally the regularized
//! map used by the solver, which makes the balance close to scheme order).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constitutive::ConstitutiveModel;
use crate::dynamics::{Observer, Simulator, SolverConfig, State, Trajectory};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::fespace::FESpace;
use crate::scenarios::{MeshSpec, Scenario};
use crate::symtensor::SymTensor;

/// Elastic energy density α⁻¹ φ*(α|ε|) and dissipation density
/// β⁻¹ (T − T₀)·(G(T) − G(T₀)) at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointEnergy {
    pub elastic: Extended,
    /// `None` when T₀ does not exist (α|ε| at or beyond L).
    pub dissipation: Option<f64>,
}

pub fn point_energy(model: &ConstitutiveModel, eps: &SymTensor, stress: &SymTensor) -> PointEnergy {
    let e = eps.scale(model.alpha);
    let elastic = match model.conjugate(e.norm()) {
        Extended::Finite(c) => Extended::Finite(c / model.alpha),
        Extended::PosInfinity => Extended::PosInfinity,
    };
    let dissipation = match elastic {
        Extended::Finite(_) => model.invert(&e).ok().map(|t0| model.dissipation_pair(stress, &t0) / model.beta),
        Extended::PosInfinity => None,
    };
    PointEnergy { elastic, dissipation }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySnapshot {
    pub t: f64,
    pub kinetic: f64,
    pub elastic: Extended,
    /// `None` when T₀ is undefined somewhere.
    pub dissipation_rate: Option<f64>,
    pub external_power: f64,
}

/// Energy quantities of `state` by quadrature, using `model` for G and φ*.
pub fn energy_snapshot(sim: &Simulator, state: &State, model: &ConstitutiveModel) -> EnergySnapshot {
    let space = sim.space();
    let kin = sim.kinematics(state);
    let scenario = sim.scenario();
    let mut kinetic = 0.0;
    let mut elastic = Extended::Finite(0.0);
    let mut dissipation = Some(0.0);
    let mut external = 0.0;
    for (k, qp) in space.quad_points().iter().enumerate() {
        let v = kin.velocity[k];
        kinetic += 0.5 * qp.weight * (v[0] * v[0] + v[1] * v[1]);
        let pe = point_energy(model, &kin.eps[k], &state.stress[k]);
        elastic = match (elastic, pe.elastic) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + qp.weight * b),
            _ => Extended::PosInfinity,
        };
        dissipation = match (dissipation, pe.dissipation) {
            (Some(a), Some(b)) => Some(a + qp.weight * b),
            _ => None,
        };
        if !scenario.forcing_is_zero {
            let f = scenario.forcing.value(state.t, qp.x);
            external += qp.weight * (f[0] * v[0] + f[1] * v[1]);
        }
    }
    EnergySnapshot { t: state.t, kinetic, elastic, dissipation_rate: dissipation, external_power: external }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord {
    pub snapshot: EnergySnapshot,
    /// Trapezoidal ∫₀ᵗ D.
    pub dissipation_cum: f64,
    /// Trapezoidal ∫₀ᵗ P.
    pub external_cum: f64,
    /// [KE+EE](t) − [KE+EE](0) + ∫D − ∫P; `None` once suspended.
    pub balance_residual: Option<f64>,
}

impl EnergyRecord {
    /// KE + EE, +∞ when the elastic energy is.
    pub fn total(&self) -> Extended {
        match self.snapshot.elastic {
            Extended::Finite(e) => Extended::Finite(self.snapshot.kinetic + e),
            Extended::PosInfinity => Extended::PosInfinity,
        }
    }
}

/// Observer accumulating the energy balance.
pub struct EnergyLedger {
    model: Option<ConstitutiveModel>,
    pub records: Vec<EnergyRecord>,
}

impl EnergyLedger {
    /// Ledger with the simulator's own (regularized) model.
    pub fn new() -> Self {
        EnergyLedger { model: None, records: Vec::new() }
    }

    /// Ledger evaluating φ* and G with a different model.
    pub fn with_model(model: ConstitutiveModel) -> Self {
        EnergyLedger { model: Some(model), records: Vec::new() }
    }

    /// max_t |balance residual| over the steps where it is defined.
    pub fn balance_residual(&self) -> f64 {
        energy_balance_residual(&self.records)
    }

    /// Largest step-to-step increase of KE + EE beyond the local change of
    /// the balance residual (≤ 0 up to rounding for a dissipative run).
    pub fn max_energy_increase(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for w in self.records.windows(2) {
            if let (Extended::Finite(a), Extended::Finite(b), Some(ra), Some(rb)) =
                (w[0].total(), w[1].total(), w[0].balance_residual, w[1].balance_residual)
            {
                worst = worst.max((b - a) - (rb - ra).abs());
            }
        }
        worst
    }
}

impl Default for EnergyLedger {
    fn default() -> Self {
        Self::new()
    }
}

impl Observer for EnergyLedger {
    fn observe(&mut self, sim: &Simulator, state: &State) -> Result<()> {
        let model = self.model.unwrap_or(*sim.model());
        let snap = energy_snapshot(sim, state, &model);
        let record = match self.records.last() {
            None => EnergyRecord {
                snapshot: snap,
                dissipation_cum: 0.0,
                external_cum: 0.0,
                balance_residual: snap.dissipation_rate.and(snap.elastic.finite()).map(|_| 0.0),
            },
            Some(prev) => {
                let h = snap.t - prev.snapshot.t;
                let d_cum = match (prev.snapshot.dissipation_rate, snap.dissipation_rate) {
                    (Some(a), Some(b)) => prev.dissipation_cum + 0.5 * h * (a + b),
                    _ => f64::NAN,
                };
                let p_cum = prev.external_cum + 0.5 * h * (prev.snapshot.external_power + snap.external_power);
                let mut record = EnergyRecord { snapshot: snap, dissipation_cum: d_cum, external_cum: p_cum, balance_residual: None };
                if let (Some(_), Extended::Finite(e0), Extended::Finite(e)) =
                    (prev.balance_residual, self.records[0].total(), record.total())
                {
                    if d_cum.is_finite() {
                        record.balance_residual = Some(e - e0 + d_cum - p_cum);
                    }
                }
                record
            }
        };
        self.records.push(record);
        Ok(())
    }
}

/// max over recorded times of |balance residual|.
pub fn energy_balance_residual(records: &[EnergyRecord]) -> f64 {
    records.iter().filter_map(|r| r.balance_residual).fold(0.0, |m, r| m.max(r.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    /// max_qp |α ε + β ∂ₜε|
    pub max_strain_expr: f64,
    /// L − max_strain_expr (L of the unregularized map).
    pub margin: Extended,
    pub max_eps: f64,
    pub max_stress: f64,
}

/// Observer recording the strain-limit quantities.
#[derive(Default)]
pub struct StrainMonitor {
    pub records: Vec<MonitorRecord>,
}

impl StrainMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn max_strain_expr(&self) -> f64 {
        self.records.iter().map(|r| r.max_strain_expr).fold(0.0, f64::max)
    }

    pub fn max_stress(&self) -> f64 {
        self.records.iter().map(|r| r.max_stress).fold(0.0, f64::max)
    }
}

impl Observer for StrainMonitor {
    fn observe(&mut self, sim: &Simulator, state: &State) -> Result<()> {
        let m = sim.model();
        let k = sim.kinematics(state);
        let max_expr = k.eps.iter().zip(&k.eps_rate).map(|(e, r)| e.scale(m.alpha).axpy(m.beta, r).norm()).fold(0.0, f64::max);
        let max_eps = k.eps.iter().map(SymTensor::norm).fold(0.0, f64::max);
        let max_stress = state.stress.iter().map(SymTensor::norm).fold(0.0, f64::max);
        self.records.push(MonitorRecord {
            t: state.t,
            max_strain_expr: max_expr,
            margin: m.potential.limit().minus(max_expr),
            max_eps,
            max_stress,
        });
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyAxis {
    /// Mesh size h.
    MeshSize,
    /// Time step dt.
    TimeStep,
    /// Regularization index n.
    Regularization,
    /// Perturbation size δ.
    Perturbation,
}

impl StudyAxis {
    pub fn label(&self) -> &'static str {
        match self {
            StudyAxis::MeshSize => "h",
            StudyAxis::TimeStep => "dt",
            StudyAxis::Regularization => "n",
            StudyAxis::Perturbation => "delta",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub axis: StudyAxis,
    pub axis_values: Vec<f64>,
    /// Errors, differences or growth factors, one per axis value.
    pub values: Vec<f64>,
    /// |slope| of the least-squares fit of log(value) on log(axis).
    pub fitted_order: Option<f64>,
    /// Regularization sweep: max over time of the successive differences.
    pub max_in_time: Vec<f64>,
    /// Regularization sweep: successive differences strictly decreasing.
    pub cauchy: Option<bool>,
    /// Stability study: (max − min)/min of the growth factors.
    pub spread: Option<f64>,
    /// Stability study: C with C e^{C t_end} equal to the largest growth factor.
    pub growth_constant: Option<f64>,
}

impl ConvergenceReport {
    fn new(axis: StudyAxis, axis_values: Vec<f64>, values: Vec<f64>) -> Self {
        let fitted_order = fit_order(&axis_values, &values);
        ConvergenceReport {
            axis,
            axis_values,
            values,
            fitted_order,
            max_in_time: Vec::new(),
            cauchy: None,
            spread: None,
            growth_constant: None,
        }
    }

    /// Orders between consecutive samples.
    pub fn pairwise_orders(&self) -> Vec<f64> {
        (1..self.values.len())
            .map(|k| ((self.values[k - 1] / self.values[k]).ln() / (self.axis_values[k - 1] / self.axis_values[k]).ln()).abs())
            .collect()
    }
}

/// |slope| of the least-squares line through (ln x, ln y); needs ≥ 3
/// positive samples.
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| (sxy / sxx).abs())
}

fn study_err(label: String, e: Error) -> Error {
    Error::Study { label, source: Box::new(e) }
}

fn strictly_monotone(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0]) || x.windows(2).all(|w| w[1] < w[0])
}

fn coeff_diff(space: &FESpace, a: &[f64], b: &[f64]) -> f64 {
    space.l2_norm_coeffs(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

/// Runs the scenario for every n and reports ‖u_{n_{k+1}} − u_{n_k}‖_{L²} at
/// t_end (axis value n_{k+1}), with the maximum over recorded times.
pub fn regularization_sweep(scenario: &Scenario, config: &SolverConfig, n_list: &[u32]) -> Result<ConvergenceReport> {
    if n_list.len() < 3 {
        return Err(Error::Precondition(format!("regularization sweep needs >= 3 values of n (got {})", n_list.len())));
    }
    if !n_list.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Precondition("n_list must be strictly increasing".into()));
    }
    let space = FESpace::new(scenario.mesh.build()?);
    let mut cfg = *config;
    cfg.keep_states = true;
    let runs: Vec<Result<Trajectory>> = n_list
        .par_iter()
        .map(|&n| {
            let model = scenario.model.with_regularization(n, scenario.model.reg_kind)?;
            let sim = Simulator::new(scenario.with_model(model)?, space.clone())?;
            sim.run(&cfg, &mut [])
        })
        .collect();
    let runs: Vec<Trajectory> = runs
        .into_iter()
        .zip(n_list)
        .map(|(r, n)| r.map_err(|e| study_err(format!("n = {n}"), e)))
        .collect::<Result<_>>()?;

    let mut values = Vec::new();
    let mut max_in_time = Vec::new();
    for w in runs.windows(2) {
        values.push(coeff_diff(&space, &w[0].final_state.u, &w[1].final_state.u));
        max_in_time.push(
            w[0].states.iter().zip(&w[1].states).map(|(a, b)| coeff_diff(&space, &a.u, &b.u)).fold(0.0, f64::max),
        );
    }
    let axis: Vec<f64> = n_list[1..].iter().map(|&n| n as f64).collect();
    let mut report = ConvergenceReport::new(StudyAxis::Regularization, axis, values);
    report.cauchy = Some(report.values.windows(2).all(|w| w[1] < w[0]));
    report.max_in_time = max_in_time;
    Ok(report)
}

/// L² error against the exact solution at t_end for each level.
///
/// `MeshSize`: levels are cell counts per direction, run with `config.dt`.
/// `TimeStep`: levels are time steps on the scenario's mesh; since the
/// spatial error does not depend on dt, the error is measured against a
/// reference run with dt_min/4 on the same mesh.
pub fn refinement_study(scenario: &Scenario, axis: StudyAxis, levels: &[f64], config: &SolverConfig) -> Result<ConvergenceReport> {
    if levels.len() < 3 {
        return Err(Error::Precondition(format!("refinement study needs >= 3 levels (got {})", levels.len())));
    }
    if !strictly_monotone(levels) {
        return Err(Error::Precondition("refinement levels must be strictly monotone".into()));
    }
    let exact = scenario
        .exact
        .clone()
        .ok_or_else(|| Error::Precondition("refinement study needs a manufactured scenario".into()))?;
    match axis {
        StudyAxis::MeshSize => {
            let results: Vec<Result<(f64, f64)>> = levels
                .par_iter()
                .map(|&cells| {
                    let label = format!("cells = {cells}");
                    let mesh: MeshSpec = scenario.mesh.with_cells(cells as usize);
                    let sim = Simulator::from_scenario(scenario.with_mesh(mesh)).map_err(|e| study_err(label.clone(), e))?;
                    let tr = sim.run(config, &mut []).map_err(|e| study_err(label, e))?;
                    let field = sim.space().field_from_interior(&tr.final_state.u, Some(sim.scenario().lift.clone()));
                    Ok((sim.space().mesh().mesh_size(), sim.space().l2_error(&field, exact.as_ref(), tr.final_state.t)))
                })
                .collect();
            let (h, err): (Vec<f64>, Vec<f64>) = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
            Ok(ConvergenceReport::new(StudyAxis::MeshSize, h, err))
        }
        StudyAxis::TimeStep => {
            let sim = Simulator::from_scenario(scenario.clone())?;
            let dt_min = levels.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut all: Vec<f64> = levels.to_vec();
            all.push(0.25 * dt_min);
            let finals: Vec<Result<State>> = all
                .par_iter()
                .map(|&dt| {
                    let mut cfg = *config;
                    cfg.dt = dt;
                    sim.run(&cfg, &mut []).map(|t| t.final_state).map_err(|e| study_err(format!("dt = {dt}"), e))
                })
                .collect();
            let finals: Vec<State> = finals.into_iter().collect::<Result<_>>()?;
            let reference = finals.last().expect("reference run");
            let err = finals[..levels.len()].iter().map(|s| coeff_diff(sim.space(), &s.u, &reference.u)).collect();
            Ok(ConvergenceReport::new(StudyAxis::TimeStep, levels.to_vec(), err))
        }
        _ => Err(Error::InvalidInput(format!("refinement study does not support axis {}", axis.label()))),
    }
}

/// Unit-norm random direction in coefficient space.
fn random_direction(len: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// ‖ΔU(t_end)‖ + ‖ΔV(t_end)‖ between the run from rest and the run with V(0)
/// perturbed by δ times a seeded unit direction.
pub fn perturbation_difference(sim: &Simulator, config: &SolverConfig, delta: f64, seed: u64) -> Result<f64> {
    let base = sim.run(config, &mut [])?.final_state;
    perturbed_difference(sim, config, &base, delta, seed)
}

fn perturbed_difference(sim: &Simulator, config: &SolverConfig, base: &State, delta: f64, seed: u64) -> Result<f64> {
    let s0 = sim.initial_state()?;
    let dir = random_direction(s0.v.len(), seed);
    let v: Vec<f64> = s0.v.iter().zip(&dir).map(|(v, d)| v + delta * d).collect();
    let start = sim.state_at(0.0, s0.u.clone(), v, None)?;
    let end = sim.run_from(start, config, &mut [])?.final_state;
    let du: Vec<f64> = end.u.iter().zip(&base.u).map(|(a, b)| a - b).collect();
    let dv: Vec<f64> = end.v.iter().zip(&base.v).map(|(a, b)| a - b).collect();
    Ok(l2(&du) + l2(&dv))
}

/// Growth factors ‖Δ(t_end)‖/δ for each δ, their spread, and the Grönwall
/// constant C with C e^{C t_end} = max growth.
pub fn stability_study(sim: &Simulator, config: &SolverConfig, deltas: &[f64], seed: u64) -> Result<ConvergenceReport> {
    if deltas.len() < 3 {
        return Err(Error::Precondition(format!("stability study needs >= 3 perturbation sizes (got {})", deltas.len())));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::Precondition("perturbation sizes must be > 0".into()));
    }
    let base = sim.run(config, &mut [])?.final_state;
    let growth: Vec<Result<f64>> = deltas
        .par_iter()
        .map(|&d| {
            perturbed_difference(sim, config, &base, d, seed).map(|x| x / d).map_err(|e| study_err(format!("delta = {d:e}"), e))
        })
        .collect();
    let growth: Vec<f64> = growth.into_iter().collect::<Result<_>>()?;
    let lo = growth.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = growth.iter().cloned().fold(0.0, f64::max);
    let mut report = ConvergenceReport::new(StudyAxis::Perturbation, deltas.to_vec(), growth);
    report.spread = Some((hi - lo) / lo);
    report.growth_constant = Some(gronwall_constant(hi, config.t_end));
    Ok(report)
}

/// Smallest C ≥ 0 with C e^{C t} ≥ g (C = g when t = 0).
fn gronwall_constant(g: f64, t: f64) -> f64 {
    if t == 0.0 || g <= 0.0 {
        return g.max(0.0);
    }
    let f = |c: f64| c * (c * t).exp() - g;
    let mut hi = g.max(1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
