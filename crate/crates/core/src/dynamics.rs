//! Time integration of the semi-discrete Galerkin system.
//!
//! With u = u₀ + Σ Uⱼ ωⱼ the system is first order in (U, V):
//!
//! ```text
//! U' = V,   M V' = F_f(t) − S(t, U, V) − M₀(t)
//! ```
//!
//! where S assembles ∫ T·ε(ωⱼ) with T = G_n⁻¹(α ε(u) + β ε(∂ₜu)) at every
//! quadrature point and M₀ is the lift inertia ∫ ∂ₜₜu₀·ωⱼ.

use rayon::prelude::*;

use crate::constitutive::ConstitutiveModel;
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::fespace::{BandedCholesky, BandedSym, FESpace};
use crate::field::{Grad, Vector};
use crate::scenarios::{lift_strain_expression, Scenario, DEFAULT_TIME_SAMPLES};
use crate::symtensor::{PackedOperator, SymTensor};

/// Quadrature-point count above which inversions run on the rayon pool.
const PAR_THRESHOLD: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    ImplicitMidpoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Newton increment tolerance of the midpoint solve (relative, max-norm).
    pub midpoint_tol: f64,
    pub midpoint_max_iter: usize,
    /// Record per-qp ε and G_n(T) at every step.
    pub record_history: bool,
    /// Keep every state in the trajectory.
    pub keep_states: bool,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be > 0 (got {dt})")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidInput(format!("t_end must be >= 0 (got {t_end})")));
        }
        Ok(SolverConfig {
            dt,
            t_end,
            scheme,
            midpoint_tol: 1e-11,
            midpoint_max_iter: 50,
            record_history: false,
            keep_states: false,
        })
    }

    /// Step sizes reaching `t_end`, with a final partial step if needed.
    pub fn step_times(&self) -> Vec<f64> {
        let ratio = self.t_end / self.dt;
        let full = (ratio * (1.0 + 1e-12)).floor() as usize;
        let mut times: Vec<f64> = (1..=full).map(|k| k as f64 * self.dt).collect();
        if let Some(last) = times.last_mut() {
            if (*last - self.t_end).abs() <= 1e-9 * self.dt {
                *last = self.t_end;
            }
        }
        if times.last().map_or(self.t_end > 0.0, |&t| t < self.t_end) {
            times.push(self.t_end);
        }
        times
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Stress per quadrature point consistent with (t, u, v).
    pub stress: Vec<SymTensor>,
}

/// Lift data at one time, per quadrature point.
struct LiftAt {
    grad: Vec<Grad>,
    dt_grad: Option<Vec<Grad>>,
    /// M₀(t); `None` when the lift is static.
    inertia: Option<Vec<f64>>,
    /// F_f(t); `None` when f ≡ 0.
    forcing: Option<Vec<f64>>,
}

/// Strain, strain rate and velocity per quadrature point.
#[derive(Clone, Debug)]
pub struct Kinematics {
    pub eps: Vec<SymTensor>,
    pub eps_rate: Vec<SymTensor>,
    pub velocity: Vec<Vector>,
}

/// Per-qp history used by the integrating-factor check.
#[derive(Clone, Debug, Default)]
pub struct StrainHistory {
    pub times: Vec<f64>,
    pub eps: Vec<Vec<SymTensor>>,
    /// G_n(T) = α ε + β ∂ₜε per qp.
    pub g: Vec<Vec<SymTensor>>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub final_state: State,
    pub states: Vec<State>,
    pub history: Option<StrainHistory>,
}

/// Called with the initial state and after every step.
pub trait Observer {
    fn observe(&mut self, sim: &Simulator, state: &State) -> Result<()>;
}

/// A scenario discretized on a finite-element space.
pub struct Simulator {
    scenario: Scenario,
    space: FESpace,
    mass: BandedSym,
    mass_chol: BandedCholesky,
    static_grad: Option<Vec<Grad>>,
}

impl Simulator {
    pub fn new(scenario: Scenario, space: FESpace) -> Result<Self> {
        if scenario.mesh.dim() != space.dim() {
            return Err(Error::InvalidInput("scenario and space dimensions differ".into()));
        }
        if space.n_dofs() == 0 {
            return Err(Error::InvalidInput("mesh has no interior degrees of freedom".into()));
        }
        let mass = space.assemble_mass();
        let mass_chol = mass.cholesky()?;
        let static_grad = scenario
            .lift
            .is_static()
            .then(|| space.quad_points().iter().map(|q| scenario.lift.grad(0.0, q.x)).collect());
        Ok(Simulator { scenario, space, mass, mass_chol, static_grad })
    }

    /// Builds the space from the scenario's mesh spec.
    pub fn from_scenario(scenario: Scenario) -> Result<Self> {
        let space = FESpace::new(scenario.mesh.build()?);
        Self::new(scenario, space)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn space(&self) -> &FESpace {
        &self.space
    }

    pub fn model(&self) -> &ConstitutiveModel {
        &self.scenario.model
    }

    pub fn mass(&self) -> &BandedSym {
        &self.mass
    }

    fn lift_at(&self, t: f64) -> LiftAt {
        let qps = self.space.quad_points();
        let lift = &self.scenario.lift;
        let (grad, dt_grad, inertia) = match &self.static_grad {
            Some(g) => (g.clone(), None, None),
            None => {
                let acc: Vec<Vector> = qps.iter().map(|q| lift.dtt_value(t, q.x)).collect();
                (
                    qps.iter().map(|q| lift.grad(t, q.x)).collect(),
                    Some(qps.iter().map(|q| lift.dt_grad(t, q.x)).collect()),
                    Some(self.space.assemble_vector_load(&acc)),
                )
            }
        };
        let forcing =
            (!self.scenario.forcing_is_zero).then(|| self.space.assemble_forcing(self.scenario.forcing.as_ref(), t));
        LiftAt { grad, dt_grad, inertia, forcing }
    }

    fn kinematics_with(&self, lift: &LiftAt, u: &[f64], v: &[f64]) -> (Vec<SymTensor>, Vec<SymTensor>) {
        let eps = self.space.strain_at_qp(u, Some(&lift.grad));
        let rate = self.space.strain_at_qp(v, lift.dt_grad.as_deref());
        (eps, rate)
    }

    fn strain_expression(&self, lift: &LiftAt, u: &[f64], v: &[f64]) -> Vec<SymTensor> {
        let m = &self.scenario.model;
        let (eps, rate) = self.kinematics_with(lift, u, v);
        eps.iter().zip(&rate).map(|(e, r)| e.scale(m.alpha).axpy(m.beta, r)).collect()
    }

    /// ε(u), ∂ₜε(u) and ∂ₜu at the quadrature points of `state`.
    pub fn kinematics(&self, state: &State) -> Kinematics {
        let lift = self.lift_at_kinematic(state.t);
        let (eps, eps_rate) = self.kinematics_with(&lift, &state.u, &state.v);
        let mut velocity = self.space.values_at_qp(&state.v);
        if !self.scenario.lift.is_static() {
            for (w, q) in velocity.iter_mut().zip(self.space.quad_points()) {
                let d = self.scenario.lift.dt_value(state.t, q.x);
                w[0] += d[0];
                w[1] += d[1];
            }
        }
        Kinematics { eps, eps_rate, velocity }
    }

    fn lift_at_kinematic(&self, t: f64) -> LiftAt {
        let qps = self.space.quad_points();
        let lift = &self.scenario.lift;
        match &self.static_grad {
            Some(g) => LiftAt { grad: g.clone(), dt_grad: None, inertia: None, forcing: None },
            None => LiftAt {
                grad: qps.iter().map(|q| lift.grad(t, q.x)).collect(),
                dt_grad: Some(qps.iter().map(|q| lift.dt_grad(t, q.x)).collect()),
                inertia: None,
                forcing: None,
            },
        }
    }

    /// T = G_n⁻¹(E) at every quadrature point, warm-started from `warm`.
    fn invert_all(&self, t: f64, e: &[SymTensor], warm: Option<&[SymTensor]>) -> Result<Vec<SymTensor>> {
        let model = &self.scenario.model;
        let one = |k: usize| model.invert_warm(&e[k], warm.map(|w| w[k].norm()));
        let results: Vec<Result<SymTensor>> = if e.len() >= PAR_THRESHOLD {
            (0..e.len()).into_par_iter().map(one).collect()
        } else {
            (0..e.len()).map(one).collect()
        };
        let qps = self.space.quad_points();
        results
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                r.map_err(|source| Error::AtQuadraturePoint { t, qp: k, x: qps[k].x, source: Box::new(source) })
            })
            .collect()
    }

    /// Solves M a = F_f − S − M₀.
    fn acceleration(&self, lift: &LiftAt, stress: &[SymTensor]) -> Vec<f64> {
        let mut rhs = self.space.assemble_stress_load(stress);
        for r in rhs.iter_mut() {
            *r = -*r;
        }
        if let Some(f) = &lift.forcing {
            rhs.iter_mut().zip(f).for_each(|(r, x)| *r += x);
        }
        if let Some(m0) = &lift.inertia {
            rhs.iter_mut().zip(m0).for_each(|(r, x)| *r -= x);
        }
        self.mass_chol.solve_in_place(&mut rhs);
        rhs
    }

    /// C(0) = ∂ₜC(0) = 0 with the consistent stress.
    pub fn initial_state(&self) -> Result<State> {
        self.state_at(0.0, vec![0.0; self.space.n_dofs()], vec![0.0; self.space.n_dofs()], None)
    }

    /// State with its stress computed from (t, u, v).
    pub fn state_at(&self, t: f64, u: Vec<f64>, v: Vec<f64>, warm: Option<&[SymTensor]>) -> Result<State> {
        let n = self.space.n_dofs();
        if u.len() != n || v.len() != n {
            return Err(Error::InvalidInput(format!("state vectors must have length {n}")));
        }
        let lift = self.lift_at_kinematic(t);
        let e = self.strain_expression(&lift, &u, &v);
        let stress = self.invert_all(t, &e, warm)?;
        Ok(State { t, u, v, stress })
    }

    /// (dU, dV) at `state`, with the stress recomputed (warm-started from the
    /// cached one). Returns the fresh stress as well.
    pub fn rhs(&self, state: &State) -> Result<(Vec<f64>, Vec<f64>, Vec<SymTensor>)> {
        let lift = self.lift_at(state.t);
        let e = self.strain_expression(&lift, &state.u, &state.v);
        let stress = self.invert_all(state.t, &e, Some(&state.stress))?;
        let dv = self.acceleration(&lift, &stress);
        Ok((state.v.clone(), dv, stress))
    }

    /// dV at `state` using its cached stress.
    fn cached_acceleration(&self, state: &State) -> Vec<f64> {
        self.acceleration(&self.lift_at(state.t), &state.stress)
    }

    fn stage(&self, t: f64, u: &[f64], v: &[f64], warm: &[SymTensor]) -> Result<Vec<f64>> {
        let lift = self.lift_at(t);
        let e = self.strain_expression(&lift, u, v);
        let stress = self.invert_all(t, &e, Some(warm))?;
        Ok(self.acceleration(&lift, &stress))
    }

    /// Classical RK4 step.
    pub fn step_rk4(&self, state: &State, dt: f64) -> Result<State> {
        let (t, u, v) = (state.t, &state.u, &state.v);
        let comb = |x: &[f64], s: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a + s * b).collect() };

        let a1 = self.cached_acceleration(state);
        let (u2, v2) = (comb(u, 0.5 * dt, v), comb(v, 0.5 * dt, &a1));
        let a2 = self.stage(t + 0.5 * dt, &u2, &v2, &state.stress)?;
        let (u3, v3) = (comb(u, 0.5 * dt, &v2), comb(v, 0.5 * dt, &a2));
        let a3 = self.stage(t + 0.5 * dt, &u3, &v3, &state.stress)?;
        let (u4, v4) = (comb(u, dt, &v3), comb(v, dt, &a3));
        let a4 = self.stage(t + dt, &u4, &v4, &state.stress)?;

        let n = u.len();
        let mut un = vec![0.0; n];
        let mut vn = vec![0.0; n];
        for j in 0..n {
            un[j] = u[j] + dt / 6.0 * (v[j] + 2.0 * v2[j] + 2.0 * v3[j] + v4[j]);
            vn[j] = v[j] + dt / 6.0 * (a1[j] + 2.0 * a2[j] + 2.0 * a3[j] + a4[j]);
        }
        self.state_at(t + dt, un, vn, Some(&state.stress))
    }

    /// Implicit midpoint step. The midpoint velocity W = (V₀ + V₁)/2 solves
    ///
    /// ```text
    /// R(W) = (2/dt) M (W − V₀) + S(t½, U₀ + dt/2·W, W) − F_f(t½) + M₀(t½) = 0
    /// ```
    ///
    /// by Newton's method with the consistent tangent
    /// (2/dt) M + (α dt/2 + β) K(dT/dE), with backtracking on ‖R‖.
    pub fn step_midpoint(&self, state: &State, dt: f64, tol: f64, max_iter: usize) -> Result<State> {
        let model = self.scenario.model;
        let tm = state.t + 0.5 * dt;
        let lift = self.lift_at(tm);
        let n = state.u.len();
        let mass_scale = 2.0 / dt;
        let tangent_scale = model.alpha * 0.5 * dt + model.beta;

        let external: Vec<f64> = {
            let mut x = vec![0.0; n];
            if let Some(f) = &lift.forcing {
                x.iter_mut().zip(f).for_each(|(a, b)| *a += b);
            }
            if let Some(m0) = &lift.inertia {
                x.iter_mut().zip(m0).for_each(|(a, b)| *a -= b);
            }
            x
        };

        let residual = |w: &[f64], warm: &[SymTensor]| -> Result<(Vec<f64>, Vec<SymTensor>)> {
            let um: Vec<f64> = state.u.iter().zip(w).map(|(u, w)| u + 0.5 * dt * w).collect();
            let e = self.strain_expression(&lift, &um, w);
            let stress = self.invert_all(tm, &e, Some(warm))?;
            let dw: Vec<f64> = w.iter().zip(&state.v).map(|(a, b)| a - b).collect();
            let mut r = self.mass.matvec(&dw);
            let s = self.space.assemble_stress_load(&stress);
            for j in 0..n {
                r[j] = mass_scale * r[j] + s[j] - external[j];
            }
            Ok((r, stress))
        };
        let max_abs = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        // predictor: W ≈ V₀ + dt/2 · a(t₀)
        let a0 = self.cached_acceleration(state);
        let mut w: Vec<f64> = state.v.iter().zip(&a0).map(|(v, a)| v + 0.5 * dt * a).collect();
        let (mut r, mut stress) = residual(&w, &state.stress)?;
        let mut rn = max_abs(&r);
        let mut trace = vec![rn];

        let mut converged = false;
        for _ in 0..max_iter {
            let ops: Vec<PackedOperator> = stress.iter().map(|t| model.g_jacobian_inverse(t)).collect();
            let jac = self.mass.combine(mass_scale, &self.space.assemble_tangent(&ops, tangent_scale), 1.0);
            let delta = jac.cholesky()?.solve(&r);
            let step_size = max_abs(&delta);
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = w.iter().zip(&delta).map(|(a, d)| a - lambda * d).collect();
                let (tr, ts) = residual(&trial, &stress)?;
                let trn = max_abs(&tr);
                let small = lambda * step_size <= tol * (1.0 + max_abs(&trial));
                if trn <= (1.0 - 1e-4 * lambda) * rn || small || lambda < 1e-3 {
                    w = trial;
                    r = tr;
                    rn = trn;
                    stress = ts;
                    break;
                }
                lambda *= 0.5;
            }
            trace.push(rn);
            if lambda * step_size <= tol * (1.0 + max_abs(&w)) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::MidpointNoConvergence { t: state.t, iterations: max_iter, trace });
        }

        let vn: Vec<f64> = w.iter().zip(&state.v).map(|(w, v)| 2.0 * w - v).collect();
        let un: Vec<f64> = state.u.iter().zip(&w).map(|(u, w)| u + dt * w).collect();
        self.state_at(state.t + dt, un, vn, Some(&stress))
    }

    pub fn step(&self, state: &State, dt: f64, config: &SolverConfig) -> Result<State> {
        match config.scheme {
            Scheme::Rk4 => self.step_rk4(state, dt),
            Scheme::ImplicitMidpoint => self.step_midpoint(state, dt, config.midpoint_tol, config.midpoint_max_iter),
        }
    }

    /// L − sup |α ε(u₀) + β ∂ₜε(u₀)| over [0, t_end] × quadrature points.
    pub fn safety_margin(&self, t_end: f64) -> Extended {
        let limit = match self.scenario.model.potential.limit() {
            Extended::Finite(l) => l,
            Extended::PosInfinity => return Extended::PosInfinity,
        };
        let samples = if t_end > 0.0 { DEFAULT_TIME_SAMPLES } else { 1 };
        let dim = self.space.dim();
        let mut sup: f64 = 0.0;
        for k in 0..samples {
            let t = if samples == 1 { 0.0 } else { t_end * k as f64 / (samples - 1) as f64 };
            for q in self.space.quad_points() {
                let e = lift_strain_expression(self.scenario.lift.as_ref(), &self.scenario.model, dim, t, q.x);
                sup = sup.max(e.norm());
            }
        }
        Extended::Finite(limit - sup)
    }

    /// Runs from rest; rejects data violating the safety strain condition.
    pub fn run(&self, config: &SolverConfig, observers: &mut [&mut dyn Observer]) -> Result<Trajectory> {
        if let Extended::Finite(margin) = self.safety_margin(config.t_end) {
            if margin <= 0.0 {
                return Err(Error::SafetyCondition { margin });
            }
        }
        self.run_from(self.initial_state()?, config, observers)
    }

    /// Runs from an arbitrary state (used by perturbation studies).
    pub fn run_from(&self, initial: State, config: &SolverConfig, observers: &mut [&mut dyn Observer]) -> Result<Trajectory> {
        let mut history = config.record_history.then(StrainHistory::default);
        let mut states = Vec::new();
        let mut times = vec![initial.t];
        let mut record = |sim: &Simulator, s: &State, observers: &mut [&mut dyn Observer]| -> Result<()> {
            for o in observers.iter_mut() {
                o.observe(sim, s)?;
            }
            if let Some(h) = history.as_mut() {
                let k = sim.kinematics(s);
                h.times.push(s.t);
                h.g.push(k.eps.iter().zip(&k.eps_rate).map(|(e, r)| e.scale(sim.model().alpha).axpy(sim.model().beta, r)).collect());
                h.eps.push(k.eps);
            }
            if config.keep_states {
                states.push(s.clone());
            }
            Ok(())
        };
        record(self, &initial, observers)?;
        let mut state = initial;
        let t0 = state.t;
        for t_next in config.step_times() {
            let t_next = t0 + t_next;
            let dt = t_next - state.t;
            let mut next = self.step(&state, dt, config)?;
            next.t = t_next;
            record(self, &next, observers)?;
            times.push(t_next);
            state = next;
        }
        Ok(Trajectory { times, final_state: state, states, history })
    }
}

/// 1 − e^{−x}(1 + x), accurate for small x.
fn one_minus_exp_poly(x: f64) -> f64 {
    if x < 0.1 {
        // Σ_{k≥2} (−1)^k (k − 1) x^k / k!
        let mut sum = 0.0;
        let mut term = x; // x^k / k! at k = 1
        for k in 2..20 {
            term *= x / k as f64;
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += s * (k - 1) as f64 * term;
        }
        sum
    } else {
        1.0 - (-x).exp() * (1.0 + x)
    }
}

/// max over qp of |ε(t_end) − ε_rec(t_end)| where
/// ε_rec(t) = e^{−αt/β} ε(0) + β⁻¹ ∫₀ᵗ e^{−α(t−τ)/β} G_n(T(τ)) dτ,
/// integrating the recorded G_n(T) history as piecewise linear in time
/// against the exact exponential kernel.
pub fn strain_history_residual(trajectory: &Trajectory, model: &ConstitutiveModel) -> Result<f64> {
    let h = trajectory
        .history
        .as_ref()
        .ok_or_else(|| Error::Precondition("trajectory has no recorded strain history".into()))?;
    if h.times.is_empty() {
        return Err(Error::Precondition("empty strain history".into()));
    }
    let a = model.alpha / model.beta;
    let n_qp = h.eps[0].len();
    let mut integral: Vec<SymTensor> = h.eps[0].iter().map(|e| SymTensor::zero(e.dim())).collect();
    for k in 0..h.times.len() - 1 {
        let step = h.times[k + 1] - h.times[k];
        let x = a * step;
        let decay = (-x).exp();
        let w0 = one_minus_exp_poly(x) / (a * x);
        let w1 = -(-x).exp_m1() / a - w0;
        for q in 0..n_qp {
            integral[q] = integral[q].scale(decay).axpy(w0, &h.g[k][q]).axpy(w1, &h.g[k + 1][q]);
        }
    }
    let t = h.times[h.times.len() - 1] - h.times[0];
    let decay = (-a * t).exp();
    let last = h.eps.len() - 1;
    Ok((0..n_qp)
        .map(|q| {
            let rec = h.eps[0][q].scale(decay).axpy(1.0 / model.beta, &integral[q]);
            (h.eps[last][q] - rec).norm()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{Regularization, ScalarPotential};
    use crate::field::{AffineField, ZeroField};
    use crate::fespace::Mesh;
    use crate::scenarios::{gaussian_pluck, lift_static_bc, standing_wave, MeshSpec};
    use std::sync::Arc;

    fn proto(n: u32) -> ConstitutiveModel {
        ConstitutiveModel::new(ScalarPotential::Prototype { q: 2.0 }, 1.0, 1.0)
            .unwrap()
            .with_regularization(n, Regularization::LinearTikhonov)
            .unwrap()
    }

    fn linear(alpha: f64, beta: f64) -> ConstitutiveModel {
        ConstitutiveModel::new(ScalarPotential::power_law(2.0).unwrap(), alpha, beta).unwrap()
    }

    fn rest(mesh: MeshSpec, model: ConstitutiveModel) -> Scenario {
        let mut s = gaussian_pluck(mesh, model, 0.3, 1.0).unwrap();
        s.lift = Arc::new(ZeroField);
        s
    }

    #[test]
    fn step_times_cover_partial_step() {
        let c = SolverConfig::new(0.3, 1.0, Scheme::Rk4).unwrap();
        let t = c.step_times();
        assert_eq!(t.len(), 4);
        assert_eq!(*t.last().unwrap(), 1.0);
        let c = SolverConfig::new(0.1, 1.0, Scheme::Rk4).unwrap();
        assert_eq!(c.step_times().len(), 10);
        assert_eq!(*c.step_times().last().unwrap(), 1.0);
        assert!(SolverConfig::new(0.1, 0.0, Scheme::Rk4).unwrap().step_times().is_empty());
        assert!(SolverConfig::new(0.0, 1.0, Scheme::Rk4).is_err());
    }

    #[test]
    fn rest_state_is_stationary() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 8 };
        let sim = Simulator::from_scenario(rest(mesh, proto(16))).unwrap();
        let s0 = sim.initial_state().unwrap();
        let (du, dv, _) = sim.rhs(&s0).unwrap();
        assert!(du.iter().chain(&dv).all(|x| *x == 0.0));
        let s1 = sim.step_rk4(&s0, 0.1).unwrap();
        assert_eq!((s1.u.clone(), s1.v.clone()), (s0.u.clone(), s0.v.clone()));
        let s2 = sim.step_midpoint(&s0, 0.1, 1e-11, 50).unwrap();
        assert_eq!((s2.u, s2.v), (s0.u, s0.v));
        assert_eq!(s2.t, 0.1);
    }

    #[test]
    fn linear_rhs_matches_direct_operator() {
        let (alpha, beta) = (1.3, 0.4);
        let mesh = MeshSpec::Rectangle { a: 0.0, b: 1.0, c: 0.0, d: 1.0, nx: 4, ny: 3 };
        let sim = Simulator::from_scenario(rest(mesh, linear(alpha, beta))).unwrap();
        let space = sim.space();
        let n = space.n_dofs();
        let u: Vec<f64> = (0..n).map(|i| (0.7 * i as f64).sin() * 0.01).collect();
        let v: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos() * 0.01).collect();
        let state = sim.state_at(0.0, u.clone(), v.clone(), None).unwrap();
        let (_, dv, _) = sim.rhs(&state).unwrap();

        let ops = vec![PackedOperator::scaled_identity(2, 1.0); space.n_qp()];
        let k = space.assemble_tangent(&ops, 1.0);
        let mut rhs: Vec<f64> = k.matvec(&u).iter().zip(k.matvec(&v)).map(|(a, b)| -(alpha * a + beta * b)).collect();
        space.assemble_mass().cholesky().unwrap().solve_in_place(&mut rhs);
        for (a, b) in dv.iter().zip(&rhs) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn single_dof_reduction() {
        // two cells on [0, 2]: one hat, M = 2/3, K = 2 (stiffness of the hat)
        let (alpha, beta) = (2.0, 0.5);
        let mesh = MeshSpec::Interval { a: 0.0, b: 2.0, cells: 2 };
        let sim = Simulator::from_scenario(rest(mesh, linear(alpha, beta))).unwrap();
        assert_eq!(sim.space().n_dofs(), 1);
        let state = sim.state_at(0.0, vec![0.3], vec![-0.2], None).unwrap();
        let (du, dv, _) = sim.rhs(&state).unwrap();
        assert_eq!(du, vec![-0.2]);
        let expected = -(2.0 * (alpha * 0.3 + beta * -0.2)) / (2.0 / 3.0);
        assert!((dv[0] - expected).abs() <= 1e-12);
    }

    fn wave_run(scheme: Scheme, dt: f64, cells: usize) -> f64 {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells };
        let s = standing_wave(mesh, proto(16), 0.1, 2.0, 0.5).unwrap();
        let exact = s.exact.clone().unwrap();
        let sim = Simulator::from_scenario(s).unwrap();
        let cfg = SolverConfig::new(dt, 0.5, scheme).unwrap();
        let tr = sim.run(&cfg, &mut []).unwrap();
        let f = sim.space().field_from_interior(&tr.final_state.u, Some(sim.scenario().lift.clone()));
        sim.space().l2_error(&f, exact.as_ref(), 0.5)
    }

    #[test]
    fn midpoint_self_convergence_is_second_order() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 16 };
        // weak damping keeps the excited viscous rates below 1/dt
        let model = ConstitutiveModel::new(ScalarPotential::Prototype { q: 2.0 }, 1.0, 0.05)
            .unwrap()
            .with_regularization(16, Regularization::LinearTikhonov)
            .unwrap();
        let sim = Simulator::from_scenario(gaussian_pluck(mesh, model, 0.3, 0.4).unwrap()).unwrap();
        let finals: Vec<Vec<f64>> = [0.04, 0.02, 0.01, 0.005]
            .iter()
            .map(|&dt| sim.run(&SolverConfig::new(dt, 0.4, Scheme::ImplicitMidpoint).unwrap(), &mut []).unwrap().final_state.u)
            .collect();
        let diff = |a: &[f64], b: &[f64]| sim.space().l2_norm_coeffs(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
        let d1 = diff(&finals[0], &finals[1]);
        let d2 = diff(&finals[1], &finals[2]);
        let d3 = diff(&finals[2], &finals[3]);
        for order in [(d1 / d2).log2(), (d2 / d3).log2()] {
            assert!((order - 2.0).abs() <= 0.2, "order {order}");
        }
    }

    #[test]
    fn rk4_self_convergence_is_fourth_order() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 8 };
        let s = gaussian_pluck(mesh, linear(1.0, 0.01), 0.3, 0.5).unwrap();
        let sim = Simulator::from_scenario(s).unwrap();
        let finals: Vec<Vec<f64>> = [0.02, 0.01, 0.005, 0.0025]
            .iter()
            .map(|&dt| sim.run(&SolverConfig::new(dt, 0.5, Scheme::Rk4).unwrap(), &mut []).unwrap().final_state.u)
            .collect();
        let diff = |a: &[f64], b: &[f64]| sim.space().l2_norm_coeffs(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
        let order = (diff(&finals[0], &finals[1]) / diff(&finals[1], &finals[2])).log2();
        assert!((order - 4.0).abs() <= 0.3, "order {order}");
    }

    #[test]
    fn manufactured_error_shrinks_with_refinement() {
        let coarse = wave_run(Scheme::ImplicitMidpoint, 0.01, 16);
        let fine = wave_run(Scheme::ImplicitMidpoint, 0.005, 32);
        assert!(fine < 0.3 * coarse, "{coarse} -> {fine}");
    }

    #[test]
    fn zero_horizon_has_single_record() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 8 };
        let sim = Simulator::from_scenario(gaussian_pluck(mesh, proto(16), 0.3, 0.0).unwrap()).unwrap();
        let tr = sim.run(&SolverConfig::new(0.1, 0.0, Scheme::ImplicitMidpoint).unwrap(), &mut []).unwrap();
        assert_eq!(tr.times, vec![0.0]);
    }

    #[test]
    fn supercritical_data_is_rejected() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 8 };
        let mut s = gaussian_pluck(mesh, proto(16), 0.3, 1.0).unwrap();
        s.lift = Arc::new(AffineField { offset: [0.0; 2], matrix: [[1.5, 0.0], [0.0, 0.0]] });
        let sim = Simulator::from_scenario(s).unwrap();
        let err = sim.run(&SolverConfig::new(0.1, 1.0, Scheme::Rk4).unwrap(), &mut []).unwrap_err();
        assert!(matches!(err, Error::SafetyCondition { margin } if (margin + 0.5).abs() < 1e-12));
    }

    #[test]
    fn unregularized_inversion_error_names_the_point() {
        let mesh = Mesh::interval(0.0, 1.0, 4).unwrap();
        let s = gaussian_pluck(MeshSpec::Interval { a: 0.0, b: 1.0, cells: 4 }, proto(16).unregularized(), 0.3, 1.0).unwrap();
        let sim = Simulator::new(s, FESpace::new(mesh)).unwrap();
        let err = sim.state_at(0.0, vec![0.0, 0.0, 0.0], vec![5.0, 0.0, 0.0], None).unwrap_err();
        match err {
            Error::AtQuadraturePoint { qp, source, .. } => {
                assert!(qp < 4);
                assert!(matches!(*source, Error::NoRegularizerAndSupercritical { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn history_residual_is_exact_for_constant_strain() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 8 };
        let model = proto(16);
        let mut s = gaussian_pluck(mesh, model, 0.3, 1.0).unwrap();
        let ramp = Arc::new(AffineField { offset: [0.1, 0.0], matrix: [[0.4, 0.0], [0.0, 0.0]] });
        s.lift = lift_static_bc(ramp, None, model.alpha, model.beta);
        let sim = Simulator::from_scenario(s).unwrap();
        let mut cfg = SolverConfig::new(0.05, 1.0, Scheme::ImplicitMidpoint).unwrap();
        cfg.record_history = true;
        let tr = sim.run(&cfg, &mut []).unwrap();
        assert!(strain_history_residual(&tr, &model).unwrap() <= 1e-9);

        let mut cfg = SolverConfig::new(0.05, 0.05, Scheme::ImplicitMidpoint).unwrap();
        cfg.record_history = true;
        let rest_sim = Simulator::from_scenario(rest(mesh, model)).unwrap();
        assert_eq!(strain_history_residual(&rest_sim.run(&cfg, &mut []).unwrap(), &model).unwrap(), 0.0);

        cfg.record_history = false;
        assert!(strain_history_residual(&rest_sim.run(&cfg, &mut []).unwrap(), &model).is_err());
    }

    #[test]
    fn exp_poly_series_matches_direct() {
        for x in [0.05, 0.09] {
            assert!((one_minus_exp_poly(x) - (1.0 - (-x).exp() * (1.0 + x))).abs() < 1e-15);
        }
        let x: f64 = 1e-6;
        assert!((one_minus_exp_poly(x) - (0.5 * x * x - x * x * x / 3.0)).abs() <= 1e-9 * x * x);
    }

    #[test]
    fn runs_are_deterministic() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 16 };
        let sim = Simulator::from_scenario(gaussian_pluck(mesh, proto(64), 0.3, 0.2).unwrap()).unwrap();
        let cfg = SolverConfig::new(0.01, 0.2, Scheme::ImplicitMidpoint).unwrap();
        let a = sim.run(&cfg, &mut []).unwrap();
        let b = sim.run(&cfg, &mut []).unwrap();
        assert_eq!(a.final_state, b.final_state);
    }
}
