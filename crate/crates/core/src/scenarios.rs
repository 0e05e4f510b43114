//! Problem data: Dirichlet/initial lifts, the safety strain condition,
//! built-in scenarios and manufactured solutions.
//!
//! A lift u₀ carries both the boundary values and the initial data: the
//! simulated displacement is u = u₀ + Σ Cⱼ ωⱼ with C(0) = ∂ₜC(0) = 0.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::constitutive::ConstitutiveModel;
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::fespace::{grad_to_strain, FESpace, Mesh};
use crate::field::{
    grad_axpy, vec_axpy, AnalyticField, Grad, SharedField, SharedForcing, Vector, VectorField, ZeroField,
    ZERO_GRAD, ZERO_VEC,
};
use crate::symtensor::SymTensor;

/// Default number of time samples for sup-norms over Q.
pub const DEFAULT_TIME_SAMPLES: usize = 64;

/// Guard factor for manufactured solutions: sup |αε + β∂ₜε| < 0.95 L.
pub const MANUFACTURED_GUARD: f64 = 0.95;

/// Lift for time-independent boundary data:
/// u₀(t) = e^{−αt/β} u_I + (α u_I + β v₀)/α · (1 − e^{−αt/β}).
pub struct StaticLift {
    u_i: SharedField,
    v0: SharedField,
    alpha: f64,
    beta: f64,
    v0_is_zero: bool,
}

impl StaticLift {
    fn rate(&self) -> f64 {
        self.alpha / self.beta
    }
}

impl VectorField for StaticLift {
    fn value(&self, t: f64, x: Vector) -> Vector {
        let s = -(-self.rate() * t).exp_m1();
        vec_axpy(&self.u_i.value(0.0, x), self.beta / self.alpha * s, &self.v0.value(0.0, x))
    }
}

impl AnalyticField for StaticLift {
    fn grad(&self, t: f64, x: Vector) -> Grad {
        let s = -(-self.rate() * t).exp_m1();
        grad_axpy(&self.u_i.grad(0.0, x), self.beta / self.alpha * s, &self.v0.grad(0.0, x))
    }
    fn dt_value(&self, t: f64, x: Vector) -> Vector {
        vec_axpy(&ZERO_VEC, (-self.rate() * t).exp(), &self.v0.value(0.0, x))
    }
    fn dt_grad(&self, t: f64, x: Vector) -> Grad {
        grad_axpy(&ZERO_GRAD, (-self.rate() * t).exp(), &self.v0.grad(0.0, x))
    }
    fn dtt_value(&self, t: f64, x: Vector) -> Vector {
        vec_axpy(&ZERO_VEC, -self.rate() * (-self.rate() * t).exp(), &self.v0.value(0.0, x))
    }
    fn time_smoothness(&self) -> u32 {
        u32::MAX
    }
    fn is_static(&self) -> bool {
        self.v0_is_zero
    }
}

/// Builds the lift for time-independent boundary data from the initial
/// displacement `u_i` and velocity `v0` (both read at t = 0). `v0` must vanish
/// on ∂Ω. Pass `v0 = None` for a body initially at rest.
pub fn lift_static_bc(u_i: SharedField, v0: Option<SharedField>, alpha: f64, beta: f64) -> SharedField {
    let v0_is_zero = v0.is_none();
    Arc::new(StaticLift { u_i, v0: v0.unwrap_or_else(|| Arc::new(ZeroField)), alpha, beta, v0_is_zero })
}

/// Lift for time-dependent boundary data:
/// u₀ = ũ + β (v₀ − ∂ₜũ(0))/α · (1 − e^{−αt/β}).
pub struct TimeDependentLift {
    u_tilde: SharedField,
    v0: SharedField,
    alpha: f64,
    beta: f64,
}

impl TimeDependentLift {
    fn correction(&self, x: Vector) -> Vector {
        let v0 = self.v0.value(0.0, x);
        let d = self.u_tilde.dt_value(0.0, x);
        [v0[0] - d[0], v0[1] - d[1]]
    }

    fn correction_grad(&self, x: Vector) -> Grad {
        grad_axpy(&self.v0.grad(0.0, x), -1.0, &self.u_tilde.dt_grad(0.0, x))
    }

    fn rate(&self) -> f64 {
        self.alpha / self.beta
    }
}

impl VectorField for TimeDependentLift {
    fn value(&self, t: f64, x: Vector) -> Vector {
        let s = -(-self.rate() * t).exp_m1();
        vec_axpy(&self.u_tilde.value(t, x), self.beta / self.alpha * s, &self.correction(x))
    }
}

impl AnalyticField for TimeDependentLift {
    fn grad(&self, t: f64, x: Vector) -> Grad {
        let s = -(-self.rate() * t).exp_m1();
        grad_axpy(&self.u_tilde.grad(t, x), self.beta / self.alpha * s, &self.correction_grad(x))
    }
    fn dt_value(&self, t: f64, x: Vector) -> Vector {
        vec_axpy(&self.u_tilde.dt_value(t, x), (-self.rate() * t).exp(), &self.correction(x))
    }
    fn dt_grad(&self, t: f64, x: Vector) -> Grad {
        grad_axpy(&self.u_tilde.dt_grad(t, x), (-self.rate() * t).exp(), &self.correction_grad(x))
    }
    fn dtt_value(&self, t: f64, x: Vector) -> Vector {
        let e = (-self.rate() * t).exp();
        vec_axpy(&self.u_tilde.dtt_value(t, x), -self.rate() * e, &self.correction(x))
    }
    fn time_smoothness(&self) -> u32 {
        self.u_tilde.time_smoothness()
    }
}

/// Builds the time-dependent lift. Checks the compatibility v₀ = ∂ₜũ(0) at
/// the given boundary points.
pub fn lift_timedep_bc(
    u_tilde: SharedField,
    v0: SharedField,
    alpha: f64,
    beta: f64,
    boundary_points: &[Vector],
) -> Result<SharedField> {
    for x in boundary_points {
        let a = v0.value(0.0, *x);
        let b = u_tilde.dt_value(0.0, *x);
        let gap = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
        if gap > 1e-10 {
            return Err(Error::InvalidData(format!(
                "boundary compatibility v0 = d/dt u_tilde(0) violated at {x:?} (gap {gap:e})"
            )));
        }
    }
    Ok(Arc::new(TimeDependentLift { u_tilde, v0, alpha, beta }))
}

/// Compactly supported bump A (1 − ρ²)⁴ e, ρ = |x − c|/w, static.
#[derive(Clone, Copy, Debug)]
pub struct BumpField {
    pub dim: usize,
    pub center: Vector,
    pub width: f64,
    pub amplitude: f64,
    pub direction: Vector,
}

impl BumpField {
    /// max |∇b| of the unit-amplitude profile: 8/√7 · (6/7)³ / w.
    pub fn max_slope(width: f64) -> f64 {
        8.0 / 7f64.sqrt() * (6.0f64 / 7.0).powi(3) / width
    }

    fn offset(&self, x: Vector) -> (Vector, f64) {
        let dx = [x[0] - self.center[0], if self.dim == 2 { x[1] - self.center[1] } else { 0.0 }];
        let rho2 = (dx[0] * dx[0] + dx[1] * dx[1]) / (self.width * self.width);
        (dx, rho2)
    }
}

impl VectorField for BumpField {
    fn value(&self, _: f64, x: Vector) -> Vector {
        let (_, rho2) = self.offset(x);
        if rho2 >= 1.0 {
            return ZERO_VEC;
        }
        let w = 1.0 - rho2;
        let b = self.amplitude * (w * w) * (w * w);
        [b * self.direction[0], b * self.direction[1]]
    }
}

impl AnalyticField for BumpField {
    fn grad(&self, _: f64, x: Vector) -> Grad {
        let (dx, rho2) = self.offset(x);
        if rho2 >= 1.0 {
            return ZERO_GRAD;
        }
        let w = 1.0 - rho2;
        let s = -8.0 * self.amplitude * (w * w * w) / (self.width * self.width);
        let g = [s * dx[0], s * dx[1]];
        let mut out = ZERO_GRAD;
        for c in 0..self.dim {
            for k in 0..self.dim {
                out[c][k] = self.direction[c] * g[k];
            }
        }
        out
    }
    fn dt_value(&self, _: f64, _: Vector) -> Vector {
        ZERO_VEC
    }
    fn dt_grad(&self, _: f64, _: Vector) -> Grad {
        ZERO_GRAD
    }
    fn dtt_value(&self, _: f64, _: Vector) -> Vector {
        ZERO_VEC
    }
    fn time_smoothness(&self) -> u32 {
        u32::MAX
    }
    fn is_static(&self) -> bool {
        true
    }
}

/// u = A sin(k(x−a)) cos(ωt) e₁ in 1D, A sin(kₓ(x−a)) sin(k_y(y−c)) cos(ωt) e₁
/// in 2D; vanishes on ∂Ω for all t.
#[derive(Clone, Copy, Debug)]
pub struct StandingWave {
    pub dim: usize,
    pub bounds: [f64; 4],
    pub amplitude: f64,
    pub omega: f64,
}

impl StandingWave {
    fn spatial(&self, x: Vector) -> (f64, [f64; 2]) {
        let [a, b, c, d] = self.bounds;
        let kx = PI / (b - a);
        let (sx, cx) = (kx * (x[0] - a)).sin_cos();
        if self.dim == 1 {
            (sx, [kx * cx, 0.0])
        } else {
            let ky = PI / (d - c);
            let (sy, cy) = (ky * (x[1] - c)).sin_cos();
            (sx * sy, [kx * cx * sy, ky * sx * cy])
        }
    }

    fn grad_scaled(&self, x: Vector, s: f64) -> Grad {
        let (_, g) = self.spatial(x);
        let mut out = ZERO_GRAD;
        out[0][0] = s * g[0];
        if self.dim == 2 {
            out[0][1] = s * g[1];
        }
        out
    }
}

impl VectorField for StandingWave {
    fn value(&self, t: f64, x: Vector) -> Vector {
        [self.amplitude * self.spatial(x).0 * (self.omega * t).cos(), 0.0]
    }
}

impl AnalyticField for StandingWave {
    fn grad(&self, t: f64, x: Vector) -> Grad {
        self.grad_scaled(x, self.amplitude * (self.omega * t).cos())
    }
    fn dt_value(&self, t: f64, x: Vector) -> Vector {
        [-self.amplitude * self.omega * self.spatial(x).0 * (self.omega * t).sin(), 0.0]
    }
    fn dt_grad(&self, t: f64, x: Vector) -> Grad {
        self.grad_scaled(x, -self.amplitude * self.omega * (self.omega * t).sin())
    }
    fn dtt_value(&self, t: f64, x: Vector) -> Vector {
        [-self.amplitude * self.omega * self.omega * self.spatial(x).0 * (self.omega * t).cos(), 0.0]
    }
    fn time_smoothness(&self) -> u32 {
        u32::MAX
    }
}

/// Snapshot of a field or of its velocity at t = 0, as a static field.
struct Frozen {
    field: SharedField,
    rate: bool,
}

impl VectorField for Frozen {
    fn value(&self, _: f64, x: Vector) -> Vector {
        if self.rate {
            self.field.dt_value(0.0, x)
        } else {
            self.field.value(0.0, x)
        }
    }
}

impl AnalyticField for Frozen {
    fn grad(&self, _: f64, x: Vector) -> Grad {
        if self.rate {
            self.field.dt_grad(0.0, x)
        } else {
            self.field.grad(0.0, x)
        }
    }
    fn dt_value(&self, _: f64, _: Vector) -> Vector {
        ZERO_VEC
    }
    fn dt_grad(&self, _: f64, _: Vector) -> Grad {
        ZERO_GRAD
    }
    fn dtt_value(&self, _: f64, _: Vector) -> Vector {
        ZERO_VEC
    }
    fn is_static(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshSpec {
    Interval { a: f64, b: f64, cells: usize },
    Rectangle { a: f64, b: f64, c: f64, d: f64, nx: usize, ny: usize },
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh> {
        match *self {
            MeshSpec::Interval { a, b, cells } => Mesh::interval(a, b, cells),
            MeshSpec::Rectangle { a, b, c, d, nx, ny } => Mesh::rectangle(a, b, c, d, nx, ny),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeshSpec::Interval { .. } => 1,
            MeshSpec::Rectangle { .. } => 2,
        }
    }

    pub fn bounds(&self) -> [f64; 4] {
        match *self {
            MeshSpec::Interval { a, b, .. } => [a, b, 0.0, 0.0],
            MeshSpec::Rectangle { a, b, c, d, .. } => [a, b, c, d],
        }
    }

    /// Same domain with `cells` cells per direction.
    pub fn with_cells(&self, cells: usize) -> MeshSpec {
        match *self {
            MeshSpec::Interval { a, b, .. } => MeshSpec::Interval { a, b, cells },
            MeshSpec::Rectangle { a, b, c, d, .. } => MeshSpec::Rectangle { a, b, c, d, nx: cells, ny: cells },
        }
    }

    /// Characteristic domain size (largest side).
    pub fn size(&self) -> f64 {
        let [a, b, c, d] = self.bounds();
        (b - a).max(d - c)
    }

    fn center(&self) -> Vector {
        let [a, b, c, d] = self.bounds();
        [0.5 * (a + b), 0.5 * (c + d)]
    }

    fn min_side(&self) -> f64 {
        let [a, b, c, d] = self.bounds();
        if self.dim() == 1 {
            b - a
        } else {
            (b - a).min(d - c)
        }
    }

    /// Uniform sample grid over the closed domain, `per_dir` points per side.
    fn sample_points(&self, per_dir: usize) -> Vec<Vector> {
        let [a, b, c, d] = self.bounds();
        let lin = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (per_dir - 1) as f64;
        if self.dim() == 1 {
            (0..per_dir).map(|i| [lin(a, b, i), 0.0]).collect()
        } else {
            (0..per_dir).flat_map(|j| (0..per_dir).map(move |i| [lin(a, b, i), lin(c, d, j)])).collect()
        }
    }
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub mesh: MeshSpec,
    pub model: ConstitutiveModel,
    pub lift: SharedField,
    pub forcing: SharedForcing,
    pub forcing_is_zero: bool,
    pub t_end: f64,
    /// Exact solution, for manufactured scenarios.
    pub exact: Option<SharedField>,
}

impl Scenario {
    pub fn with_model(&self, model: ConstitutiveModel) -> Result<Scenario> {
        let mut s = self.clone();
        s.model = model;
        if let Some(exact) = &self.exact {
            // forcing depends on the model through the exact stress
            s.forcing = Arc::new(ManufacturedForcing::new(exact.clone(), model, &self.mesh));
        }
        Ok(s)
    }

    pub fn with_mesh(&self, mesh: MeshSpec) -> Scenario {
        let mut s = self.clone();
        if let Some(exact) = &self.exact {
            s.forcing = Arc::new(ManufacturedForcing::new(exact.clone(), s.model, &mesh));
        }
        s.mesh = mesh;
        s
    }
}

/// α ε(u₀) + β ∂ₜε(u₀) at a point.
pub fn lift_strain_expression(lift: &dyn AnalyticField, model: &ConstitutiveModel, dim: usize, t: f64, x: Vector) -> SymTensor {
    grad_to_strain(dim, &lift.grad(t, x)).scale(model.alpha) + grad_to_strain(dim, &lift.dt_grad(t, x)).scale(model.beta)
}

fn sample_times(t_end: f64, samples: usize) -> Vec<f64> {
    if t_end <= 0.0 || samples <= 1 {
        return vec![0.0];
    }
    (0..samples).map(|k| t_end * k as f64 / (samples - 1) as f64).collect()
}

/// L − sup over (time samples × quadrature points) of |α ε(u₀) + β ∂ₜε(u₀)|,
/// with L the strain limit of the unregularized map; +∞ when L = +∞.
pub fn safety_margin(scenario: &Scenario, space: &FESpace, t_samples: usize) -> Extended {
    let limit = match scenario.model.potential.limit() {
        Extended::Finite(l) => l,
        Extended::PosInfinity => return Extended::PosInfinity,
    };
    let dim = space.dim();
    let mut sup: f64 = 0.0;
    for t in sample_times(scenario.t_end, t_samples) {
        for qp in space.quad_points() {
            sup = sup.max(lift_strain_expression(scenario.lift.as_ref(), &scenario.model, dim, t, qp.x).norm());
        }
    }
    Extended::Finite(limit - sup)
}

/// Compactly supported bump at rest, scaled so that the safety margin is
/// `margin`: sup |α ε(u_I)| = L − margin (with L = 1 for non-limiting models).
/// For a unit direction e, sup |sym(e ⊗ ∇b)| = sup |∇b| since the bump is
/// radial, so the scaling holds in both dimensions.
pub fn gaussian_pluck(mesh: MeshSpec, model: ConstitutiveModel, margin: f64, t_end: f64) -> Result<Scenario> {
    let limit = model.potential.limit().finite().unwrap_or(1.0);
    let target = limit - margin;
    if !(target > 0.0) {
        return Err(Error::InvalidInput(format!("pluck margin {margin} leaves no strain amplitude (L = {limit})")));
    }
    let width = 0.25 * mesh.min_side();
    let amplitude = target / (model.alpha * BumpField::max_slope(width));
    // in 2D the displacement points along the diagonal so both components move
    let direction = if mesh.dim() == 1 { [1.0, 0.0] } else { [std::f64::consts::FRAC_1_SQRT_2; 2] };
    let bump = BumpField { dim: mesh.dim(), center: mesh.center(), width, amplitude, direction };
    Ok(Scenario {
        name: "gaussian-pluck".into(),
        mesh,
        model,
        lift: lift_static_bc(Arc::new(bump), None, model.alpha, model.beta),
        forcing: Arc::new(ZeroField),
        forcing_is_zero: true,
        t_end,
        exact: None,
    })
}

/// The pluck with safety margin 0.02.
pub fn near_limit(mesh: MeshSpec, model: ConstitutiveModel, t_end: f64) -> Result<Scenario> {
    let mut s = gaussian_pluck(mesh, model, 0.02, t_end)?;
    s.name = "near-limit".into();
    Ok(s)
}

/// Manufactured standing wave u = A sin(πx̂) cos(ωt).
pub fn standing_wave(mesh: MeshSpec, model: ConstitutiveModel, amplitude: f64, omega: f64, t_end: f64) -> Result<Scenario> {
    let wave = StandingWave { dim: mesh.dim(), bounds: mesh.bounds(), amplitude, omega };
    let mut s = manufactured(Arc::new(wave), model, mesh, t_end)?;
    s.name = "standing-wave".into();
    Ok(s)
}

/// Forcing f = ∂ₜₜu − div T for a prescribed exact solution, where
/// T = G_n⁻¹(α ε(u) + β ∂ₜε(u)) pointwise and div T is taken by central
/// differences with one Richardson step (fourth order).
pub struct ManufacturedForcing {
    exact: SharedField,
    model: ConstitutiveModel,
    dim: usize,
    h: f64,
}

impl ManufacturedForcing {
    pub fn new(exact: SharedField, model: ConstitutiveModel, mesh: &MeshSpec) -> Self {
        ManufacturedForcing { exact, model, dim: mesh.dim(), h: 1e-4 * mesh.size() }
    }

    fn stress(&self, dim: usize, t: f64, x: Vector) -> Result<SymTensor> {
        let e = lift_strain_expression(self.exact.as_ref(), &self.model, dim, t, x);
        self.model.invert(&e)
    }

    fn divergence(&self, dim: usize, t: f64, x: Vector, h: f64) -> Result<Vector> {
        let mut div = [0.0; 2];
        for k in 0..dim {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (tp, tm) = (self.stress(dim, t, xp)?, self.stress(dim, t, xm)?);
            for (c, d) in div.iter_mut().enumerate().take(dim) {
                *d += (tp.get(c, k) - tm.get(c, k)) / (2.0 * h);
            }
        }
        Ok(div)
    }

    pub fn evaluate(&self, t: f64, x: Vector) -> Result<Vector> {
        let dim = self.dim;
        let coarse = self.divergence(dim, t, x, self.h)?;
        let fine = self.divergence(dim, t, x, 0.5 * self.h)?;
        let acc = self.exact.dtt_value(t, x);
        Ok([
            acc[0] - (4.0 * fine[0] - coarse[0]) / 3.0,
            acc[1] - (4.0 * fine[1] - coarse[1]) / 3.0,
        ])
    }
}

impl VectorField for ManufacturedForcing {
    fn value(&self, t: f64, x: Vector) -> Vector {
        self.evaluate(t, x).expect("manufactured stress inversion failed after precondition check")
    }
}

/// Scenario whose exact solution is `u_exact`. The lift is the static-data
/// recipe with u_I = u_exact(0), v₀ = ∂ₜu_exact(0); u_exact must be constant
/// in time on ∂Ω. Requires sup_Q |α ε + β ∂ₜε| < 0.95 L.
pub fn manufactured(u_exact: SharedField, model: ConstitutiveModel, mesh: MeshSpec, t_end: f64) -> Result<Scenario> {
    let dim = mesh.dim();
    if let Extended::Finite(limit) = model.potential.limit() {
        let mut sup: f64 = 0.0;
        let points = mesh.sample_points(if dim == 1 { 257 } else { 33 });
        for t in sample_times(t_end, DEFAULT_TIME_SAMPLES) {
            for x in &points {
                sup = sup.max(lift_strain_expression(u_exact.as_ref(), &model, dim, t, *x).norm());
            }
        }
        if sup >= MANUFACTURED_GUARD * limit {
            return Err(Error::InvalidData(format!(
                "safety strain condition fails for the manufactured solution: margin {} (sup |alpha eps + beta eps_t| = {sup}, required < {MANUFACTURED_GUARD} L)",
                limit - sup
            )));
        }
    }
    let u_i: SharedField = Arc::new(Frozen { field: u_exact.clone(), rate: false });
    let v0: SharedField = Arc::new(Frozen { field: u_exact.clone(), rate: true });
    Ok(Scenario {
        name: "manufactured".into(),
        mesh,
        model,
        lift: lift_static_bc(u_i, Some(v0), model.alpha, model.beta),
        forcing: Arc::new(ManufacturedForcing::new(u_exact.clone(), model, &mesh)),
        forcing_is_zero: false,
        t_end,
        exact: Some(u_exact),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{Regularization, ScalarPotential};
    use crate::field::AffineField;

    fn proto() -> ConstitutiveModel {
        ConstitutiveModel::new(ScalarPotential::Prototype { q: 2.0 }, 1.0, 1.0)
            .unwrap()
            .with_regularization(16, Regularization::LinearTikhonov)
            .unwrap()
    }

    fn bump() -> SharedField {
        Arc::new(BumpField { dim: 1, center: [0.5, 0.0], width: 0.3, amplitude: 0.1, direction: [1.0, 0.0] })
    }

    fn velocity() -> SharedField {
        Arc::new(BumpField { dim: 1, center: [0.4, 0.0], width: 0.2, amplitude: 0.05, direction: [1.0, 0.0] })
    }

    #[test]
    fn static_lift_with_zero_velocity_is_constant() {
        let lift = lift_static_bc(bump(), None, 2.0, 0.5);
        for t in [0.0, 0.7, 3.0] {
            for x in [0.3, 0.5, 0.61] {
                assert_eq!(lift.value(t, [x, 0.0]), bump().value(0.0, [x, 0.0]));
            }
        }
        assert!(lift.is_static());
    }

    #[test]
    fn static_lift_contracts() {
        let (alpha, beta) = (1.3, 0.7);
        let lift = lift_static_bc(bump(), Some(velocity()), alpha, beta);
        let model = ConstitutiveModel::new(ScalarPotential::Linear, alpha, beta).unwrap();
        for i in 0..20 {
            let x = [0.05 * i as f64, 0.0];
            assert!((lift.value(0.0, x)[0] - bump().value(0.0, x)[0]).abs() <= 1e-12);
            assert!((lift.dt_value(0.0, x)[0] - velocity().value(0.0, x)[0]).abs() <= 1e-12);
            let reference = lift_strain_expression(lift.as_ref(), &model, 1, 0.0, x);
            for t in [0.3, 1.7] {
                let e = lift_strain_expression(lift.as_ref(), &model, 1, t, x);
                assert!((e - reference).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn time_dependent_lift_reduces_to_static() {
        let a = lift_timedep_bc(bump(), Arc::new(ZeroField), 1.0, 2.0, &[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let b = lift_static_bc(bump(), None, 1.0, 2.0);
        for t in [0.0, 0.5, 2.0] {
            for x in [0.2, 0.5, 0.7] {
                assert!((a.value(t, [x, 0.0])[0] - b.value(t, [x, 0.0])[0]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn time_dependent_lift_rejects_incompatible_data() {
        let moving: SharedField = Arc::new(StandingWave { dim: 1, bounds: [0.0, 1.0, 0.0, 0.0], amplitude: 1.0, omega: 1.0 });
        let ramp: SharedField = Arc::new(AffineField { offset: [1.0, 0.0], matrix: ZERO_GRAD });
        // ∂ₜũ(0) = 0 on the boundary but v₀ = 1 there
        assert!(lift_timedep_bc(moving, ramp, 1.0, 1.0, &[[0.0, 0.0]]).is_err());
    }

    #[test]
    fn margin_examples() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 64 };
        let space = FESpace::new(mesh.build().unwrap());
        let mut s = gaussian_pluck(mesh, proto(), 0.3, 1.0).unwrap();
        s.lift = Arc::new(ZeroField);
        assert_eq!(safety_margin(&s, &space, 8), Extended::Finite(1.0));

        let pluck = gaussian_pluck(mesh, proto(), 0.2, 1.0).unwrap();
        let m = safety_margin(&pluck, &space, 8).finite().unwrap();
        assert!((0.2..0.21).contains(&m), "margin {m}");

        let linear = ConstitutiveModel::new(ScalarPotential::Linear, 1.0, 1.0).unwrap();
        let s = gaussian_pluck(mesh, linear, 0.3, 1.0).unwrap();
        assert_eq!(safety_margin(&s, &space, 8), Extended::PosInfinity);
    }

    #[test]
    fn margin_decreases_under_scaling() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 32 };
        let space = FESpace::new(mesh.build().unwrap());
        let mut s = gaussian_pluck(mesh, proto(), 0.6, 1.0).unwrap();
        let m1 = safety_margin(&s, &space, 4).finite().unwrap();
        let b = BumpField { dim: 1, center: [0.5, 0.0], width: 0.25, amplitude: 2.0 * 0.4 / BumpField::max_slope(0.25), direction: [1.0, 0.0] };
        s.lift = lift_static_bc(Arc::new(b), None, 1.0, 1.0);
        let m2 = safety_margin(&s, &space, 4).finite().unwrap();
        assert!(m2 < m1);
    }

    #[test]
    fn manufactured_zero_solution_has_zero_forcing() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 8 };
        let s = manufactured(Arc::new(ZeroField), proto(), mesh, 1.0).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert_eq!(s.forcing.value(0.3, [x, 0.0]), [0.0, 0.0]);
        }
    }

    #[test]
    fn manufactured_linear_forcing_matches_closed_form() {
        let (alpha, beta) = (1.5, 0.25);
        let model = ConstitutiveModel::new(ScalarPotential::Linear, alpha, beta).unwrap();
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 8 };
        let wave = StandingWave { dim: 1, bounds: mesh.bounds(), amplitude: 1.0, omega: 1.0 };
        let s = manufactured(Arc::new(wave), model, mesh, 2.0).unwrap();
        let mut max_diff: f64 = 0.0;
        for i in 0..=20 {
            for &t in &[0.0, 0.4, 1.3] {
                let x = i as f64 / 20.0;
                let (sx, ct, st) = ((PI * x).sin(), f64::cos(t), f64::sin(t));
                let closed = -sx * ct + PI * PI * sx * (alpha * ct - beta * st);
                max_diff = max_diff.max((s.forcing.value(t, [x, 0.0])[0] - closed).abs());
            }
        }
        assert!(max_diff <= 1e-7, "max diff {max_diff}");
    }

    #[test]
    fn manufactured_rejects_supercritical() {
        let mesh = MeshSpec::Interval { a: 0.0, b: 1.0, cells: 8 };
        let err = standing_wave(mesh, proto(), 1.0, PI, 1.0).err().unwrap();
        assert!(err.to_string().contains("safety strain condition"));
    }
}
