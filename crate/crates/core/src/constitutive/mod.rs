//! The implicit constitutive map α ε + β ∂ₜε = G(T), its Tikhonov
//! regularization G_n, Jacobian, inverse and convex-conjugate energies.
//!
//! All maps are radial: G(T) = φ′(|T|) T/|T|. The regularized map is
//! G_n(T) = G(T) + n⁻¹ T (linear) or G(T) + n⁻¹ |T|^{p−2} T (power), which is
//! again radial with profile `response(r) = φ′(r) + reg(r)`. Inversion and the
//! conjugate therefore reduce to one scalar root find along the ray of the
//! input tensor.

mod potential;
pub mod root;

pub use potential::ScalarPotential;

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::symtensor::{PackedOperator, SymTensor};

/// Default inversion tolerance: ‖G_n(T) − E‖ ≤ tol·(1 + ‖E‖).
pub const INVERSION_TOL: f64 = 1e-12;

/// Relative distance below L at which the unregularized inverse is refused.
pub const LIMIT_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularization {
    /// G + n⁻¹ T
    LinearTikhonov,
    /// G + n⁻¹ |T|^{p−2} T, restricted to p ≥ 2.
    PowerTikhonov { p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstitutiveModel {
    pub potential: ScalarPotential,
    pub alpha: f64,
    pub beta: f64,
    pub reg_n: Option<u32>,
    pub reg_kind: Regularization,
    /// Tolerance used by [`ConstitutiveModel::invert`].
    pub inversion_tol: f64,
}

impl ConstitutiveModel {
    pub fn new(potential: ScalarPotential, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidInput(format!("alpha must be > 0 (got {alpha})")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta must be > 0 (got {beta})")));
        }
        Ok(Self::bare(potential).with_coefficients(alpha, beta))
    }

    /// α = β = 1, no regularizer.
    pub fn bare(potential: ScalarPotential) -> Self {
        ConstitutiveModel {
            potential,
            alpha: 1.0,
            beta: 1.0,
            reg_n: None,
            reg_kind: Regularization::LinearTikhonov,
            inversion_tol: INVERSION_TOL,
        }
    }

    fn with_coefficients(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn with_regularization(mut self, n: u32, kind: Regularization) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("regularization index n must be >= 1".into()));
        }
        if let Regularization::PowerTikhonov { p } = kind {
            if !(p.is_finite() && p >= 2.0) {
                return Err(Error::InvalidInput(format!("power Tikhonov regularizer needs p >= 2 (got {p})")));
            }
        }
        self.reg_n = Some(n);
        self.reg_kind = kind;
        Ok(self)
    }

    /// Same model with the regularizer removed.
    pub fn unregularized(&self) -> Self {
        let mut m = *self;
        m.reg_n = None;
        m
    }

    fn inv_n(&self) -> Option<f64> {
        self.reg_n.map(|n| 1.0 / n as f64)
    }

    /// |G_n(T)| as a function of r = |T|.
    pub fn response(&self, r: f64) -> f64 {
        self.potential.dphi(r)
            + match (self.inv_n(), self.reg_kind) {
                (None, _) => 0.0,
                (Some(k), Regularization::LinearTikhonov) => k * r,
                (Some(k), Regularization::PowerTikhonov { p }) => k * r.powf(p - 1.0),
            }
    }

    /// d/dr of [`Self::response`].
    pub fn response_slope(&self, r: f64) -> f64 {
        self.potential.d2phi(r)
            + match (self.inv_n(), self.reg_kind) {
                (None, _) => 0.0,
                (Some(k), Regularization::LinearTikhonov) => k,
                (Some(k), Regularization::PowerTikhonov { p }) => {
                    if r == 0.0 {
                        if p == 2.0 {
                            k
                        } else {
                            0.0
                        }
                    } else {
                        k * (p - 1.0) * r.powf(p - 2.0)
                    }
                }
            }
    }

    /// response(r)/r, continuously extended to r = 0.
    pub fn secant(&self, r: f64) -> f64 {
        self.potential.secant(r)
            + match (self.inv_n(), self.reg_kind) {
                (None, _) => 0.0,
                (Some(k), Regularization::LinearTikhonov) => k,
                (Some(k), Regularization::PowerTikhonov { p }) => {
                    if r == 0.0 {
                        if p == 2.0 {
                            k
                        } else {
                            0.0
                        }
                    } else {
                        k * r.powf(p - 2.0)
                    }
                }
            }
    }

    /// Radial potential of G_n: φ(r) plus the regularizer's energy.
    pub fn energy(&self, r: f64) -> f64 {
        self.potential.phi(r)
            + match (self.inv_n(), self.reg_kind) {
                (None, _) => 0.0,
                (Some(k), Regularization::LinearTikhonov) => 0.5 * k * r * r,
                (Some(k), Regularization::PowerTikhonov { p }) => k * r.powf(p) / p,
            }
    }

    /// Supremum of |G_n|: the potential's L without a regularizer, +∞ with one.
    pub fn limit(&self) -> Extended {
        match self.reg_n {
            None => self.potential.limit(),
            Some(_) => Extended::PosInfinity,
        }
    }

    /// G_n(T).
    pub fn g_apply(&self, t: &SymTensor) -> SymTensor {
        let r = t.norm();
        if r == 0.0 {
            return SymTensor::zero(t.dim());
        }
        t.scale(self.secant(r))
    }

    /// Jacobian 𝒜_n(T) = ∂G_n/∂T as a symmetric operator on packed tensors:
    /// `secant·I + (slope − secant)·T̂⊗T̂`, equal to `secant(0)·I` at T = 0.
    pub fn g_jacobian(&self, t: &SymTensor) -> PackedOperator {
        let r = t.norm();
        let a = self.secant(r);
        if r == 0.0 {
            return PackedOperator::scaled_identity(t.dim(), a);
        }
        let b = self.response_slope(r) - a;
        PackedOperator::identity_plus_rank_one(a, b, &t.scale(1.0 / r))
    }

    /// Closed-form inverse of [`Self::g_jacobian`], i.e. dT/dE along G_n⁻¹.
    pub fn g_jacobian_inverse(&self, t: &SymTensor) -> PackedOperator {
        let r = t.norm();
        let a = self.secant(r);
        if r == 0.0 {
            return PackedOperator::scaled_identity(t.dim(), 1.0 / a);
        }
        let slope = self.response_slope(r);
        PackedOperator::identity_plus_rank_one(1.0 / a, 1.0 / slope - 1.0 / a, &t.scale(1.0 / r))
    }

    /// Checks ‖𝒜_n(T)‖ ≤ C (n⁻¹ + 1/(1 + |T|)) with C = 3.
    pub fn jacobian_norm_bound_check(&self, t: &SymTensor) -> Result<bool> {
        let inv_n = match (self.potential, self.inv_n()) {
            (ScalarPotential::Prototype { .. }, Some(k)) => k,
            _ => {
                return Err(Error::Precondition(
                    "Jacobian bound applies to the prototype potential with a regularizer".into(),
                ))
            }
        };
        const C: f64 = 3.0;
        let norm = self.g_jacobian(t).operator_norm();
        Ok(norm <= C * (inv_n + 1.0 / (1.0 + t.norm())))
    }

    /// Solves response(r) = e for r ≥ 0.
    pub fn invert_radial(&self, e: f64, guess: Option<f64>) -> Result<f64> {
        debug_assert!(e >= 0.0);
        if e == 0.0 {
            return Ok(0.0);
        }
        if !e.is_finite() {
            return Err(Error::InvalidInput(format!("cannot invert non-finite strain magnitude {e}")));
        }
        let hi = match (self.inv_n(), self.reg_kind) {
            (Some(k), Regularization::LinearTikhonov) => e / k,
            (Some(k), Regularization::PowerTikhonov { p }) => (e / k).powf(1.0 / (p - 1.0)),
            (None, _) => {
                if let Extended::Finite(limit) = self.potential.limit() {
                    if e >= limit * (1.0 - LIMIT_CUTOFF) {
                        return Err(Error::NoRegularizerAndSupercritical { magnitude: e, limit });
                    }
                }
                root::expand_upper(|r| self.response(r) - e, guess.unwrap_or(e).max(e))?
            }
        };
        let ftol = 0.5 * self.inversion_tol * (1.0 + e);
        root::solve_increasing(|r| (self.response(r) - e, self.response_slope(r)), 0.0, hi, guess, ftol)
    }

    /// T = G_n⁻¹(E) by the radial reduction.
    pub fn invert(&self, e: &SymTensor) -> Result<SymTensor> {
        self.invert_warm(e, None)
    }

    /// As [`Self::invert`], with a starting guess for |T| (e.g. the previous
    /// stress at the same quadrature point).
    pub fn invert_warm(&self, e: &SymTensor, guess: Option<f64>) -> Result<SymTensor> {
        if !e.is_finite() {
            return Err(Error::InvalidInput("cannot invert a non-finite strain tensor".into()));
        }
        let mag = e.norm();
        if mag == 0.0 {
            return Ok(SymTensor::zero(e.dim()));
        }
        let r = self.invert_radial(mag, guess)?;
        Ok(e.scale(r / mag))
    }

    /// General tensor Newton for G_n(T) = E with backtracking on ‖G_n(T) − E‖.
    /// Falls back to the radial bisection if Newton stalls.
    pub fn invert_tensor_newton(&self, e: &SymTensor) -> Result<SymTensor> {
        if let (None, Extended::Finite(limit)) = (self.reg_n, self.potential.limit()) {
            if e.norm() >= limit * (1.0 - LIMIT_CUTOFF) {
                return Err(Error::NoRegularizerAndSupercritical { magnitude: e.norm(), limit });
            }
        }
        let tol = self.inversion_tol * (1.0 + e.norm());
        let mut t = *e;
        let mut res = self.g_apply(&t) - *e;
        for _ in 0..root::MAX_ITER {
            let rn = res.norm();
            if rn <= tol {
                return Ok(t);
            }
            let step = self.g_jacobian_inverse(&t).apply(&res);
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial = t.axpy(-lambda, &step);
                let trial_res = self.g_apply(&trial) - *e;
                if trial_res.norm() < (1.0 - 1e-4 * lambda) * rn {
                    t = trial;
                    res = trial_res;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        self.invert(e)
    }

    /// Model-level conjugate: sup_{r≥0} (e·r − energy(r)), +∞ at or beyond L.
    pub fn conjugate(&self, e: f64) -> Extended {
        debug_assert!(e >= 0.0);
        if e == 0.0 {
            return Extended::Finite(0.0);
        }
        if let Extended::Finite(limit) = self.limit() {
            if e >= limit {
                return Extended::PosInfinity;
            }
        }
        let mut strict = *self;
        strict.inversion_tol = 1e-14;
        match strict.invert_radial(e, None) {
            Ok(r) => Extended::Finite((e * r - self.energy(r)).max(0.0)),
            Err(_) => Extended::PosInfinity,
        }
    }

    /// |F(T) + F*(G_n(T)) − G_n(T)·T|.
    pub fn fenchel_residual(&self, t: &SymTensor) -> f64 {
        let g = self.g_apply(t);
        let r = t.norm();
        match self.conjugate(g.norm()) {
            Extended::Finite(c) => (self.energy(r) + c - g.dot(t)).abs(),
            Extended::PosInfinity => f64::INFINITY,
        }
    }

    /// (T − T₀)·(G_n(T) − G_n(T₀)), nonnegative by monotonicity.
    pub fn dissipation_pair(&self, t: &SymTensor, t0: &SymTensor) -> f64 {
        (*t - *t0).dot(&(self.g_apply(t) - self.g_apply(t0)))
    }
}
