//! Built-in property suite: constitutive invariants on random tensors,
//! closed-form spot values and the lift-recipe identities.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constitutive::{ConstitutiveModel, Regularization, ScalarPotential};
use crate::extended::Extended;
use crate::fespace::grad_to_strain;
use crate::field::{grad_axpy, AffineField, AnalyticField, Grad, SharedField, Vector, VectorField};
use crate::scenarios::{lift_static_bc, lift_timedep_bc, BumpField};
use crate::symtensor::{packed_len, SymTensor};

/// Outcome of one property group.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, failures: Vec<String>, summary: String) -> Self {
        let passed = failures.is_empty();
        let detail = if passed { summary } else { failures.join("; ") };
        CheckOutcome { name: name.into(), passed, detail }
    }
}

/// Worst observed values of the constitutive invariants.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConstitutiveStats {
    pub min_monotonicity: f64,
    pub max_abs_g_over_limit: f64,
    pub max_roundtrip: f64,
    pub max_fenchel: f64,
    pub max_jacobian_fd: f64,
}

/// Model variants exercised by the suite.
pub fn suite_models() -> Vec<(String, ConstitutiveModel)> {
    let bare = |p: ScalarPotential| ConstitutiveModel::new(p, 1.0, 1.0).expect("valid coefficients");
    let mut out = Vec::new();
    for q in [1.0, 2.0, 3.0] {
        out.push((format!("prototype q={q}"), bare(ScalarPotential::Prototype { q })));
    }
    let proto = bare(ScalarPotential::Prototype { q: 2.0 });
    out.push(("prototype q=2 n=16".into(), proto.with_regularization(16, Regularization::LinearTikhonov).unwrap()));
    out.push((
        "prototype q=2 n=16 power p=3".into(),
        proto.with_regularization(16, Regularization::PowerTikhonov { p: 3.0 }).unwrap(),
    ));
    for p in [1.5, 3.0] {
        out.push((format!("powerlaw p={p}"), bare(ScalarPotential::power_law(p).unwrap())));
    }
    out.push(("linear".into(), bare(ScalarPotential::Linear)));
    out
}

/// Random tensor with log-uniform magnitude in [10^lo, 10^hi].
pub fn random_tensor(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> SymTensor {
    let mut t = SymTensor::zero(dim);
    for c in t.packed_mut() {
        *c = rng.gen_range(-1.0..1.0);
    }
    let norm = t.norm();
    if norm == 0.0 {
        return t;
    }
    t.scale(10f64.powf(rng.gen_range(lo..hi)) / norm)
}

fn jacobian_fd_error(model: &ConstitutiveModel, t: &SymTensor) -> f64 {
    let jac = model.g_jacobian(t);
    let n = packed_len(t.dim());
    let h = 1e-5 * (1.0 + t.norm());
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..n {
        let mut tp = *t;
        let mut tm = *t;
        tp.packed_mut()[j] += h;
        tm.packed_mut()[j] -= h;
        let col = (model.g_apply(&tp) - model.g_apply(&tm)).scale(0.5 / h);
        for i in 0..n {
            err = err.max((col.packed()[i] - jac.entry(i, j)).abs());
            scale = scale.max(jac.entry(i, j).abs());
        }
    }
    err / scale.max(1e-300)
}

/// Runs the invariants on `samples` random tensors (d cycling 1, 2, 3) for
/// one model.
pub fn constitutive_stats(model: &ConstitutiveModel, samples: usize, seed: u64) -> ConstitutiveStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ConstitutiveStats { min_monotonicity: f64::INFINITY, ..Default::default() };
    let limit = model.limit();
    for k in 0..samples {
        let dim = 1 + k % 3;
        let t = random_tensor(&mut rng, dim, -2.0, 1.3);
        let w = random_tensor(&mut rng, dim, -2.0, 1.3);
        let (gt, gw) = (model.g_apply(&t), model.g_apply(&w));
        s.min_monotonicity = s.min_monotonicity.min((gt - gw).dot(&(t - w)));
        if let Extended::Finite(l) = limit {
            s.max_abs_g_over_limit = s.max_abs_g_over_limit.max(gt.norm() / l);
        }
        let back = model.invert(&gt).map(|b| (b - t).norm() / (1.0 + t.norm())).unwrap_or(f64::INFINITY);
        s.max_roundtrip = s.max_roundtrip.max(back);
        s.max_fenchel = s.max_fenchel.max(model.fenchel_residual(&t));
        s.max_jacobian_fd = s.max_jacobian_fd.max(jacobian_fd_error(model, &t));
    }
    s
}

/// Checks ‖𝒜_n(T)‖ ≤ 3 (n⁻¹ + 1/(1 + |T|)) for |T| ∈ {0.1, 1, 10, 100},
/// n ∈ {1, 10, 100}, d ∈ {1, 2, 3} along random directions. Returns the
/// number of violations and of cases.
pub fn jacobian_bound_sweep(seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut cases = 0;
    for n in [1, 10, 100] {
        let model = ConstitutiveModel::bare(ScalarPotential::Prototype { q: 2.0 })
            .with_regularization(n, Regularization::LinearTikhonov)
            .unwrap();
        for mag in [0.1, 1.0, 10.0, 100.0] {
            for dim in 1..=3 {
                for _ in 0..8 {
                    let t = random_tensor(&mut rng, dim, 0.0, 1e-12).scale(mag);
                    cases += 1;
                    if !model.jacobian_norm_bound_check(&t).unwrap_or(false) {
                        failures += 1;
                    }
                }
            }
        }
    }
    (failures, cases)
}

/// Constitutive invariants for every model in [`suite_models`].
pub fn constitutive_suite(samples: usize, seed: u64) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut worst = ConstitutiveStats { min_monotonicity: f64::INFINITY, ..Default::default() };
    for (k, (name, model)) in suite_models().into_iter().enumerate() {
        let s = constitutive_stats(&model, samples, seed.wrapping_add(k as u64));
        if s.min_monotonicity < -1e-14 {
            failures.push(format!("{name}: monotonicity {:e}", s.min_monotonicity));
        }
        if s.max_abs_g_over_limit > 1.0 {
            failures.push(format!("{name}: |G| exceeds L ({})", s.max_abs_g_over_limit));
        }
        if s.max_roundtrip > 1e-10 {
            failures.push(format!("{name}: round trip {:e}", s.max_roundtrip));
        }
        if s.max_fenchel > 1e-8 {
            failures.push(format!("{name}: Fenchel residual {:e}", s.max_fenchel));
        }
        if s.max_jacobian_fd > 1e-6 {
            failures.push(format!("{name}: Jacobian vs differences {:e}", s.max_jacobian_fd));
        }
        worst.min_monotonicity = worst.min_monotonicity.min(s.min_monotonicity);
        worst.max_roundtrip = worst.max_roundtrip.max(s.max_roundtrip);
        worst.max_fenchel = worst.max_fenchel.max(s.max_fenchel);
        worst.max_jacobian_fd = worst.max_jacobian_fd.max(s.max_jacobian_fd);
    }
    let (bound_fail, cases) = jacobian_bound_sweep(seed);
    if bound_fail > 0 {
        failures.push(format!("Jacobian bound violated in {bound_fail}/{cases} cases"));
    }
    CheckOutcome::new(
        "constitutive invariants",
        failures,
        format!(
            "min monotonicity {:.1e}, round trip {:.1e}, Fenchel {:.1e}, Jacobian fd {:.1e}, bound {cases}/{cases}",
            worst.min_monotonicity, worst.max_roundtrip, worst.max_fenchel, worst.max_jacobian_fd
        ),
    )
}

/// G(1) = 1/√2, G⁻¹(0.6) = 0.75, φ*(0.6) = 0.2 for the q = 2 prototype.
pub fn closed_form_values() -> CheckOutcome {
    let m = ConstitutiveModel::bare(ScalarPotential::Prototype { q: 2.0 });
    let g1 = m.g_apply(&SymTensor::from_packed(1, &[1.0])).packed()[0];
    let inv = m.invert(&SymTensor::from_packed(1, &[0.6])).map(|t| t.packed()[0]).unwrap_or(f64::NAN);
    let conj = ScalarPotential::Prototype { q: 2.0 }.phi_star(0.6).to_f64();
    let errs = [
        ("G(1)", (g1 - std::f64::consts::FRAC_1_SQRT_2).abs()),
        ("G^-1(0.6)", (inv - 0.75).abs()),
        ("phi*(0.6)", (conj - 0.2).abs()),
    ];
    let failures = errs.iter().filter(|(_, e)| !(*e <= 1e-10)).map(|(n, e)| format!("{n} off by {e:e}")).collect();
    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    CheckOutcome::new("closed-form values", failures, format!("max error {worst:.1e}"))
}

/// ũ(t, x) = (1 + ½ sin t) A(x) + B(x) with A affine and B static.
struct ModulatedField {
    affine: AffineField,
    bump: BumpField,
}

impl ModulatedField {
    fn amp(t: f64) -> (f64, f64, f64) {
        (1.0 + 0.5 * t.sin(), 0.5 * t.cos(), -0.5 * t.sin())
    }
}

impl VectorField for ModulatedField {
    fn value(&self, t: f64, x: Vector) -> Vector {
        let a = self.affine.value(0.0, x);
        let b = self.bump.value(0.0, x);
        let s = Self::amp(t).0;
        [s * a[0] + b[0], s * a[1] + b[1]]
    }
}

impl AnalyticField for ModulatedField {
    fn grad(&self, t: f64, x: Vector) -> Grad {
        grad_axpy(&self.bump.grad(0.0, x), Self::amp(t).0, &self.affine.matrix)
    }
    fn dt_value(&self, t: f64, x: Vector) -> Vector {
        let a = self.affine.value(0.0, x);
        let s = Self::amp(t).1;
        [s * a[0], s * a[1]]
    }
    fn dt_grad(&self, t: f64, _: Vector) -> Grad {
        grad_axpy(&[[0.0; 2]; 2], Self::amp(t).1, &self.affine.matrix)
    }
    fn dtt_value(&self, t: f64, x: Vector) -> Vector {
        let a = self.affine.value(0.0, x);
        let s = Self::amp(t).2;
        [s * a[0], s * a[1]]
    }
}

fn vec_gap(a: Vector, b: Vector) -> f64 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
}

fn bump(center: Vector, width: f64, amplitude: f64, direction: Vector) -> BumpField {
    BumpField { dim: 2, center, width, amplitude, direction }
}

/// Worst deviations of the two lift recipes at `points` space-time samples
/// in [0, 1]² × [0, 2]: (contract error, identity error).
pub fn lift_identity_errors(points: usize, seed: u64) -> (f64, f64) {
    let (alpha, beta) = (1.3, 0.6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut contract: f64 = 0.0;
    let mut identity: f64 = 0.0;
    let eps = |g: &Grad| grad_to_strain(2, g);

    // time-independent boundary data
    let u_i: SharedField = Arc::new(bump([0.5, 0.5], 0.4, 0.2, [0.6, 0.8]));
    let v0: SharedField = Arc::new(bump([0.4, 0.6], 0.3, 0.1, [1.0, 0.0]));
    let lift = lift_static_bc(u_i.clone(), Some(v0.clone()), alpha, beta);

    // time-dependent boundary data with compatible v₀
    let affine = AffineField { offset: [0.1, -0.2], matrix: [[0.3, 0.1], [-0.2, 0.4]] };
    let u_tilde: SharedField = Arc::new(ModulatedField { affine, bump: bump([0.5, 0.5], 0.3, 0.05, [0.0, 1.0]) });
    let extra = bump([0.6, 0.4], 0.35, 0.08, [0.6, -0.8]);
    struct Compatible {
        u_tilde: SharedField,
        extra: BumpField,
    }
    impl VectorField for Compatible {
        fn value(&self, _: f64, x: Vector) -> Vector {
            let a = self.u_tilde.dt_value(0.0, x);
            let b = self.extra.value(0.0, x);
            [a[0] + b[0], a[1] + b[1]]
        }
    }
    impl AnalyticField for Compatible {
        fn grad(&self, _: f64, x: Vector) -> Grad {
            grad_axpy(&self.u_tilde.dt_grad(0.0, x), 1.0, &self.extra.grad(0.0, x))
        }
        fn dt_value(&self, _: f64, _: Vector) -> Vector {
            [0.0; 2]
        }
        fn dt_grad(&self, _: f64, _: Vector) -> Grad {
            [[0.0; 2]; 2]
        }
        fn dtt_value(&self, _: f64, _: Vector) -> Vector {
            [0.0; 2]
        }
        fn is_static(&self) -> bool {
            true
        }
    }
    let v0_td: SharedField = Arc::new(Compatible { u_tilde: u_tilde.clone(), extra });
    let boundary: Vec<Vector> = (0..=20)
        .flat_map(|k| {
            let s = k as f64 / 20.0;
            [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]]
        })
        .collect();
    let lift_td = lift_timedep_bc(u_tilde.clone(), v0_td.clone(), alpha, beta, &boundary).expect("compatible data");

    let rate = alpha / beta;
    for k in 0..points {
        let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let t = rng.gen_range(0.0..2.0);
        let xb = boundary[k % boundary.len()];

        contract = contract
            .max(vec_gap(lift.value(0.0, x), u_i.value(0.0, x)))
            .max(vec_gap(lift.dt_value(0.0, x), v0.value(0.0, x)))
            .max(vec_gap(lift.value(t, xb), u_i.value(0.0, xb)));
        let lhs = eps(&lift.grad(t, x)).scale(alpha) + eps(&lift.dt_grad(t, x)).scale(beta);
        let rhs = eps(&u_i.grad(0.0, x)).scale(alpha) + eps(&v0.grad(0.0, x)).scale(beta);
        identity = identity.max((lhs - rhs).norm());

        let decay = (-rate * t).exp();
        let d0 = u_tilde.dt_value(0.0, x);
        let w = v0_td.value(0.0, x);
        let expected_rate = {
            let d = u_tilde.dt_value(t, x);
            [d[0] + (w[0] - d0[0]) * decay, d[1] + (w[1] - d0[1]) * decay]
        };
        contract = contract
            .max(vec_gap(lift_td.value(0.0, x), u_tilde.value(0.0, x)))
            .max(vec_gap(lift_td.dt_value(0.0, x), w))
            .max(vec_gap(lift_td.value(t, xb), u_tilde.value(t, xb)))
            .max(vec_gap(lift_td.dt_value(t, x), expected_rate));
        let lhs = eps(&lift_td.grad(t, x)).scale(alpha) + eps(&lift_td.dt_grad(t, x)).scale(beta);
        let rhs = eps(&u_tilde.grad(t, x)).scale(alpha)
            + (eps(&u_tilde.dt_grad(t, x)) - eps(&u_tilde.dt_grad(0.0, x)) + eps(&v0_td.grad(0.0, x))).scale(beta);
        identity = identity.max((lhs - rhs).norm());
    }
    (contract, identity)
}

pub fn lift_identities(points: usize, seed: u64) -> CheckOutcome {
    let (contract, identity) = lift_identity_errors(points, seed);
    let mut failures = Vec::new();
    if !(contract <= 1e-12) {
        failures.push(format!("initial/boundary contract off by {contract:e}"));
    }
    if !(identity <= 1e-10) {
        failures.push(format!("strain identity off by {identity:e}"));
    }
    CheckOutcome::new("lift identities", failures, format!("contract {contract:.1e}, identity {identity:.1e}"))
}

/// All groups, as run by the command-line `verify`.
pub fn run_all(samples: usize, seed: u64) -> Vec<CheckOutcome> {
    vec![constitutive_suite(samples, seed), closed_form_values(), lift_identities(100, seed)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        for c in run_all(300, 1) {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn broken_tolerance_is_reported() {
        let mut m = ConstitutiveModel::bare(ScalarPotential::Prototype { q: 2.0 });
        m.inversion_tol = 1e-2;
        let s = constitutive_stats(&m, 200, 3);
        assert!(s.max_roundtrip > 1e-10);
    }
}
