//! Analytic space-time fields (lifts, exact solutions, forcing).
//!
//! Points and vectors are stored in `[f64; 2]`; for d = 1 the second
//! component is ignored and must be zero.

use std::sync::Arc;

/// A point or vector in ℝ^d, d ≤ 2.
pub type Vector = [f64; 2];

/// Displacement gradient, `g[c][k] = ∂ₖ u_c`.
pub type Grad = [[f64; 2]; 2];

pub const ZERO_VEC: Vector = [0.0; 2];
pub const ZERO_GRAD: Grad = [[0.0; 2]; 2];

/// A vector field evaluated at (t, x).
pub trait VectorField: Send + Sync {
    fn value(&self, t: f64, x: Vector) -> Vector;
}

/// A vector field with first spatial derivatives and two time derivatives.
pub trait AnalyticField: VectorField {
    fn grad(&self, t: f64, x: Vector) -> Grad;
    fn dt_value(&self, t: f64, x: Vector) -> Vector;
    fn dt_grad(&self, t: f64, x: Vector) -> Grad;
    fn dtt_value(&self, t: f64, x: Vector) -> Vector;

    /// Declared number of bounded time derivatives.
    fn time_smoothness(&self) -> u32 {
        2
    }

    /// Whether the field is known to be independent of t.
    fn is_static(&self) -> bool {
        false
    }
}

pub type SharedField = Arc<dyn AnalyticField>;
pub type SharedForcing = Arc<dyn VectorField>;

/// u ≡ 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroField;

impl VectorField for ZeroField {
    fn value(&self, _: f64, _: Vector) -> Vector {
        ZERO_VEC
    }
}

impl AnalyticField for ZeroField {
    fn grad(&self, _: f64, _: Vector) -> Grad {
        ZERO_GRAD
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

/// Static affine field u(x) = b + A x.
#[derive(Clone, Copy, Debug)]
pub struct AffineField {
    pub offset: Vector,
    pub matrix: Grad,
}

impl VectorField for AffineField {
    fn value(&self, _: f64, x: Vector) -> Vector {
        let a = &self.matrix;
        [
            self.offset[0] + a[0][0] * x[0] + a[0][1] * x[1],
            self.offset[1] + a[1][0] * x[0] + a[1][1] * x[1],
        ]
    }
}

impl AnalyticField for AffineField {
    fn grad(&self, _: f64, _: Vector) -> Grad {
        self.matrix
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

/// Adapts a closure `(t, x) -> f` into a forcing field.
pub struct FnForcing<F>(pub F);

impl<F> VectorField for FnForcing<F>
where
    F: Fn(f64, Vector) -> Vector + Send + Sync,
{
    fn value(&self, t: f64, x: Vector) -> Vector {
        (self.0)(t, x)
    }
}

pub(crate) fn grad_axpy(a: &Grad, s: f64, b: &Grad) -> Grad {
    let mut out = *a;
    for c in 0..2 {
        for k in 0..2 {
            out[c][k] += s * b[c][k];
        }
    }
    out
}

pub(crate) fn vec_axpy(a: &Vector, s: f64, b: &Vector) -> Vector {
    [a[0] + s * b[0], a[1] + s * b[1]]
}
