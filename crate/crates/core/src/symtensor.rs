//! Symmetric second-order tensors in packed Mandel form.
//!
//! Diagonal entries are stored as-is and off-diagonal entries are stored
//! multiplied by √2, so the component-wise dot product of two packed tensors
//! equals their Frobenius inner product `A·B = Σᵢⱼ AᵢⱼBᵢⱼ`. Fourth-order
//! operators with minor symmetry then act as plain symmetric matrices on the
//! packed vectors (see [`PackedOperator`]).
//!
//! Packing order:
//!
//! ```text
//! d = 1:  [a11]
//! d = 2:  [a11, a22, √2·a12]
//! d = 3:  [a11, a22, a33, √2·a23, √2·a13, √2·a12]
//! ```

use std::f64::consts::SQRT_2;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Maximum number of packed components (d = 3).
pub const MAX_PACKED: usize = 6;

/// Number of packed components for a d×d symmetric tensor.
pub const fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// (row, col) of packed component `k` in dimension `dim`.
pub fn packed_index(dim: usize, k: usize) -> (usize, usize) {
    match (dim, k) {
        (_, k) if k < dim => (k, k),
        (2, 2) => (0, 1),
        (3, 3) => (1, 2),
        (3, 4) => (0, 2),
        (3, 5) => (0, 1),
        _ => panic!("packed index {k} out of range for dim {dim}"),
    }
}

fn packed_slot(dim: usize, i: usize, j: usize) -> usize {
    if i == j {
        return i;
    }
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    match (dim, i, j) {
        (2, 0, 1) => 2,
        (3, 1, 2) => 3,
        (3, 0, 2) => 4,
        (3, 0, 1) => 5,
        _ => panic!("entry ({i},{j}) out of range for dim {dim}"),
    }
}

fn check_dim(dim: usize) {
    assert!((1..=3).contains(&dim), "tensor dimension must be 1, 2 or 3 (got {dim})");
}

/// Packed symmetric d×d tensor, d ∈ {1, 2, 3}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymTensor {
    dim: usize,
    comps: [f64; MAX_PACKED],
}

impl SymTensor {
    pub fn zero(dim: usize) -> Self {
        check_dim(dim);
        SymTensor { dim, comps: [0.0; MAX_PACKED] }
    }

    /// The Kronecker tensor δᵢⱼ.
    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zero(dim);
        for k in 0..dim {
            t.comps[k] = 1.0;
        }
        t
    }

    /// Builds a tensor from already-packed (Mandel-scaled) components.
    pub fn from_packed(dim: usize, packed: &[f64]) -> Self {
        check_dim(dim);
        assert_eq!(packed.len(), packed_len(dim), "packed length mismatch");
        let mut t = Self::zero(dim);
        t.comps[..packed.len()].copy_from_slice(packed);
        t
    }

    /// Symmetric part ½(M + Mᵀ) of a row-major d×d matrix.
    pub fn sym_part(dim: usize, m: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) || m.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "sym_part expects a square matrix with d in 1..=3, got {} entries for d={dim}",
                m.len()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sym_part: non-finite matrix entry".into()));
        }
        Ok(Self::sym_part_unchecked(dim, |i, j| m[i * dim + j]))
    }

    /// Symmetric part of the matrix given entry-wise by `entry(i, j)`.
    /// No finiteness check; used in hot loops on already-validated data.
    #[inline]
    pub fn sym_part_unchecked(dim: usize, entry: impl Fn(usize, usize) -> f64) -> Self {
        let mut t = Self::zero(dim);
        for k in 0..packed_len(dim) {
            let (i, j) = packed_index(dim, k);
            t.comps[k] = if i == j {
                entry(i, i)
            } else {
                0.5 * (entry(i, j) + entry(j, i)) * SQRT_2
            };
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn packed(&self) -> &[f64] {
        &self.comps[..packed_len(self.dim)]
    }

    #[inline]
    pub fn packed_mut(&mut self) -> &mut [f64] {
        let n = packed_len(self.dim);
        &mut self.comps[..n]
    }

    /// Matrix entry (i, j).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let v = self.comps[packed_slot(self.dim, i, j)];
        if i == j {
            v
        } else {
            v / SQRT_2
        }
    }

    /// Row-major d×d matrix.
    pub fn to_matrix(&self) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = self.get(i, j);
            }
        }
        m
    }

    /// Frobenius inner product. Panics on dimension mismatch.
    #[inline]
    pub fn dot(&self, other: &SymTensor) -> f64 {
        assert_eq!(self.dim, other.dim, "SymTensor dimension mismatch");
        self.packed().iter().zip(other.packed()).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.comps[..self.dim].iter().sum()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> SymTensor {
        let mut t = *self;
        t.packed_mut().iter_mut().for_each(|c| *c *= s);
        t
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.packed().iter().all(|c| c.is_finite())
    }

    /// `self + s·other`
    #[inline]
    pub fn axpy(&self, s: f64, other: &SymTensor) -> SymTensor {
        assert_eq!(self.dim, other.dim, "SymTensor dimension mismatch");
        let mut t = *self;
        for (a, b) in t.packed_mut().iter_mut().zip(other.packed()) {
            *a += s * b;
        }
        t
    }
}

impl Add for SymTensor {
    type Output = SymTensor;
    fn add(self, rhs: SymTensor) -> SymTensor {
        self.axpy(1.0, &rhs)
    }
}

impl AddAssign for SymTensor {
    fn add_assign(&mut self, rhs: SymTensor) {
        *self = self.axpy(1.0, &rhs);
    }
}

impl Sub for SymTensor {
    type Output = SymTensor;
    fn sub(self, rhs: SymTensor) -> SymTensor {
        self.axpy(-1.0, &rhs)
    }
}

impl Neg for SymTensor {
    type Output = SymTensor;
    fn neg(self) -> SymTensor {
        self.scale(-1.0)
    }
}

impl Mul<f64> for SymTensor {
    type Output = SymTensor;
    fn mul(self, s: f64) -> SymTensor {
        self.scale(s)
    }
}

/// Symmetric linear operator on packed tensors, i.e. a minor- and
/// major-symmetric fourth-order tensor in Mandel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PackedOperator {
    dim: usize,
    m: [[f64; MAX_PACKED]; MAX_PACKED],
}

impl PackedOperator {
    pub fn zero(dim: usize) -> Self {
        check_dim(dim);
        PackedOperator { dim, m: [[0.0; MAX_PACKED]; MAX_PACKED] }
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut op = Self::zero(dim);
        for k in 0..packed_len(dim) {
            op.m[k][k] = s;
        }
        op
    }

    /// `a·I + b·(t ⊗ t)`
    pub fn identity_plus_rank_one(a: f64, b: f64, t: &SymTensor) -> Self {
        let mut op = Self::scaled_identity(t.dim, a);
        let p = t.packed();
        for i in 0..p.len() {
            for j in i..p.len() {
                let v = b * (p[i] * p[j]);
                op.m[i][j] += v;
                if i != j {
                    op.m[j][i] += v;
                }
            }
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        packed_len(self.dim)
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
    }

    pub fn apply(&self, t: &SymTensor) -> SymTensor {
        assert_eq!(self.dim, t.dim, "operator/tensor dimension mismatch");
        let n = self.size();
        let mut out = SymTensor::zero(self.dim);
        let x = t.packed();
        for (i, o) in out.packed_mut().iter_mut().enumerate() {
            *o = (0..n).map(|j| self.m[i][j] * x[j]).sum();
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut op = *self;
        let n = self.size();
        for i in 0..n {
            for j in 0..n {
                op.m[i][j] = self.m[j][i];
            }
        }
        op
    }

    fn to_nalgebra(self) -> nalgebra::DMatrix<f64> {
        let n = self.size();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.m[i][j])
    }

    /// Spectral norm, computed from the symmetric eigendecomposition.
    pub fn operator_norm(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.to_nalgebra());
        eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.to_nalgebra());
        eig.eigenvalues.iter().fold(f64::INFINITY, |acc, v| acc.min(*v))
    }

    /// Inverse via Cholesky; `None` if not positive definite.
    pub fn inverse(&self) -> Option<Self> {
        let inv = self.to_nalgebra().cholesky()?.inverse();
        let mut op = Self::zero(self.dim);
        for i in 0..self.size() {
            for j in 0..self.size() {
                op.m[i][j] = inv[(i, j)];
            }
        }
        Some(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_part_examples() {
        let t = SymTensor::sym_part(1, &[2.0]).unwrap();
        assert_eq!(t.packed(), &[2.0]);

        let t = SymTensor::sym_part(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.packed(), &[0.0, 0.0, SQRT_2 * 0.5]);
        assert_eq!(t.get(0, 1), 0.5);
        assert_eq!(t.get(1, 0), 0.5);

        let t = SymTensor::sym_part(2, &[1.0, 3.0, 1.0, 2.0]).unwrap();
        assert!((t.norm_sq() - 13.0).abs() < 1e-14);
    }

    #[test]
    fn sym_part_rejects_bad_input() {
        assert!(SymTensor::sym_part(2, &[1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(SymTensor::sym_part(2, &[1.0, 0.0, 0.0]).is_err());
        assert!(SymTensor::sym_part(4, &[0.0; 16]).is_err());
    }

    #[test]
    fn dot_examples() {
        let i2 = SymTensor::identity(2);
        assert_eq!(i2.dot(&i2), 2.0);
        let a = SymTensor::from_packed(2, &[1.0, 2.0, 0.0]);
        let b = SymTensor::from_packed(2, &[3.0, 4.0, 0.0]);
        assert_eq!(a.dot(&b), 11.0);
        assert_eq!(a.dot(&SymTensor::zero(2)), 0.0);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn dot_dim_mismatch_panics() {
        SymTensor::identity(2).dot(&SymTensor::identity(3));
    }

    #[test]
    fn norm_scale_add() {
        assert!((SymTensor::identity(2).norm() - SQRT_2).abs() < 1e-15);
        let a = SymTensor::from_packed(3, &[1.0, -2.0, 0.5, 0.1, 0.2, 0.3]);
        assert_eq!(a.scale(0.0), SymTensor::zero(3));
        assert_eq!(a + a.scale(-1.0), SymTensor::zero(3));
        assert_eq!(a.to_matrix().len(), 9);
        assert_eq!(a.trace(), -0.5);
    }

    #[test]
    fn rank_one_operator_is_symmetric() {
        let t = SymTensor::from_packed(3, &[1.0, -2.0, 0.5, 0.1, 0.2, 0.3]);
        let op = PackedOperator::identity_plus_rank_one(0.3, 1.7, &t);
        assert_eq!(op, op.transpose());
        let inv = op.inverse().unwrap();
        let x = SymTensor::from_packed(3, &[0.4, 0.2, -1.0, 2.0, 0.0, 1.0]);
        let back = inv.apply(&op.apply(&x));
        assert!((back - x).norm() < 1e-12);
    }
}
