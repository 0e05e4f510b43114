//! Conforming vector P1 finite elements on intervals and rectangles.
//!
//! Degrees of freedom live on interior nodes only (`d` per node, node-major),
//! so every basis function vanishes on ∂Ω; Dirichlet data enter through an
//! analytic lift. Quadrature: 2-point Gauss per interval, 3-point mid-edge
//! rule per triangle. Strains are element-wise constant for the P1 part.

mod banded;
mod mesh;

pub use banded::{BandedCholesky, BandedSym};
pub use mesh::{Element, Mesh};

use crate::field::{AnalyticField, Grad, SharedField, Vector, VectorField};
use crate::symtensor::{PackedOperator, SymTensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadPoint {
    pub elem: usize,
    pub x: Vector,
    pub weight: f64,
    /// P1 shape values of the element's vertices at `x`.
    pub shape: [f64; 3],
}

/// Finite-element field: nodal values on all nodes plus an optional analytic
/// lift added on top.
#[derive(Clone)]
pub struct FEField {
    /// `nodal[node * dim + c]`
    pub nodal: Vec<f64>,
    pub lift: Option<SharedField>,
}

#[derive(Clone, Debug)]
pub struct FESpace {
    mesh: Mesh,
    node_dof: Vec<Option<usize>>,
    n_dofs: usize,
    qps: Vec<QuadPoint>,
    qp_per_elem: usize,
    bandwidth: usize,
    /// ε(φ_a e_c) per element, local index `a * dim + c`.
    basis_strain: Vec<SymTensor>,
}

impl FESpace {
    pub fn new(mesh: Mesh) -> Self {
        let dim = mesh.dim();
        let mut node_dof = vec![None; mesh.nodes().len()];
        let mut n_dofs = 0;
        for (k, slot) in node_dof.iter_mut().enumerate() {
            if !mesh.is_boundary(k) {
                *slot = Some(n_dofs);
                n_dofs += dim;
            }
        }

        let mut qps = Vec::new();
        let qp_per_elem = if dim == 1 { 2 } else { 3 };
        for (ei, e) in mesh.elements().iter().enumerate() {
            let p = e.nodes.map(|k| mesh.nodes()[k]);
            if dim == 1 {
                let g = 0.5 / 3f64.sqrt();
                for s in [0.5 - g, 0.5 + g] {
                    qps.push(QuadPoint {
                        elem: ei,
                        x: [p[0][0] + s * (p[1][0] - p[0][0]), 0.0],
                        weight: 0.5 * e.measure,
                        shape: [1.0 - s, s, 0.0],
                    });
                }
            } else {
                for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                    let mut shape = [0.0; 3];
                    shape[a] = 0.5;
                    shape[b] = 0.5;
                    shape[c] = 0.0;
                    qps.push(QuadPoint {
                        elem: ei,
                        x: [0.5 * (p[a][0] + p[b][0]), 0.5 * (p[a][1] + p[b][1])],
                        weight: e.measure / 3.0,
                        shape,
                    });
                }
            }
        }

        let mut bandwidth = 0;
        for e in mesh.elements() {
            let dofs: Vec<usize> = e.nodes[..=dim].iter().filter_map(|&k| node_dof[k]).collect();
            for &i in &dofs {
                for &j in &dofs {
                    bandwidth = bandwidth.max(i.abs_diff(j) + dim - 1);
                }
            }
        }

        let nloc = (dim + 1) * dim;
        let mut basis_strain = Vec::with_capacity(mesh.elements().len() * nloc);
        for e in mesh.elements() {
            for a in 0..=dim {
                let g = e.grads[a];
                for c in 0..dim {
                    basis_strain.push(SymTensor::sym_part_unchecked(dim, |i, j| if i == c { g[j] } else { 0.0 }));
                }
            }
        }

        FESpace { mesh, node_dof, n_dofs, qps, qp_per_elem, bandwidth, basis_strain }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    /// Number of interior degrees of freedom.
    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn quad_points(&self) -> &[QuadPoint] {
        &self.qps
    }

    pub fn n_qp(&self) -> usize {
        self.qps.len()
    }

    pub fn qp_per_elem(&self) -> usize {
        self.qp_per_elem
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Interior dof of (node, component), `None` on the boundary.
    pub fn dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.node_dof[node].map(|b| b + comp)
    }

    fn nloc(&self) -> usize {
        (self.dim() + 1) * self.dim()
    }

    /// (local index, global dof) pairs of element `e` that are interior.
    fn local_dofs(&self, e: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let dim = self.dim();
        let el = &self.mesh.elements()[e];
        (0..=dim).flat_map(move |a| {
            (0..dim).filter_map(move |c| self.dof(el.nodes[a], c).map(|g| (a * dim + c, a, g)))
        })
    }

    fn basis(&self, e: usize, loc: usize) -> &SymTensor {
        &self.basis_strain[e * self.nloc() + loc]
    }

    /// Consistent mass matrix on interior dofs.
    pub fn assemble_mass(&self) -> BandedSym {
        let mut m = BandedSym::zeros(self.n_dofs, self.bandwidth);
        let dim = self.dim();
        for qp in &self.qps {
            let el = &self.mesh.elements()[qp.elem];
            for a in 0..=dim {
                for b in 0..=dim {
                    for c in 0..dim {
                        if let (Some(i), Some(j)) = (self.dof(el.nodes[a], c), self.dof(el.nodes[b], c)) {
                            if i >= j {
                                m.add(i, j, qp.weight * qp.shape[a] * qp.shape[b]);
                            }
                        }
                    }
                }
            }
        }
        m
    }

    /// Mass matrix over all node dofs (`node * dim + c`), boundary included.
    pub fn assemble_mass_full(&self) -> BandedSym {
        let dim = self.dim();
        let mut bw = 0;
        for e in self.mesh.elements() {
            for &p in &e.nodes[..=dim] {
                for &q in &e.nodes[..=dim] {
                    bw = bw.max(p.abs_diff(q) * dim + dim - 1);
                }
            }
        }
        let mut m = BandedSym::zeros(self.mesh.nodes().len() * dim, bw);
        for qp in &self.qps {
            let el = &self.mesh.elements()[qp.elem];
            for a in 0..=dim {
                for b in 0..=dim {
                    for c in 0..dim {
                        let (i, j) = (el.nodes[a] * dim + c, el.nodes[b] * dim + c);
                        if i >= j {
                            m.add(i, j, qp.weight * qp.shape[a] * qp.shape[b]);
                        }
                    }
                }
            }
        }
        m
    }

    /// ε(u₀ + Σ Cⱼ ωⱼ) at every quadrature point. `lift_grad`, when given,
    /// holds ∇u₀ per quadrature point.
    pub fn strain_at_qp(&self, coeffs: &[f64], lift_grad: Option<&[Grad]>) -> Vec<SymTensor> {
        let mut out = Vec::with_capacity(self.qps.len());
        self.strain_at_qp_into(coeffs, lift_grad, &mut out);
        out
    }

    pub fn strain_at_qp_into(&self, coeffs: &[f64], lift_grad: Option<&[Grad]>, out: &mut Vec<SymTensor>) {
        assert_eq!(coeffs.len(), self.n_dofs, "coefficient length mismatch");
        if let Some(g) = lift_grad {
            assert_eq!(g.len(), self.qps.len(), "lift gradient length mismatch");
        }
        let dim = self.dim();
        out.clear();
        for e in 0..self.mesh.elements().len() {
            let mut eps = SymTensor::zero(dim);
            for (loc, _, g) in self.local_dofs(e) {
                eps = eps.axpy(coeffs[g], self.basis(e, loc));
            }
            for k in 0..self.qp_per_elem {
                let q = e * self.qp_per_elem + k;
                out.push(match lift_grad {
                    Some(lg) => eps + grad_to_strain(dim, &lg[q]),
                    None => eps,
                });
            }
        }
    }

    /// ε of a full field (nodal values on all nodes, lift included) at every
    /// quadrature point.
    pub fn field_strain_at_qp(&self, field: &FEField, t: f64) -> Vec<SymTensor> {
        let dim = self.dim();
        self.qps
            .iter()
            .map(|qp| {
                let el = &self.mesh.elements()[qp.elem];
                let mut g = match &field.lift {
                    Some(l) => l.grad(t, qp.x),
                    None => [[0.0; 2]; 2],
                };
                for a in 0..=dim {
                    for c in 0..dim {
                        for k in 0..dim {
                            g[c][k] += field.nodal[el.nodes[a] * dim + c] * el.grads[a][k];
                        }
                    }
                }
                grad_to_strain(dim, &g)
            })
            .collect()
    }

    /// Vector with entries ∫ T·∇ωⱼ = ∫ T·ε(ωⱼ).
    pub fn assemble_stress_load(&self, stress: &[SymTensor]) -> Vec<f64> {
        assert_eq!(stress.len(), self.qps.len(), "stress length mismatch");
        let mut out = vec![0.0; self.n_dofs];
        for (qp, t) in self.qps.iter().zip(stress) {
            for (loc, _, g) in self.local_dofs(qp.elem) {
                out[g] += qp.weight * t.dot(self.basis(qp.elem, loc));
            }
        }
        out
    }

    /// Σ_qp w ε(ωᵢ)·C_qp ε(ωⱼ), scaled by `scale`.
    pub fn assemble_tangent(&self, ops: &[PackedOperator], scale: f64) -> BandedSym {
        assert_eq!(ops.len(), self.qps.len(), "operator length mismatch");
        let mut k = BandedSym::zeros(self.n_dofs, self.bandwidth);
        for (qp, op) in self.qps.iter().zip(ops) {
            let locs: Vec<(usize, usize)> = self.local_dofs(qp.elem).map(|(l, _, g)| (l, g)).collect();
            for &(li, gi) in &locs {
                let cb = op.apply(self.basis(qp.elem, li));
                for &(lj, gj) in &locs {
                    if gi >= gj {
                        k.add(gi, gj, scale * qp.weight * cb.dot(self.basis(qp.elem, lj)));
                    }
                }
            }
        }
        k
    }

    /// ∫ v·ωⱼ for a vector field given by its values at the quadrature points.
    pub fn assemble_vector_load(&self, values: &[Vector]) -> Vec<f64> {
        assert_eq!(values.len(), self.qps.len(), "value length mismatch");
        let mut out = vec![0.0; self.n_dofs];
        for (qp, v) in self.qps.iter().zip(values) {
            for (loc, a, g) in self.local_dofs(qp.elem) {
                let c = loc % self.dim();
                out[g] += qp.weight * qp.shape[a] * v[c];
            }
        }
        out
    }

    /// ⟨f(t), ωⱼ⟩
    pub fn assemble_forcing(&self, f: &dyn VectorField, t: f64) -> Vec<f64> {
        let values: Vec<Vector> = self.qps.iter().map(|q| f.value(t, q.x)).collect();
        self.assemble_vector_load(&values)
    }

    /// Σ Cⱼ ωⱼ at every quadrature point.
    pub fn values_at_qp(&self, coeffs: &[f64]) -> Vec<Vector> {
        assert_eq!(coeffs.len(), self.n_dofs);
        let dim = self.dim();
        self.qps
            .iter()
            .map(|qp| {
                let mut v = [0.0; 2];
                for (loc, a, g) in self.local_dofs(qp.elem) {
                    v[loc % dim] += qp.shape[a] * coeffs[g];
                }
                v
            })
            .collect()
    }

    /// Nodal interpolant of `field(t, ·)` on all nodes.
    pub fn interpolate(&self, field: &dyn AnalyticField, t: f64) -> FEField {
        let dim = self.dim();
        let mut nodal = vec![0.0; self.mesh.nodes().len() * dim];
        for (k, x) in self.mesh.nodes().iter().enumerate() {
            let v = field.value(t, *x);
            nodal[k * dim..(k + 1) * dim].copy_from_slice(&v[..dim]);
        }
        FEField { nodal, lift: None }
    }

    /// Interior coefficients to a full field (zero on ∂Ω) with optional lift.
    pub fn field_from_interior(&self, coeffs: &[f64], lift: Option<SharedField>) -> FEField {
        assert_eq!(coeffs.len(), self.n_dofs);
        let dim = self.dim();
        let mut nodal = vec![0.0; self.mesh.nodes().len() * dim];
        for k in 0..self.mesh.nodes().len() {
            for c in 0..dim {
                if let Some(g) = self.dof(k, c) {
                    nodal[k * dim + c] = coeffs[g];
                }
            }
        }
        FEField { nodal, lift }
    }

    /// Interior coefficients of a full field (boundary values dropped).
    pub fn interior_of(&self, field: &FEField) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; self.n_dofs];
        for k in 0..self.mesh.nodes().len() {
            for c in 0..dim {
                if let Some(g) = self.dof(k, c) {
                    out[g] = field.nodal[k * dim + c];
                }
            }
        }
        out
    }

    /// Field values at the quadrature points at time t (lift included).
    pub fn field_at_qp(&self, field: &FEField, t: f64) -> Vec<Vector> {
        let dim = self.dim();
        self.qps
            .iter()
            .map(|qp| {
                let el = &self.mesh.elements()[qp.elem];
                let mut v = match &field.lift {
                    Some(l) => l.value(t, qp.x),
                    None => [0.0; 2],
                };
                for a in 0..=dim {
                    for c in 0..dim {
                        v[c] += qp.shape[a] * field.nodal[el.nodes[a] * dim + c];
                    }
                }
                v
            })
            .collect()
    }

    pub fn l2_norm(&self, field: &FEField, t: f64) -> f64 {
        self.qps
            .iter()
            .zip(self.field_at_qp(field, t))
            .map(|(qp, v)| qp.weight * (v[0] * v[0] + v[1] * v[1]))
            .sum::<f64>()
            .sqrt()
    }

    /// ‖field(t) − exact(t)‖_{L²} with this space's quadrature.
    pub fn l2_error(&self, field: &FEField, exact: &dyn VectorField, t: f64) -> f64 {
        self.qps
            .iter()
            .zip(self.field_at_qp(field, t))
            .map(|(qp, v)| {
                let u = exact.value(t, qp.x);
                qp.weight * ((v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2))
            })
            .sum::<f64>()
            .sqrt()
    }

    /// L² norm of Σ Cⱼ ωⱼ (no lift).
    pub fn l2_norm_coeffs(&self, coeffs: &[f64]) -> f64 {
        self.qps
            .iter()
            .zip(self.values_at_qp(coeffs))
            .map(|(qp, v)| qp.weight * (v[0] * v[0] + v[1] * v[1]))
            .sum::<f64>()
            .sqrt()
    }
}

/// sym(∇u) as a packed tensor.
#[inline]
pub fn grad_to_strain(dim: usize, g: &Grad) -> SymTensor {
    SymTensor::sym_part_unchecked(dim, |i, j| g[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AffineField, ZeroField};
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    struct SinField;
    impl VectorField for SinField {
        fn value(&self, _: f64, x: Vector) -> Vector {
            [(std::f64::consts::PI * x[0]).sin(), 0.0]
        }
    }
    impl AnalyticField for SinField {
        fn grad(&self, _: f64, x: Vector) -> Grad {
            [[std::f64::consts::PI * (std::f64::consts::PI * x[0]).cos(), 0.0], [0.0; 2]]
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
    }

    fn space_1d(cells: usize) -> FESpace {
        FESpace::new(Mesh::interval(0.0, 1.0, cells).unwrap())
    }

    fn space_2d() -> FESpace {
        FESpace::new(Mesh::rectangle(0.0, 1.0, 0.0, 2.0, 4, 5).unwrap())
    }

    #[test]
    fn mass_row_sums_equal_h() {
        let s = space_1d(8);
        let m = s.assemble_mass_full();
        let ones = vec![1.0; 9];
        let sums = m.matvec(&ones);
        for &v in &sums[1..8] {
            assert!((v - 0.125).abs() < 1e-15);
        }
        // h/6 {1, 4, 1} stencil
        assert!((m.get(3, 3) - 4.0 * 0.125 / 6.0).abs() < 1e-16);
        assert!((m.get(3, 2) - 0.125 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn mass_is_spd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for s in [space_1d(9), space_2d()] {
            let m = s.assemble_mass();
            let dense = m.to_dense();
            for i in 0..s.n_dofs() {
                for j in 0..s.n_dofs() {
                    assert_eq!(dense[i][j], dense[j][i]);
                }
            }
            for _ in 0..100 {
                let x: Vec<f64> = (0..s.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                assert!(m.quadratic_form(&x) > 0.0);
            }
            assert!(m.cholesky().is_ok());
        }
    }

    #[test]
    fn partition_of_unity() {
        for s in [space_1d(5), space_2d()] {
            for qp in s.quad_points() {
                assert!((qp.shape.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn strain_examples() {
        let s = space_1d(6);
        let zero = s.strain_at_qp(&vec![0.0; s.n_dofs()], None);
        assert!(zero.iter().all(|e| e.norm() == 0.0));

        let ramp = AffineField { offset: [0.0; 2], matrix: [[1.0, 0.0], [0.0, 0.0]] };
        let eps = s.field_strain_at_qp(&s.interpolate(&ramp, 0.0), 0.0);
        assert!(eps.iter().all(|e| (e.packed()[0] - 1.0).abs() < 1e-13));
        // same field carried entirely by the lift
        let grads: Vec<Grad> = s.quad_points().iter().map(|q| ramp.grad(0.0, q.x)).collect();
        let eps = s.strain_at_qp(&vec![0.0; s.n_dofs()], Some(&grads));
        assert!(eps.iter().all(|e| e.packed()[0] == 1.0));

        let s = space_2d();
        let shear = AffineField { offset: [0.0; 2], matrix: [[0.0, 1.0], [0.0, 0.0]] };
        for e in s.field_strain_at_qp(&s.interpolate(&shear, 0.0), 0.0) {
            assert!((e.get(0, 1) - 0.5).abs() < 1e-13);
            assert!(e.get(0, 0).abs() < 1e-13 && e.get(1, 1).abs() < 1e-13);
        }
    }

    #[test]
    fn stress_load_examples() {
        let s = space_1d(3);
        let zero = s.assemble_stress_load(&vec![SymTensor::zero(1); s.n_qp()]);
        assert!(zero.iter().all(|v| *v == 0.0));

        let constant = s.assemble_stress_load(&vec![SymTensor::from_packed(1, &[2.5]); s.n_qp()]);
        assert!(constant.iter().all(|v| v.abs() < 1e-15));

        // T(x) = x: ∫ x φⱼ' = -∫ φⱼ = -h for interior hats
        let stress: Vec<SymTensor> = s.quad_points().iter().map(|q| SymTensor::from_packed(1, &[q.x[0]])).collect();
        let load = s.assemble_stress_load(&stress);
        for v in load {
            assert!((v + 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_reproduces_linears() {
        for s in [space_1d(7), space_2d()] {
            let lin = AffineField { offset: [0.3, -1.0], matrix: [[1.0, 2.0], [-0.5, 0.25]] };
            let lin = if s.dim() == 1 { AffineField { offset: [0.3, 0.0], matrix: [[1.0, 0.0], [0.0, 0.0]] } } else { lin };
            let f = s.interpolate(&lin, 0.0);
            assert!(s.l2_error(&f, &lin, 0.0) <= 1e-13);
            let z = s.interpolate(&ZeroField, 0.0);
            assert_eq!(s.l2_norm(&z, 0.0), 0.0);
        }
    }

    #[test]
    fn interpolation_error_is_second_order() {
        let errs: Vec<f64> = [16, 32, 64, 128]
            .iter()
            .map(|&n| {
                let s = space_1d(n);
                s.l2_error(&s.interpolate(&SinField, 0.0), &SinField, 0.0)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.9..=2.1).contains(&order), "order {order}");
        }
    }

    #[test]
    fn dirichlet_compliance() {
        let s = space_2d();
        let coeffs: Vec<f64> = (0..s.n_dofs()).map(|i| (i as f64).sin()).collect();
        let f = s.field_from_interior(&coeffs, Some(Arc::new(ZeroField)));
        for (k, _) in s.mesh().nodes().iter().enumerate() {
            if s.mesh().is_boundary(k) {
                assert_eq!(f.nodal[2 * k], 0.0);
                assert_eq!(f.nodal[2 * k + 1], 0.0);
            }
        }
        assert_eq!(s.interior_of(&f), coeffs);
    }

    #[test]
    fn tangent_with_identity_is_strain_gram_matrix() {
        let s = space_2d();
        let ops = vec![PackedOperator::scaled_identity(2, 1.0); s.n_qp()];
        let k = s.assemble_tangent(&ops, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..s.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eps = s.strain_at_qp(&x, None);
        let direct: f64 = s.quad_points().iter().zip(&eps).map(|(q, e)| q.weight * e.norm_sq()).sum();
        assert!((k.quadratic_form(&x) - direct).abs() < 1e-10 * direct);
        // K x equals the stress load of T = ε(x)
        let kx = k.matvec(&x);
        let load = s.assemble_stress_load(&eps);
        for (a, b) in kx.iter().zip(&load) {
            assert!((a - b).abs() < 1e-11);
        }
    }
}
