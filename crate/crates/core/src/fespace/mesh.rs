use crate::error::{Error, Result};
use crate::field::Vector;

/// Simplex of a 1D or 2D mesh with its constant P1 shape-function gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    /// Vertex indices; only the first `dim + 1` are used.
    pub nodes: [usize; 3],
    /// Length (d = 1) or area (d = 2).
    pub measure: f64,
    /// `grads[a]` = ∇φ_a on this element.
    pub grads: [Vector; 3],
}

/// Interval or structured triangulation of a rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<Vector>,
    elements: Vec<Element>,
    boundary: Vec<bool>,
    /// [a, b] or [a, b, c, d]
    bounds: [f64; 4],
}

impl Mesh {
    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidInput("interval mesh needs at least one cell".into()));
        }
        let coords = (0..=cells).map(|i| a + (b - a) * i as f64 / cells as f64).collect();
        Self::interval_from_nodes(coords)
    }

    /// 1D mesh from strictly increasing node coordinates.
    pub fn interval_from_nodes(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput("interval mesh needs at least two nodes".into()));
        }
        if coords.iter().any(|x| !x.is_finite()) || coords.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("interval nodes must be finite and strictly increasing".into()));
        }
        let n = coords.len();
        let elements = coords
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let h = w[1] - w[0];
                Element { nodes: [k, k + 1, 0], measure: h, grads: [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0; 2]] }
            })
            .collect();
        let mut boundary = vec![false; n];
        boundary[0] = true;
        boundary[n - 1] = true;
        Ok(Mesh {
            dim: 1,
            bounds: [coords[0], coords[n - 1], 0.0, 0.0],
            nodes: coords.into_iter().map(|x| [x, 0.0]).collect(),
            elements,
            boundary,
        })
    }

    /// Rectangle [a,b]×[c,d] with nx×ny cells, each split along its
    /// lower-left to upper-right diagonal.
    pub fn rectangle(a: f64, b: f64, c: f64, d: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidInput("rectangle mesh needs at least one cell per direction".into()));
        }
        if !(b > a && d > c) || ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid rectangle [{a},{b}]x[{c},{d}]")));
        }
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut boundary = Vec::with_capacity(nodes.capacity());
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([a + (b - a) * i as f64 / nx as f64, c + (d - c) * j as f64 / ny as f64]);
                boundary.push(i == 0 || i == nx || j == 0 || j == ny);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (n00, n10, n01, n11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                for tri in [[n00, n10, n11], [n00, n11, n01]] {
                    elements.push(triangle(&nodes, tri)?);
                }
            }
        }
        Ok(Mesh { dim: 2, nodes, elements, boundary, bounds: [a, b, c, d] })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Vector] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    /// Measure of the domain.
    pub fn domain_measure(&self) -> f64 {
        let [a, b, c, d] = self.bounds;
        if self.dim == 1 {
            b - a
        } else {
            (b - a) * (d - c)
        }
    }

    /// Largest element diameter.
    pub fn mesh_size(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| {
                let verts = &e.nodes[..=self.dim];
                let mut h: f64 = 0.0;
                for (k, &p) in verts.iter().enumerate() {
                    for &q in &verts[k + 1..] {
                        let (x, y) = (self.nodes[p], self.nodes[q]);
                        h = h.max(((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt());
                    }
                }
                h
            })
            .fold(0.0, f64::max)
    }
}

fn triangle(nodes: &[Vector], tri: [usize; 3]) -> Result<Element> {
    let [p0, p1, p2] = tri.map(|k| nodes[k]);
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if det <= 0.0 {
        return Err(Error::InvalidData(format!("degenerate or inverted triangle {tri:?}")));
    }
    // ∇λ_a = rot90(opposite edge) / det
    let grads = [
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ];
    Ok(Element { nodes: tri, measure: 0.5 * det, grads })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_invariants() {
        let m = Mesh::interval(0.0, 2.0, 7).unwrap();
        assert!(m.elements().iter().all(|e| e.measure > 0.0));
        let total: f64 = m.elements().iter().map(|e| e.measure).sum();
        assert!((total - 2.0).abs() <= 1e-12 * 2.0);
        let flags: Vec<usize> = (0..m.nodes().len()).filter(|&k| m.is_boundary(k)).collect();
        assert_eq!(flags, vec![0, 7]);
        assert!(Mesh::interval_from_nodes(vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn rectangle_invariants() {
        let m = Mesh::rectangle(-1.0, 2.0, 0.0, 0.5, 5, 3).unwrap();
        assert_eq!(m.elements().len(), 30);
        let total: f64 = m.elements().iter().map(|e| e.measure).sum();
        assert!((total - m.domain_measure()).abs() <= 1e-12 * m.domain_measure());
        for (k, x) in m.nodes().iter().enumerate() {
            let on = x[0] == -1.0 || x[0] == 2.0 || x[1] == 0.0 || x[1] == 0.5;
            assert_eq!(m.is_boundary(k), on);
        }
        // gradients of barycentrics sum to zero
        for e in m.elements() {
            let sx: f64 = e.grads.iter().map(|g| g[0]).sum();
            let sy: f64 = e.grads.iter().map(|g| g[1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
    }
}
