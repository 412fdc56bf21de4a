//! Q2/Q1 Taylor-Hood space on a hexahedral mesh.
//!
//! Displacement and velocity share the triquadratic space; pressure lives on
//! the continuous trilinear space over the mesh vertices. Global unknowns are
//! ordered as `[u/v: 3·node + comp | p: pnode]`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fem::basis::{q1_shape, q2_face_nodes, q2_index, q2_shape, QuadratureRule, N_Q1, N_Q2};
use crate::fem::mesh::HexMesh;
use crate::tensors::Tensor2;

/// Gauss points per direction for volume and face integrals.
pub const QUAD_POINTS: usize = 4;

/// Shape data at one volume quadrature point.
#[derive(Clone, Debug, PartialEq)]
pub struct QpGeom {
    pub n: [f64; N_Q2],
    /// Reference-configuration gradients `∇_X N_a`.
    pub grad: [[f64; 3]; N_Q2],
    pub m: [f64; N_Q1],
    /// Quadrature weight times `det(∂X/∂ξ)`.
    pub wdet: f64,
    pub x: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct TaylorHoodSpace {
    pub node_coords: Vec<[f64; 3]>,
    pub elem_nodes: Vec<[usize; N_Q2]>,
    pub elem_pnodes: Vec<[usize; N_Q1]>,
    /// Mesh vertex of each pressure node.
    pub pnode_vertex: Vec<usize>,
    pub nqp: usize,
    qp: Vec<QpGeom>,
    quad_1d: usize,
}

/// Geometric map `ξ ↦ X` of a trilinear cell and its Jacobian `∂X/∂ξ`.
fn geometry(corners: &[[f64; 3]; 8], xi: [f64; 3]) -> ([f64; 3], Tensor2) {
    let (n, g) = q1_shape(xi);
    let mut x = [0.0; 3];
    let mut jac = Tensor2::zero();
    for v in 0..N_Q1 {
        for i in 0..3 {
            x[i] += n[v] * corners[v][i];
            for j in 0..3 {
                jac.0[i][j] += corners[v][i] * g[v][j];
            }
        }
    }
    (x, jac)
}

impl TaylorHoodSpace {
    /// Builds the space with [`QUAD_POINTS`] Gauss points per direction.
    pub fn new(mesh: &HexMesh) -> Result<Self> {
        Self::with_quadrature(mesh, QUAD_POINTS)
    }

    pub fn with_quadrature(mesh: &HexMesh, quad_1d: usize) -> Result<Self> {
        if mesh.cells.is_empty() {
            return Err(Error::InvalidInput("mesh has no cells".into()));
        }
        // Q2 nodes are shared through the sorted vertex set of their entity.
        let mut keys: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut node_coords = Vec::new();
        let mut elem_nodes = Vec::with_capacity(mesh.cells.len());
        let mut pmap: HashMap<usize, usize> = HashMap::new();
        let mut pnode_vertex = Vec::new();
        let mut elem_pnodes = Vec::with_capacity(mesh.cells.len());
        for cell in &mesh.cells {
            let corners = cell.map(|v| mesh.vertices[v]);
            let mut nodes = [0; N_Q2];
            for (a, node) in nodes.iter_mut().enumerate() {
                let idx = q2_index(a);
                let mut key: Vec<usize> = (0..8)
                    .filter(|&v| {
                        let c = crate::fem::basis::VTK_CORNERS[v];
                        (0..3).all(|d| idx[d] == 1 || idx[d] == 2 * c[d])
                    })
                    .map(|v| cell[v])
                    .collect();
                key.sort_unstable();
                let next = node_coords.len();
                *node = *keys.entry(key).or_insert_with(|| {
                    node_coords.push(geometry(&corners, idx.map(|i| i as f64 - 1.0)).0);
                    next
                });
            }
            elem_nodes.push(nodes);
            elem_pnodes.push(cell.map(|v| {
                let next = pnode_vertex.len();
                *pmap.entry(v).or_insert_with(|| {
                    pnode_vertex.push(v);
                    next
                })
            }));
        }

        let rule = QuadratureRule::gauss(quad_1d);
        let nqp = quad_1d.pow(3);
        let mut qp = Vec::with_capacity(nqp * mesh.cells.len());
        for (e, cell) in mesh.cells.iter().enumerate() {
            let corners = cell.map(|v| mesh.vertices[v]);
            for k in 0..quad_1d {
                for j in 0..quad_1d {
                    for i in 0..quad_1d {
                        let xi = [rule.points[i], rule.points[j], rule.points[k]];
                        let w = rule.weights[i] * rule.weights[j] * rule.weights[k];
                        let (x, jac) = geometry(&corners, xi);
                        let det = jac.det();
                        if !(det > 0.0) {
                            return Err(Error::ElementInversion { element: e, point: qp.len() % nqp, jacobian: det });
                        }
                        let jinv_t = jac.inverse()?.transpose();
                        let (n, gref) = q2_shape(xi);
                        let grad = gref.map(|g| jinv_t.mul_vec(&g));
                        let m = q1_shape(xi).0;
                        qp.push(QpGeom { n, grad, m, wdet: w * det, x });
                    }
                }
            }
        }
        Ok(TaylorHoodSpace { node_coords, elem_nodes, elem_pnodes, pnode_vertex, nqp, qp, quad_1d })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_pnodes(&self) -> usize {
        self.pnode_vertex.len()
    }

    pub fn n_cells(&self) -> usize {
        self.elem_nodes.len()
    }

    pub fn n_vdofs(&self) -> usize {
        3 * self.node_coords.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_vdofs() + self.n_pnodes()
    }

    #[inline]
    pub fn qp(&self, elem: usize, q: usize) -> &QpGeom {
        &self.qp[elem * self.nqp + q]
    }

    pub fn element_qps(&self, elem: usize) -> &[QpGeom] {
        &self.qp[elem * self.nqp..(elem + 1) * self.nqp]
    }

    /// Global unknown indices of an element: 81 velocity entries
    /// (`3·a + comp`) followed by 8 pressure entries.
    pub fn element_dofs(&self, elem: usize) -> [usize; 3 * N_Q2 + N_Q1] {
        let nv = self.n_vdofs();
        let nodes = &self.elem_nodes[elem];
        let pn = &self.elem_pnodes[elem];
        std::array::from_fn(|l| if l < 3 * N_Q2 { 3 * nodes[l / 3] + l % 3 } else { nv + pn[l - 3 * N_Q2] })
    }

    pub fn volume(&self) -> f64 {
        self.qp.iter().map(|g| g.wdet).sum()
    }

    /// Sorted Q2 nodes lying on a face set.
    pub fn face_set_nodes(&self, mesh: &HexMesh, set: &str) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = mesh
            .face_set(set)?
            .iter()
            .flat_map(|&(e, f)| q2_face_nodes(f).map(|a| self.elem_nodes[e][a]))
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// `∫ N_a dA` over a face set, per Q2 node, in the reference configuration.
    pub fn face_set_weights(&self, mesh: &HexMesh, set: &str) -> Result<Vec<(usize, f64)>> {
        let rule = QuadratureRule::gauss(self.quad_1d);
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for &(e, f) in mesh.face_set(set)? {
            let corners = mesh.cells[e].map(|v| mesh.vertices[v]);
            let (axis, side) = (f / 2, f % 2);
            let (t1, t2) = ((axis + 1) % 3, (axis + 2) % 3);
            for (s, ws) in rule.points.iter().zip(&rule.weights) {
                for (t, wt) in rule.points.iter().zip(&rule.weights) {
                    let mut xi = [0.0; 3];
                    xi[axis] = if side == 0 { -1.0 } else { 1.0 };
                    xi[t1] = *s;
                    xi[t2] = *t;
                    let (_, jac) = geometry(&corners, xi);
                    let a = [jac.0[0][t1], jac.0[1][t1], jac.0[2][t1]];
                    let b = [jac.0[0][t2], jac.0[1][t2], jac.0[2][t2]];
                    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                    let da = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt() * ws * wt;
                    let n = q2_shape(xi).0;
                    for a in q2_face_nodes(f) {
                        *acc.entry(self.elem_nodes[e][a]).or_insert(0.0) += n[a] * da;
                    }
                }
            }
        }
        let mut out: Vec<(usize, f64)> = acc.into_iter().collect();
        out.sort_unstable_by_key(|&(n, _)| n);
        Ok(out)
    }

    /// Nodal interpolation of a vector field into the Q2 space.
    /// Cell and reference coordinates of a reference-configuration point, or
    /// `None` if no cell contains it.
    pub fn locate(&self, mesh: &HexMesh, x: [f64; 3]) -> Option<(usize, [f64; 3])> {
        const SLACK: f64 = 1e-10;
        for (e, cell) in mesh.cells.iter().enumerate() {
            let corners = cell.map(|v| mesh.vertices[v]);
            let lo: [f64; 3] = std::array::from_fn(|d| corners.iter().map(|c| c[d]).fold(f64::INFINITY, f64::min));
            let hi: [f64; 3] = std::array::from_fn(|d| corners.iter().map(|c| c[d]).fold(f64::NEG_INFINITY, f64::max));
            let scale = (0..3).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);
            if (0..3).any(|d| x[d] < lo[d] - SLACK * scale || x[d] > hi[d] + SLACK * scale) {
                continue;
            }
            let mut xi = [0.0; 3];
            for _ in 0..50 {
                let (xx, jac) = geometry(&corners, xi);
                let Ok(inv) = jac.inverse() else { break };
                let d = inv.mul_vec(&std::array::from_fn(|i| x[i] - xx[i]));
                for i in 0..3 {
                    xi[i] += d[i];
                }
                if d.iter().all(|v| v.abs() < 1e-14) {
                    break;
                }
            }
            if xi.iter().all(|v| v.abs() <= 1.0 + 1e-9) {
                return Some((e, xi.map(|v| v.clamp(-1.0, 1.0))));
            }
        }
        None
    }

    /// Values of a nodal vector field and a pressure field at `xi` in `elem`.
    pub fn evaluate(&self, elem: usize, xi: [f64; 3], vec_field: &[f64], p_field: &[f64]) -> ([f64; 3], f64) {
        let (n, _) = q2_shape(xi);
        let (m, _) = q1_shape(xi);
        let mut v = [0.0; 3];
        for (a, &node) in self.elem_nodes[elem].iter().enumerate() {
            for i in 0..3 {
                v[i] += n[a] * vec_field[3 * node + i];
            }
        }
        let p = self.elem_pnodes[elem].iter().zip(&m).map(|(&c, w)| w * p_field[c]).sum();
        (v, p)
    }

    pub fn interpolate_vector<F: Fn([f64; 3]) -> [f64; 3]>(&self, f: F) -> Vec<f64> {
        self.node_coords.iter().flat_map(|&x| f(x)).collect()
    }

    /// Nodal interpolation of a scalar field into the Q1 pressure space.
    pub fn interpolate_scalar<F: Fn([f64; 3]) -> f64>(&self, mesh: &HexMesh, f: F) -> Vec<f64> {
        self.pnode_vertex.iter().map(|&v| f(mesh.vertices[v])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{generate_box_mesh, generate_lblock_mesh, LBlockDims, LBlockDivisions};

    #[test]
    fn node_counts() {
        let m = generate_box_mesh([0.05; 3], [2, 2, 2]).unwrap();
        let s = TaylorHoodSpace::new(&m).unwrap();
        assert_eq!(s.n_nodes(), 125);
        assert_eq!(s.n_pnodes(), 27);
        assert_eq!(s.nqp, 64);
        assert_eq!(s.n_dofs(), 375 + 27);
        let dofs = s.element_dofs(0);
        assert_eq!(dofs.len(), 89);
        assert!(dofs[81..].iter().all(|&d| d >= 375));
    }

    #[test]
    fn node_coordinates_sit_on_the_tensor_grid() {
        let m = generate_box_mesh([1.0, 2.0, 4.0], [1, 1, 1]).unwrap();
        let s = TaylorHoodSpace::new(&m).unwrap();
        for a in 0..N_Q2 {
            let idx = q2_index(a);
            let x = s.node_coords[s.elem_nodes[0][a]];
            for d in 0..3 {
                assert!((x[d] - [1.0, 2.0, 4.0][d] * idx[d] as f64 / 2.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn volumes_and_face_areas() {
        let m = generate_box_mesh([1.0, 2.0, 3.0], [2, 3, 2]).unwrap();
        let s = TaylorHoodSpace::new(&m).unwrap();
        assert!((s.volume() - 6.0).abs() < 1e-12);
        let total: f64 = ["x0", "x1", "y0", "y1", "z0", "z1"]
            .iter()
            .map(|set| s.face_set_weights(&m, set).unwrap().iter().map(|(_, w)| w).sum::<f64>())
            .sum();
        assert!((total - 2.0 * (2.0 + 3.0 + 6.0)).abs() < 1e-12);
        assert!(matches!(s.face_set_weights(&m, "nope"), Err(Error::UnknownSet(_))));

        let d = LBlockDims::default();
        let l = generate_lblock_mesh(d, LBlockDivisions { width: 3, arm: 6, thickness: 1 }).unwrap();
        let sl = TaylorHoodSpace::new(&l).unwrap();
        let exact = d.t * (d.a * d.a + 2.0 * d.a * d.l);
        assert!((sl.volume() - exact).abs() < 1e-12 * exact);
        let h1: f64 = sl.face_set_weights(&l, "H1").unwrap().iter().map(|(_, w)| w).sum();
        assert!((h1 - d.a * d.t).abs() < 1e-12);
    }

    #[test]
    fn shared_nodes_are_conforming() {
        let m = generate_box_mesh([1.0; 3], [2, 1, 1]).unwrap();
        let s = TaylorHoodSpace::new(&m).unwrap();
        // the two cells share one face: 9 Q2 nodes and 4 pressure nodes
        assert_eq!(s.n_nodes(), 2 * 27 - 9);
        assert_eq!(s.n_pnodes(), 12);
        assert_eq!(s.face_set_nodes(&m, "x0").unwrap().len(), 9);
    }

    #[test]
    fn linear_fields_have_exact_gradients() {
        let m = generate_lblock_mesh(
            LBlockDims { a: 1.0, l: 1.5, t: 0.5 },
            LBlockDivisions { width: 1, arm: 2, thickness: 1 },
        )
        .unwrap();
        let s = TaylorHoodSpace::new(&m).unwrap();
        let a = [[0.1, -0.3, 0.2], [0.05, 0.4, -0.1], [0.0, 0.2, 0.3]];
        let u = s.interpolate_vector(|x| std::array::from_fn(|i| (0..3).map(|j| a[i][j] * x[j]).sum::<f64>() + 1.0));
        for e in 0..s.n_cells() {
            for g in s.element_qps(e) {
                let mut grad = [[0.0; 3]; 3];
                for (k, &node) in s.elem_nodes[e].iter().enumerate() {
                    for i in 0..3 {
                        for j in 0..3 {
                            grad[i][j] += u[3 * node + i] * g.grad[k][j];
                        }
                    }
                }
                for i in 0..3 {
                    for j in 0..3 {
                        assert!((grad[i][j] - a[i][j]).abs() < 1e-13);
                    }
                }
                let p = s.interpolate_scalar(&m, |_| 2.5);
                let ph: f64 = s.elem_pnodes[e].iter().zip(&g.m).map(|(&c, mc)| p[c] * mc).sum();
                assert!((ph - 2.5).abs() < 1e-14);
            }
        }
    }
}
