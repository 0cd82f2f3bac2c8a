//! Degree-`N` Lagrange element on the reference triangle `(0,0), (1,0), (0,1)`.
//!
//! The nodal basis is built from Warp & Blend points through the Vandermonde
//! matrix of an orthonormal modal basis. Local edge `i` runs from vertex `i`
//! to vertex `(i + 1) % 3`.

pub mod nodes;
pub mod poly;
pub mod quadrature;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::BasisError;
pub use nodes::{nodal_set, Node, MAX_DEGREE};
pub use poly::ModalBasis;
pub use quadrature::{LineRule, TriangleRule};

pub const REFERENCE_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Nodal basis functions (columns) tabulated at a set of points (rows).
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub values: DMatrix<f64>,
    pub d_xi: DMatrix<f64>,
    pub d_eta: DMatrix<f64>,
}

impl Default for Tabulation {
    fn default() -> Self {
        Self { values: DMatrix::zeros(0, 0), d_xi: DMatrix::zeros(0, 0), d_eta: DMatrix::zeros(0, 0) }
    }
}

#[derive(Debug)]
pub struct ReferenceElement {
    degree: usize,
    nodes: Vec<Node>,
    modal: ModalBasis,
    vinv: DMatrix<f64>,
    diff: [DMatrix<f64>; 2],
    vandermonde_cond: f64,
    quad: TriangleRule,
    quad_tab: Tabulation,
    /// Second reference derivatives `[xi xi, xi eta, eta eta]` at the
    /// quadrature points.
    quad_second: [DMatrix<f64>; 3],
    /// Reference stiffness pieces `[S_xx, S_xy + S_yx, S_yy]` and mass matrix.
    stiffness: [DMatrix<f64>; 3],
    mass: DMatrix<f64>,
    edge_rule: LineRule,
    edge_nodes: [Vec<usize>; 3],
    vertex_nodes: [usize; 3],
    interior_nodes: Vec<usize>,
    /// `edge_tab[e][reversed]` at the edge Gauss points, parameterised from
    /// vertex `e` to vertex `e + 1` (or backwards when `reversed`).
    edge_tab: [[Tabulation; 2]; 3],
}

impl ReferenceElement {
    pub fn new(degree: usize) -> Result<Self, BasisError> {
        let nodes = nodal_set(degree)?;
        let modal = ModalBasis::new(degree);
        let np = nodes.len();

        let mut v = DMatrix::zeros(np, np);
        let mut vx = DMatrix::zeros(np, np);
        let mut vy = DMatrix::zeros(np, np);
        for (i, node) in nodes.iter().enumerate() {
            let (m, dx, dy) = modal.eval(node.coords[0], node.coords[1]);
            for j in 0..np {
                v[(i, j)] = m[j];
                vx[(i, j)] = dx[j];
                vy[(i, j)] = dy[j];
            }
        }
        let sv = v.clone().singular_values();
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        if smin <= smax * 1e-13 {
            return Err(BasisError::SingularVandermonde);
        }
        let vinv = v.try_inverse().ok_or(BasisError::SingularVandermonde)?;
        let diff = [&vx * &vinv, &vy * &vinv];

        let mut edge_nodes: [Vec<(usize, usize)>; 3] = Default::default();
        let mut vertex_nodes = [0; 3];
        let mut interior_nodes = Vec::new();
        for (i, node) in nodes.iter().enumerate() {
            let [a, b, c] = node.lattice;
            if c == 0 {
                edge_nodes[0].push((b, i));
            }
            if a == 0 {
                edge_nodes[1].push((c, i));
            }
            if b == 0 {
                edge_nodes[2].push((a, i));
            }
            if a == degree {
                vertex_nodes[0] = i;
            } else if b == degree {
                vertex_nodes[1] = i;
            } else if c == degree {
                vertex_nodes[2] = i;
            }
            if a > 0 && b > 0 && c > 0 {
                interior_nodes.push(i);
            }
        }
        let edge_nodes = edge_nodes.map(|mut e| {
            e.sort();
            e.into_iter().map(|(_, i)| i).collect::<Vec<_>>()
        });

        let quad = TriangleRule::with_exactness(2 * degree + 2);
        let edge_rule = LineRule::with_exactness(2 * degree + 1);

        let mut elem = Self {
            degree,
            nodes,
            modal,
            vinv,
            diff,
            vandermonde_cond: smax / smin,
            quad_tab: Tabulation::default(),
            quad_second: [DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)],
            stiffness: [DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)],
            mass: DMatrix::zeros(0, 0),
            quad,
            edge_rule,
            edge_nodes,
            vertex_nodes,
            interior_nodes,
            edge_tab: Default::default(),
        };
        elem.quad_tab = elem.tabulate(&elem.quad.points);
        let [dx, dy] = &elem.diff;
        elem.quad_second = [
            &elem.quad_tab.values * dx * dx,
            &elem.quad_tab.values * dx * dy,
            &elem.quad_tab.values * dy * dy,
        ];
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&elem.quad.weights));
        let t = &elem.quad_tab;
        let sxy = t.d_xi.transpose() * &w * &t.d_eta;
        elem.stiffness = [
            t.d_xi.transpose() * &w * &t.d_xi,
            &sxy + sxy.transpose(),
            t.d_eta.transpose() * &w * &t.d_eta,
        ];
        elem.mass = t.values.transpose() * &w * &t.values;
        for e in 0..3 {
            for rev in 0..2 {
                let pts: Vec<[f64; 2]> = elem
                    .edge_rule
                    .points
                    .iter()
                    .map(|&t| elem.edge_point(e, if rev == 1 { 1.0 - t } else { t }))
                    .collect();
                elem.edge_tab[e][rev] = elem.tabulate(&pts);
            }
        }
        Ok(elem)
    }

    /// Shared instance per degree.
    pub fn cached(degree: usize) -> Result<Arc<Self>, BasisError> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ReferenceElement>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(e) = cache.lock().unwrap().get(&degree) {
            return Ok(e.clone());
        }
        let elem = Arc::new(Self::new(degree)?);
        cache.lock().unwrap().entry(degree).or_insert(elem.clone());
        Ok(elem)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_coords(&self) -> Vec<[f64; 2]> {
        self.nodes.iter().map(|n| n.coords).collect()
    }

    pub fn modal(&self) -> &ModalBasis {
        &self.modal
    }

    pub fn vandermonde_condition(&self) -> f64 {
        self.vandermonde_cond
    }

    /// Nodal differentiation matrices `[d/dxi, d/deta]`: map nodal values of a
    /// `P_N` function to nodal values of its derivative.
    pub fn diff(&self) -> &[DMatrix<f64>; 2] {
        &self.diff
    }

    pub fn quadrature(&self) -> &TriangleRule {
        &self.quad
    }

    pub fn quad_tab(&self) -> &Tabulation {
        &self.quad_tab
    }

    pub fn quad_second(&self) -> &[DMatrix<f64>; 3] {
        &self.quad_second
    }

    /// Reference stiffness pieces: the element matrix for `J^{-T} = G` is
    /// `|det J| (H00 S[0] + H01 S[1] + H11 S[2])` with `H = G^T G`.
    pub fn stiffness_parts(&self) -> &[DMatrix<f64>; 3] {
        &self.stiffness
    }

    /// Reference mass matrix (area 1/2 triangle).
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn edge_rule(&self) -> &LineRule {
        &self.edge_rule
    }

    pub fn edge_tab(&self, edge: usize, reversed: bool) -> &Tabulation {
        &self.edge_tab[edge][reversed as usize]
    }

    /// Node indices on local edge `e`, ordered from vertex `e` to vertex `e+1`.
    pub fn edge_nodes(&self, edge: usize) -> &[usize] {
        &self.edge_nodes[edge]
    }

    pub fn vertex_nodes(&self) -> [usize; 3] {
        self.vertex_nodes
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Point on local edge `e` at parameter `t` in `[0, 1]`.
    pub fn edge_point(&self, edge: usize, t: f64) -> [f64; 2] {
        let a = REFERENCE_VERTICES[edge];
        let b = REFERENCE_VERTICES[(edge + 1) % 3];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    pub fn tabulate(&self, points: &[[f64; 2]]) -> Tabulation {
        let np = self.num_nodes();
        let mut psi = DMatrix::zeros(points.len(), np);
        let mut dx = DMatrix::zeros(points.len(), np);
        let mut dy = DMatrix::zeros(points.len(), np);
        for (i, p) in points.iter().enumerate() {
            let (m, mx, my) = self.modal.eval(p[0], p[1]);
            for j in 0..np {
                psi[(i, j)] = m[j];
                dx[(i, j)] = mx[j];
                dy[(i, j)] = my[j];
            }
        }
        Tabulation {
            values: psi * &self.vinv,
            d_xi: dx * &self.vinv,
            d_eta: dy * &self.vinv,
        }
    }

    /// Basis values (rows: points, columns: nodes) and reference gradients.
    pub fn eval_basis(&self, points: &[[f64; 2]]) -> (DMatrix<f64>, [DMatrix<f64>; 2]) {
        let t = self.tabulate(points);
        (t.values, [t.d_xi, t.d_eta])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_is_cardinal_at_nodes() {
        for n in [1, 2, 4, 8, 12] {
            let e = ReferenceElement::new(n).unwrap();
            let (vals, _) = e.eval_basis(&e.node_coords());
            let id = DMatrix::<f64>::identity(e.num_nodes(), e.num_nodes());
            assert!((vals - id).amax() < 1e-11, "degree {n}");
        }
    }

    #[test]
    fn partition_of_unity_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = ReferenceElement::new(6).unwrap();
        let pts: Vec<[f64; 2]> = (0..50)
            .map(|_| {
                let (mut x, mut y): (f64, f64) = (rng.random(), rng.random());
                if x + y > 1.0 {
                    x = 1.0 - x;
                    y = 1.0 - y;
                }
                [x, y]
            })
            .collect();
        let (vals, [gx, gy]) = e.eval_basis(&pts);
        for i in 0..pts.len() {
            assert!((vals.row(i).sum() - 1.0).abs() < 1e-12);
            assert!(gx.row(i).sum().abs() < 1e-10);
            assert!(gy.row(i).sum().abs() < 1e-10);
        }
    }

    /// p(x, y) = x^2 + 3y interpolated at the nodes; gradient compared with the
    /// analytic (2x, 3).
    #[test]
    fn interpolated_gradient_matches_analytic() {
        for n in 2..=8 {
            let e = ReferenceElement::new(n).unwrap();
            let coeffs: Vec<f64> = e.node_coords().iter().map(|p| p[0] * p[0] + 3.0 * p[1]).collect();
            let pts = [[0.1, 0.2], [0.5, 0.25], [0.7, 0.05], [0.0, 1.0]];
            let (_, [gx, gy]) = e.eval_basis(&pts);
            for (i, p) in pts.iter().enumerate() {
                let dx: f64 = (0..e.num_nodes()).map(|j| gx[(i, j)] * coeffs[j]).sum();
                let dy: f64 = (0..e.num_nodes()).map(|j| gy[(i, j)] * coeffs[j]).sum();
                assert!((dx - 2.0 * p[0]).abs() < 1e-10);
                assert!((dy - 3.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn edge_maps_and_counts() {
        for n in 1..=MAX_DEGREE {
            let e = ReferenceElement::new(n).unwrap();
            assert_eq!(e.num_nodes(), (n + 1) * (n + 2) / 2);
            assert!(e.vandermonde_condition().is_finite());
            for edge in 0..3 {
                let nodes = e.edge_nodes(edge);
                assert_eq!(nodes.len(), n + 1);
                assert_eq!(nodes[0], e.vertex_nodes()[edge]);
                assert_eq!(nodes[n], e.vertex_nodes()[(edge + 1) % 3]);
            }
            assert_eq!(e.interior_nodes().len(), (n.saturating_sub(1)) * n.saturating_sub(2) / 2);
        }
    }

    #[test]
    fn interpolation_exact_for_pn_at_quadrature_points() {
        let e = ReferenceElement::new(5).unwrap();
        let poly = |x: f64, y: f64| x.powi(5) - 2.0 * x * x * y.powi(3) + y - 0.5;
        let coeffs: Vec<f64> = e.node_coords().iter().map(|p| poly(p[0], p[1])).collect();
        let tab = e.quad_tab();
        for (q, p) in e.quadrature().points.iter().enumerate() {
            let v: f64 = (0..e.num_nodes()).map(|j| tab.values[(q, j)] * coeffs[j]).sum();
            assert!((v - poly(p[0], p[1])).abs() < 1e-10);
        }
    }

    #[test]
    fn second_derivatives_at_quadrature_points() {
        let e = ReferenceElement::new(4).unwrap();
        let c: Vec<f64> = e.node_coords().iter().map(|p| p[0].powi(3) * p[1] + p[1].powi(4)).collect();
        let c = nalgebra::DVector::from_vec(c);
        let [xx, xy, yy] = e.quad_second();
        let (a, b, d) = (xx * &c, xy * &c, yy * &c);
        for (q, p) in e.quadrature().points.iter().enumerate() {
            assert!((a[q] - 6.0 * p[0] * p[1]).abs() < 1e-9);
            assert!((b[q] - 3.0 * p[0] * p[0]).abs() < 1e-9);
            assert!((d[q] - 12.0 * p[1] * p[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn differentiation_matrix_is_exact() {
        let e = ReferenceElement::new(4).unwrap();
        let c: Vec<f64> = e.node_coords().iter().map(|p| p[0].powi(3) * p[1]).collect();
        let c = nalgebra::DVector::from_vec(c);
        let dx = &e.diff()[0] * &c;
        for (i, p) in e.node_coords().iter().enumerate() {
            assert!((dx[i] - 3.0 * p[0] * p[0] * p[1]).abs() < 1e-10);
        }
    }
}
