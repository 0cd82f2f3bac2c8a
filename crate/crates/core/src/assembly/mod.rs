//! Galerkin system, energy norms, strong residuals and the residual split.

pub mod dofs;
pub mod problem;
pub mod sparse;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::AssemblyError;
use crate::exec::Execution;
use crate::fe_basis::{ReferenceElement, Tabulation, TriangleRule};
use crate::mesh::{BoundaryTag, Mesh};
pub use dofs::DofMap;
pub use problem::{ExactSolution, ProblemSpec};
pub use sparse::CsrMatrix;

/// Largest number of global nodes accepted by [`FemProblem::new`].
pub const MAX_NODES: usize = 5_000_000;

/// Affine map `x = origin + J r` of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub origin: [f64; 2],
    pub jac: [[f64; 2]; 2],
    /// `J^{-T}`: maps reference gradients to physical gradients.
    pub g: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementGeometry {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let g = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Self { origin: p[0], jac, g, det }
    }

    pub fn map(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn grad(&self, d_xi: f64, d_eta: f64) -> [f64; 2] {
        [self.g[0][0] * d_xi + self.g[0][1] * d_eta, self.g[1][0] * d_xi + self.g[1][1] * d_eta]
    }

    /// Entries `(H00, H01, H11)` of `H = G^T G`, so that
    /// `laplacian = H00 d_xixi + 2 H01 d_xieta + H11 d_etaeta`.
    pub fn metric(&self) -> [f64; 3] {
        let g = &self.g;
        [
            g[0][0] * g[0][0] + g[1][0] * g[1][0],
            g[0][0] * g[0][1] + g[1][0] * g[1][1],
            g[0][1] * g[0][1] + g[1][1] * g[1][1],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Neumann,
    Dirichlet,
}

/// Mesh, reference element, node numbering and element coefficients.
#[derive(Clone, Debug)]
pub struct Discretization {
    mesh: Mesh,
    elem: Arc<ReferenceElement>,
    dofs: DofMap,
    geom: Vec<ElementGeometry>,
    kappa: Vec<f64>,
    edge_kind: Vec<EdgeKind>,
    error_rule: TriangleRule,
    error_tab: Tabulation,
    exec: Execution,
}

impl Discretization {
    pub fn new(mesh: Mesh, degree: usize, spec: &ProblemSpec) -> Result<Self, AssemblyError> {
        let elem = ReferenceElement::cached(degree)?;
        let kappa = spec.element_kappa(&mesh)?;
        let dofs = DofMap::new(&mesh, &elem);
        if dofs.num_nodes() > MAX_NODES {
            return Err(AssemblyError::TooLarge(dofs.num_nodes(), MAX_NODES));
        }
        let geom = (0..mesh.num_triangles()).map(|t| ElementGeometry::new(mesh.coords(t))).collect();
        let edge_kind = mesh
            .edges()
            .iter()
            .map(|e| match e.boundary {
                None => EdgeKind::Interior,
                Some(BoundaryTag::Neumann) => EdgeKind::Neumann,
                Some(BoundaryTag::Dirichlet) => EdgeKind::Dirichlet,
            })
            .collect();
        let error_rule = TriangleRule::with_exactness(2 * degree + 10);
        let error_tab = elem.tabulate(&error_rule.points);
        Ok(Self { mesh, elem, dofs, geom, kappa, edge_kind, error_rule, error_tab, exec: Execution::default() })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.elem
    }

    pub fn degree(&self) -> usize {
        self.elem.degree()
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn geometry(&self, t: usize) -> &ElementGeometry {
        &self.geom[t]
    }

    pub fn kappa(&self, t: usize) -> f64 {
        self.kappa[t]
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappa
    }

    pub fn edge_kind(&self, e: usize) -> EdgeKind {
        self.edge_kind[e]
    }

    /// Interior and Neumann edges carry jump residuals; Dirichlet edges do not.
    pub fn edge_active(&self, e: usize) -> bool {
        self.edge_kind[e] != EdgeKind::Dirichlet
    }

    /// Largest coefficient of the triangles sharing edge `e`.
    pub fn edge_kappa(&self, e: usize) -> f64 {
        self.mesh.edge(e).tris.iter().map(|&(t, _)| self.kappa[t]).fold(0.0, f64::max)
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn set_execution(&mut self, exec: Execution) {
        self.exec = exec;
    }

    pub fn num_triangles(&self) -> usize {
        self.mesh.num_triangles()
    }

    /// Coefficients of element `t` gathered from a global nodal vector.
    pub fn local(&self, global: &[f64], t: usize) -> DVector<f64> {
        DVector::from_iterator(self.dofs.nodes_per_element(), self.dofs.element(t).iter().map(|&n| global[n]))
    }

    /// Physical points of edge `e` at the edge rule, in the global edge
    /// direction `v[0] -> v[1]`.
    pub fn edge_points(&self, e: usize) -> Vec<[f64; 2]> {
        let [a, b] = self.mesh.edge(e).v;
        let (p, q) = (self.mesh.vertices()[a], self.mesh.vertices()[b]);
        self.elem
            .edge_rule()
            .points
            .iter()
            .map(|&s| [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])])
            .collect()
    }

    /// Basis tabulation of side `(t, i)` at the edge points of its global edge.
    pub fn side_tab(&self, t: usize, i: usize) -> &Tabulation {
        self.elem.edge_tab(i, self.mesh.edge_reversed(t, i))
    }

    /// Outward normal flux `kappa grad u_h . n` of element `t` through its local
    /// edge `i`, at the edge points in global edge order.
    pub fn side_flux(&self, u_local: &DVector<f64>, t: usize, i: usize) -> Vec<f64> {
        let tab = self.side_tab(t, i);
        let gx = &tab.d_xi * u_local;
        let gy = &tab.d_eta * u_local;
        let n = self.mesh.outward_normal(t, i);
        let g = &self.geom[t];
        (0..gx.len())
            .map(|q| {
                let grad = g.grad(gx[q], gy[q]);
                self.kappa[t] * (grad[0] * n[0] + grad[1] * n[1])
            })
            .collect()
    }

    /// Nodal interpolant of `f` (global nodal vector).
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.dofs.coords().iter().map(|&p| f(p)).collect()
    }
}

/// Assembled linear system over the free dofs.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    /// Global nodal vector carrying the Dirichlet data (zero on free nodes).
    pub lift: Vec<f64>,
    /// Constant subtracted from the source of a pure Neumann problem so that
    /// the data are compatible.
    pub shift: f64,
}

impl SparseSystem {
    pub fn num_free(&self) -> usize {
        self.b.len()
    }
}

/// Strong element and jump residuals of a discrete function, sampled at the
/// element quadrature points and at the edge points (global edge order).
#[derive(Clone, Debug)]
pub struct StrongResiduals {
    pub element: Vec<f64>,
    pub edge: Vec<f64>,
    nq: usize,
    nqe: usize,
}

impl StrongResiduals {
    pub fn element_values(&self, t: usize) -> &[f64] {
        &self.element[t * self.nq..(t + 1) * self.nq]
    }

    pub fn edge_values(&self, e: usize) -> &[f64] {
        &self.edge[e * self.nqe..(e + 1) * self.nqe]
    }
}

/// `r = b - A x` together with its volume part `R` and edge part `F = r - R`.
#[derive(Clone, Debug)]
pub struct ResidualSplit {
    pub residual: Vec<f64>,
    pub volume: Vec<f64>,
    pub edge: Vec<f64>,
}

/// A discretized boundary value problem ready to be solved.
#[derive(Clone, Debug)]
pub struct FemProblem {
    disc: Discretization,
    spec: ProblemSpec,
    system: SparseSystem,
    /// `f - shift` at the element quadrature points.
    source_q: Vec<f64>,
    /// `g` at the points of Neumann edges, zero elsewhere.
    neumann_q: Vec<f64>,
}

impl FemProblem {
    pub fn new(mesh: Mesh, degree: usize, spec: ProblemSpec) -> Result<Self, AssemblyError> {
        Self::with_execution(mesh, degree, spec, Execution::default())
    }

    pub fn with_execution(mesh: Mesh, degree: usize, spec: ProblemSpec, exec: Execution) -> Result<Self, AssemblyError> {
        let mut disc = Discretization::new(mesh, degree, &spec)?;
        disc.set_execution(exec);
        let (system, source_q, neumann_q) = assemble(&disc, &spec)?;
        Ok(Self { disc, spec, system, source_q, neumann_q })
    }

    /// Same discretization with a different source term (e.g. a warm-up
    /// right-hand side).
    pub fn with_source(&self, f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Result<Self, AssemblyError> {
        let spec = self.spec.clone().with_source(f);
        let (system, source_q, neumann_q) = assemble(&self.disc, &spec)?;
        Ok(Self { disc: self.disc.clone(), spec, system, source_q, neumann_q })
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn system(&self) -> &SparseSystem {
        &self.system
    }

    pub fn num_free(&self) -> usize {
        self.system.num_free()
    }

    pub fn set_execution(&mut self, exec: Execution) {
        self.disc.set_execution(exec);
    }

    /// Global nodal vector of the discrete function with free values `x`.
    pub fn global(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.system.lift.clone();
        for (k, &n) in self.disc.dofs.free_nodes().iter().enumerate() {
            u[n] = x[k];
        }
        u
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.system.a.matvec(x);
        self.system.b.iter().zip(&ax).map(|(b, a)| b - a).collect()
    }

    /// `sqrt(x^T A x)`.
    pub fn energy_norm(&self, x: &[f64]) -> f64 {
        sparse::dot(x, &self.system.a.matvec(x)).max(0.0).sqrt()
    }

    /// `sqrt(sum_K kappa_K |grad v|^2)` of a global nodal vector, by quadrature.
    pub fn energy_norm_global(&self, v: &[f64]) -> f64 {
        self.energy_integral(v, None).sqrt()
    }

    /// `||u - u_h||_E` for the analytic solution, `None` if the problem has none.
    pub fn energy_error(&self, x: &[f64]) -> Option<f64> {
        let exact = self.spec.exact.as_ref()?;
        Some(self.energy_integral(&self.global(x), Some(exact)).sqrt())
    }

    /// `||u||_E` of the analytic solution.
    pub fn exact_energy_norm(&self) -> Option<f64> {
        let exact = self.spec.exact.as_ref()?;
        Some(self.energy_integral(&vec![0.0; self.disc.dofs.num_nodes()], Some(exact)).sqrt())
    }

    fn energy_integral(&self, v: &[f64], exact: Option<&ExactSolution>) -> f64 {
        let d = &self.disc;
        let tab = &d.error_tab;
        let parts = d.exec.map(d.num_triangles(), |t| {
            let g = &d.geom[t];
            let ul = d.local(v, t);
            let gx = &tab.d_xi * &ul;
            let gy = &tab.d_eta * &ul;
            let mut s = 0.0;
            for (q, (p, w)) in d.error_rule.points.iter().zip(&d.error_rule.weights).enumerate() {
                let mut grad = g.grad(gx[q], gy[q]);
                if let Some(ex) = exact {
                    let gu = (ex.grad)(g.map(*p));
                    grad = [gu[0] - grad[0], gu[1] - grad[1]];
                }
                s += w * (grad[0] * grad[0] + grad[1] * grad[1]);
            }
            d.kappa[t] * g.det * s
        });
        parts.iter().sum()
    }

    /// `a(u - u_h, phi_n)` for every free dof `n`, with `u` the analytic
    /// solution; vanishes for the Galerkin solution up to quadrature error.
    pub fn galerkin_defect(&self, x: &[f64]) -> Option<Vec<f64>> {
        let exact = self.spec.exact.as_ref()?;
        let d = &self.disc;
        let u = self.global(x);
        let tab = &d.error_tab;
        let locals = d.exec.map(d.num_triangles(), |t| {
            let g = &d.geom[t];
            let ul = d.local(&u, t);
            let gx = &tab.d_xi * &ul;
            let gy = &tab.d_eta * &ul;
            let nq = gx.len();
            let (mut cx, mut cy) = (DVector::zeros(nq), DVector::zeros(nq));
            for (q, (p, w)) in d.error_rule.points.iter().zip(&d.error_rule.weights).enumerate() {
                let gh = g.grad(gx[q], gy[q]);
                let gu = (exact.grad)(g.map(*p));
                let e = [gu[0] - gh[0], gu[1] - gh[1]];
                let s = w * g.det * d.kappa[t];
                // e . (G grad_ref phi) = (G^T e) . grad_ref phi
                cx[q] = s * (g.g[0][0] * e[0] + g.g[1][0] * e[1]);
                cy[q] = s * (g.g[0][1] * e[0] + g.g[1][1] * e[1]);
            }
            tab.d_xi.tr_mul(&cx) + tab.d_eta.tr_mul(&cy)
        });
        Some(self.gather_free(&locals))
    }

    fn gather_free(&self, locals: &[DVector<f64>]) -> Vec<f64> {
        let dofs = &self.disc.dofs;
        let mut out = vec![0.0; dofs.num_free()];
        for (t, l) in locals.iter().enumerate() {
            for (k, &n) in dofs.element(t).iter().enumerate() {
                if let Some(i) = dofs.free_index(n) {
                    out[i] += l[k];
                }
            }
        }
        out
    }

    pub fn strong_residuals(&self, x: &[f64]) -> StrongResiduals {
        let u = self.global(x);
        self.strong_residuals_global(&u)
    }

    /// Strong residuals of the discrete function with global nodal values `u`.
    pub fn strong_residuals_global(&self, u: &[f64]) -> StrongResiduals {
        let d = &self.disc;
        let elem = &d.elem;
        let nq = elem.quadrature().len();
        let nqe = elem.edge_rule().len();
        let [qxx, qxy, qyy] = elem.quad_second();
        let element_parts = d.exec.map(d.num_triangles(), |t| {
            let ul = d.local(u, t);
            let (a, b, c) = (qxx * &ul, qxy * &ul, qyy * &ul);
            let [h00, h01, h11] = d.geom[t].metric();
            let k = d.kappa[t];
            (0..nq)
                .map(|q| self.source_q[t * nq + q] + k * (h00 * a[q] + 2.0 * h01 * b[q] + h11 * c[q]))
                .collect::<Vec<f64>>()
        });
        let mesh = d.mesh();
        let edge_parts = d.exec.map(mesh.num_edges(), |e| {
            let edge = mesh.edge(e);
            match d.edge_kind[e] {
                EdgeKind::Dirichlet => vec![0.0; nqe],
                EdgeKind::Neumann => {
                    let (t, i) = edge.tris[0];
                    let flux = d.side_flux(&d.local(u, t), t, i);
                    (0..nqe).map(|q| self.neumann_q[e * nqe + q] - flux[q]).collect()
                }
                EdgeKind::Interior => {
                    let (t0, i0) = edge.tris[0];
                    let (t1, i1) = edge.tris[1];
                    let f0 = d.side_flux(&d.local(u, t0), t0, i0);
                    let f1 = d.side_flux(&d.local(u, t1), t1, i1);
                    (0..nqe).map(|q| -(f0[q] + f1[q])).collect()
                }
            }
        });
        StrongResiduals { element: element_parts.concat(), edge: edge_parts.concat(), nq, nqe }
    }

    /// `R_n = sum_K (r_E, phi_n)_K` over the free dofs.
    pub fn volume_part(&self, res: &StrongResiduals) -> Vec<f64> {
        let d = &self.disc;
        let elem = &d.elem;
        let w = &elem.quadrature().weights;
        let locals = d.exec.map(d.num_triangles(), |t| {
            let det = d.geom[t].det;
            let r = res.element_values(t);
            let c = DVector::from_iterator(w.len(), (0..w.len()).map(|q| w[q] * det * r[q]));
            elem.quad_tab().values.tr_mul(&c)
        });
        self.gather_free(&locals)
    }

    /// `F_n = sum_l (r_J, phi_n)_l` assembled edge by edge. Integration by parts
    /// gives `r = R + F`, so this must agree with `r - R`.
    pub fn edge_part_direct(&self, res: &StrongResiduals) -> Vec<f64> {
        let d = &self.disc;
        let mesh = d.mesh();
        let w = &d.elem.edge_rule().weights;
        let np = d.dofs.nodes_per_element();
        let locals = d.exec.map(mesh.num_edges(), |e| {
            if !d.edge_active(e) {
                return None;
            }
            let (t, i) = mesh.edge(e).tris[0];
            let len = mesh.edge_length(e);
            let r = res.edge_values(e);
            let c = DVector::from_iterator(w.len(), (0..w.len()).map(|q| w[q] * len * r[q]));
            let v = d.side_tab(t, i).values.tr_mul(&c);
            debug_assert_eq!(v.len(), np);
            Some((t, v))
        });
        let dofs = &d.dofs;
        let mut out = vec![0.0; dofs.num_free()];
        for (t, l) in locals.into_iter().flatten() {
            for (k, &n) in dofs.element(t).iter().enumerate() {
                if let Some(i) = dofs.free_index(n) {
                    out[i] += l[k];
                }
            }
        }
        out
    }

    /// `r = R + F` with `F = r - R`.
    pub fn split_residual(&self, x: &[f64]) -> ResidualSplit {
        let res = self.strong_residuals(x);
        self.split_from(x, &res)
    }

    pub fn split_from(&self, x: &[f64], res: &StrongResiduals) -> ResidualSplit {
        let residual = self.residual(x);
        self.split_with_residual(residual, res)
    }

    pub fn split_with_residual(&self, residual: Vec<f64>, res: &StrongResiduals) -> ResidualSplit {
        let volume = self.volume_part(res);
        let edge = residual.iter().zip(&volume).map(|(r, v)| r - v).collect();
        ResidualSplit { residual, volume, edge }
    }

    /// `w_n = min over the support of phi_n of 1 / kappa`, on the free dofs.
    pub fn weight_vector(&self) -> Vec<f64> {
        let d = &self.disc;
        let mut w = vec![f64::INFINITY; d.dofs.num_nodes()];
        for t in 0..d.num_triangles() {
            let inv = 1.0 / d.kappa[t];
            for &n in d.dofs.element(t) {
                w[n] = w[n].min(inv);
            }
        }
        d.dofs.restrict(&w)
    }
}

/// Subtracts the arithmetic mean, i.e. projects onto the complement of the constants.
pub fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

type Assembled = (SparseSystem, Vec<f64>, Vec<f64>);

/// Assembles `A` and `b` on the free dofs; Dirichlet nodes are eliminated
/// symmetrically. A pure Neumann system stays singular with the constants as
/// kernel; the source is shifted so that the data are compatible and `b` is
/// then exactly orthogonal to the constants.
pub fn assemble(disc: &Discretization, spec: &ProblemSpec) -> Result<Assembled, AssemblyError> {
    let mesh = disc.mesh();
    let elem = &disc.elem;
    let dofs = &disc.dofs;
    let nq = elem.quadrature().len();
    let nqe = elem.edge_rule().len();
    let exec = disc.exec;
    let has_dirichlet = disc.edge_kind.contains(&EdgeKind::Dirichlet);

    let source_raw: Vec<f64> = exec
        .map(disc.num_triangles(), |t| {
            let g = &disc.geom[t];
            elem.quadrature().points.iter().map(|&p| (spec.source)(g.map(p))).collect::<Vec<_>>()
        })
        .concat();
    let neumann_q: Vec<f64> = exec
        .map(mesh.num_edges(), |e| {
            if disc.edge_kind[e] != EdgeKind::Neumann {
                return vec![0.0; nqe];
            }
            let (t, i) = mesh.edge(e).tris[0];
            let n = mesh.outward_normal(t, i);
            disc.edge_points(e).into_iter().map(|p| (spec.neumann)(p, n)).collect()
        })
        .concat();

    let shift = if has_dirichlet {
        0.0
    } else {
        let w = &elem.quadrature().weights;
        let mut total = 0.0;
        for t in 0..disc.num_triangles() {
            let det = disc.geom[t].det;
            total += (0..nq).map(|q| w[q] * det * source_raw[t * nq + q]).sum::<f64>();
        }
        let we = &elem.edge_rule().weights;
        for e in 0..mesh.num_edges() {
            let len = mesh.edge_length(e);
            total += (0..nqe).map(|q| we[q] * len * neumann_q[e * nqe + q]).sum::<f64>();
        }
        total / mesh.total_area()
    };
    let source_q: Vec<f64> = source_raw.iter().map(|f| f - shift).collect();

    let [s0, s1, s2] = elem.stiffness_parts();
    let w = &elem.quadrature().weights;
    let locals = exec.map(disc.num_triangles(), |t| {
        let g = &disc.geom[t];
        let [h00, h01, h11] = g.metric();
        let k = (s0 * h00 + s1 * h01 + s2 * h11) * (disc.kappa[t] * g.det);
        let c = DVector::from_iterator(nq, (0..nq).map(|q| w[q] * g.det * source_q[t * nq + q]));
        let load = elem.quad_tab().values.tr_mul(&c);
        (k, load)
    });

    let n = dofs.num_nodes();
    let np = dofs.nodes_per_element();
    let mut trip = Vec::with_capacity(disc.num_triangles() * np * np);
    let mut load = vec![0.0; n];
    for (t, (k, l)) in locals.iter().enumerate() {
        let nodes = dofs.element(t);
        for i in 0..np {
            load[nodes[i]] += l[i];
            for j in 0..np {
                trip.push((nodes[i], nodes[j], k[(i, j)]));
            }
        }
    }
    let we = &elem.edge_rule().weights;
    for e in 0..mesh.num_edges() {
        if disc.edge_kind[e] != EdgeKind::Neumann {
            continue;
        }
        let (t, i) = mesh.edge(e).tris[0];
        let len = mesh.edge_length(e);
        let c = DVector::from_iterator(nqe, (0..nqe).map(|q| we[q] * len * neumann_q[e * nqe + q]));
        let l = disc.side_tab(t, i).values.tr_mul(&c);
        for (k, &node) in dofs.element(t).iter().enumerate() {
            load[node] += l[k];
        }
    }
    let full = CsrMatrix::from_triplets(n, n, &trip);

    let mut lift = vec![0.0; n];
    for &node in dofs.dirichlet_nodes() {
        lift[node] = (spec.dirichlet)(dofs.coords()[node]);
    }
    let a_lift = full.matvec(&lift);
    let mut b: Vec<f64> = dofs.free_nodes().iter().map(|&i| load[i] - a_lift[i]).collect();
    if dofs.has_constant_kernel() {
        remove_mean(&mut b);
    }
    let a = full.submatrix(dofs.free_map(), dofs.num_free());
    Ok((SparseSystem { a, b, lift, shift }, source_q, neumann_q))
}

/// Dense local matrices are handy in tests and estimators.
pub fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    #[test]
    fn p1_five_point_stencil() {
        let mesh = unit_square_mesh(2).unwrap();
        let p = FemProblem::new(mesh, 1, ProblemSpec::new(|_| 0.0)).unwrap();
        assert_eq!(p.num_free(), 1);
        assert!((p.system().a.get(0, 0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn geometry_round_trip() {
        let g = ElementGeometry::new([[0.1, 0.2], [1.0, 0.4], [0.3, 1.5]]);
        let p = g.map([0.25, 0.5]);
        let jt = [[g.jac[0][0], g.jac[1][0]], [g.jac[0][1], g.jac[1][1]]];
        // G J^T = I
        for i in 0..2 {
            for j in 0..2 {
                let v = g.g[i][0] * jt[0][j] + g.g[i][1] * jt[1][j];
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!((p[0] - (0.1 + 0.25 * 0.9 + 0.5 * 0.2)).abs() < 1e-15);
    }
}
