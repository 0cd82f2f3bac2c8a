//! Elementwise BDM flux recovery.
//!
//! For each element the deviation `rho = sigma - kappa grad u_h` lives in
//! `(P_N)^2` and is fixed by three families of moment conditions: zero against
//! gradients of non-constant `P_{N-1}` functions, zero against curls of the
//! `P_{N+1}` bubbles, and prescribed normal moments on each edge. Together they
//! form a square system of size `(N+1)(N+2)`, so the map from edge data to
//! `rho` is a fixed matrix `L_K` per element.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::assembly::{EdgeKind, FemProblem, StrongResiduals};
use crate::error::EstimatorError;
use crate::fe_basis::poly::{dim_p, shifted_legendre_orthonormal, ModalBasis};
use crate::fe_basis::ReferenceElement;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BdmMode {
    /// Keep only `mu_K^2`.
    LowerBoundOnly,
    /// Keep `L_K` for the full estimator.
    #[default]
    Lifting,
    /// Keep `L_K` and the raw local system (dual-route checks).
    Verify,
}

/// Reference tabulations shared by all elements of one degree.
#[derive(Clone, Debug)]
struct BdmReference {
    degree: usize,
    nb: usize,
    /// Modal values at the volume quadrature points (points x modes).
    phi: DMatrix<f64>,
    /// Reference gradients of the `P_{N-1}` modes except the constant.
    grad_w: [DMatrix<f64>; 2],
    /// Reference gradients of the bubbles `l0 l1 l2 p`, `p` in `P_{N-2}`.
    grad_bubble: [DMatrix<f64>; 2],
    /// Modal values at the edge points of local edge `i`, local orientation.
    phi_edge: [DMatrix<f64>; 3],
    /// Orthonormal Legendre on `[0, 1]` at the edge points (points x N+1).
    legendre: DMatrix<f64>,
    /// Modal mass matrix on the reference triangle.
    mass: DMatrix<f64>,
}

impl BdmReference {
    fn new(elem: &ReferenceElement) -> Self {
        let n = elem.degree();
        let modal = ModalBasis::new(n);
        let nb = modal.len();
        let quad = elem.quadrature();
        let nq = quad.len();
        let nw = dim_p(n - 1) - 1;
        let nbub = if n >= 2 { dim_p(n - 2) } else { 0 };
        let mut phi = DMatrix::zeros(nq, nb);
        let mut grad_w = [DMatrix::zeros(nq, nw), DMatrix::zeros(nq, nw)];
        let mut grad_bubble = [DMatrix::zeros(nq, nbub), DMatrix::zeros(nq, nbub)];
        for (q, p) in quad.points.iter().enumerate() {
            let (v, dx, dy) = modal.eval(p[0], p[1]);
            for m in 0..nb {
                phi[(q, m)] = v[m];
            }
            for m in 0..nw {
                grad_w[0][(q, m)] = dx[m + 1];
                grad_w[1][(q, m)] = dy[m + 1];
            }
            let (xi, eta) = (p[0], p[1]);
            let l0 = 1.0 - xi - eta;
            let b = l0 * xi * eta;
            let bx = eta * (l0 - xi);
            let by = xi * (l0 - eta);
            for m in 0..nbub {
                grad_bubble[0][(q, m)] = bx * v[m] + b * dx[m];
                grad_bubble[1][(q, m)] = by * v[m] + b * dy[m];
            }
        }
        let rule = elem.edge_rule();
        let ne = rule.len();
        let phi_edge = std::array::from_fn(|i| {
            let mut t = DMatrix::zeros(ne, nb);
            for (q, &s) in rule.points.iter().enumerate() {
                let r = elem.edge_point(i, s);
                let (v, _, _) = modal.eval(r[0], r[1]);
                for m in 0..nb {
                    t[(q, m)] = v[m];
                }
            }
            t
        });
        let legendre = DMatrix::from_fn(ne, n + 1, |q, j| shifted_legendre_orthonormal(rule.points[q], j));
        let mut mass = DMatrix::zeros(nb, nb);
        for q in 0..nq {
            let w = quad.weights[q];
            for a in 0..nb {
                for b in 0..nb {
                    mass[(a, b)] += w * phi[(q, a)] * phi[(q, b)];
                }
            }
        }
        Self { degree: n, nb, phi, grad_w, grad_bubble, phi_edge, legendre, mass }
    }
}

/// Per-element data of the recovery.
#[derive(Clone, Debug)]
pub struct BdmLocal {
    /// `mu_K^2`: smallest eigenvalue of `L_K^T M_K L_K` on the active edge columns.
    pub mu2: f64,
    /// `(N+1)(N+2) x 3(N+1)` lifting matrix, columns ordered edge by edge.
    pub lifting: Option<DMatrix<f64>>,
    /// The square moment system (rows: gradient tests, curl tests, edge moments).
    pub system: Option<DMatrix<f64>>,
    /// Which local edges carry data (Dirichlet edges carry none).
    pub active: [bool; 3],
    /// `det J / kappa_K`; `M_K` is this times the block-diagonal reference mass.
    pub mass_scale: f64,
}

impl BdmLocal {
    pub fn size(&self) -> Option<usize> {
        self.system.as_ref().map(|s| s.nrows())
    }

    /// `rho_K` coefficients by an LU solve of the local system.
    pub fn rho_by_solve(&self, d: &[f64]) -> Result<DVector<f64>, EstimatorError> {
        let sys = self.system.as_ref().ok_or(EstimatorError::MatricesDiscarded)?;
        let n = sys.nrows();
        let mut rhs = DVector::zeros(n);
        let off = n - d.len();
        rhs.rows_mut(off, d.len()).copy_from_slice(d);
        sys.clone().lu().solve(&rhs).ok_or(EstimatorError::SingularLocalSystem(usize::MAX))
    }

    /// `rho_K = L_K d_K`.
    pub fn rho_by_lifting(&self, d: &[f64]) -> Result<DVector<f64>, EstimatorError> {
        let l = self.lifting.as_ref().ok_or(EstimatorError::MatricesDiscarded)?;
        Ok(l * DVector::from_column_slice(d))
    }
}

/// Precomputed recovery data for a whole discretization.
#[derive(Clone, Debug)]
pub struct Bdm {
    reference: BdmReference,
    pub locals: Vec<BdmLocal>,
    pub mode: BdmMode,
}

impl Bdm {
    pub fn precompute(problem: &FemProblem, mode: BdmMode) -> Result<Self, EstimatorError> {
        let d = problem.disc();
        let reference = BdmReference::new(d.element());
        let r = &reference;
        let locals = d.execution().map(d.num_triangles(), |t| local_system(problem, r, t, mode));
        let locals = locals.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(Self { reference, locals, mode })
    }

    pub fn degree(&self) -> usize {
        self.reference.degree
    }

    /// Number of `rho` coefficients per element, `(N+1)(N+2)`.
    pub fn local_size(&self) -> usize {
        2 * self.reference.nb
    }

    pub fn data_len(&self) -> usize {
        3 * (self.reference.degree + 1)
    }

    /// Weighted edge-jump moments `d_K` of every element, from strong residuals.
    /// On an interior edge element `K` takes the share
    /// `kappa_K / (kappa_K + kappa_K')` of the jump residual; on a Neumann edge
    /// it takes all of it.
    pub fn jump_data(&self, problem: &FemProblem, res: &StrongResiduals) -> Vec<Vec<f64>> {
        let d = problem.disc();
        let mesh = d.mesh();
        let rule = d.element().edge_rule();
        let ne = rule.len();
        let np = self.reference.degree + 1;
        let leg = &self.reference.legendre;
        d.execution().map(d.num_triangles(), |t| {
            let mut out = vec![0.0; 3 * np];
            for i in 0..3 {
                let e = mesh.tri_edges(t)[i];
                let weight = match d.edge_kind(e) {
                    EdgeKind::Dirichlet => continue,
                    EdgeKind::Neumann => 1.0,
                    EdgeKind::Interior => {
                        let other = mesh.edge(e).tris.iter().find(|&&(s, _)| s != t).unwrap().0;
                        d.kappa(t) / (d.kappa(t) + d.kappa(other))
                    }
                };
                let rev = mesh.edge_reversed(t, i);
                let scale = weight * mesh.edge_length(e).sqrt();
                let rj = res.edge_values(e);
                for j in 0..np {
                    let mut s = 0.0;
                    for q in 0..ne {
                        let g = if rev { ne - 1 - q } else { q };
                        s += rule.weights[q] * rj[g] * leg[(q, j)];
                    }
                    out[i * np + j] = scale * s;
                }
            }
            out
        })
    }

    /// `||kappa^{-1/2} rho||_K^2` for coefficient vector `y`.
    pub fn energy(&self, t: usize, y: &DVector<f64>) -> f64 {
        let nb = self.reference.nb;
        let m = &self.reference.mass;
        let a = y.rows(0, nb);
        let b = y.rows(nb, nb);
        self.locals[t].mass_scale * ((m * a).dot(&a) + (m * b).dot(&b))
    }

    /// Per-element `||kappa^{-1/2} rho_K||^2` through the lifting matrices.
    pub fn element_energies(&self, data: &[Vec<f64>]) -> Result<Vec<f64>, EstimatorError> {
        data.iter()
            .enumerate()
            .map(|(t, d)| Ok(self.energy(t, &self.locals[t].rho_by_lifting(d)?)))
            .collect()
    }

    pub fn eta(&self, data: &[Vec<f64>]) -> Result<f64, EstimatorError> {
        Ok(self.element_energies(data)?.iter().sum::<f64>().sqrt())
    }

    pub fn eta_lower(&self, data: &[Vec<f64>]) -> f64 {
        data.iter()
            .zip(&self.locals)
            .map(|(d, l)| l.mu2 * d.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Values of `rho_K` at the volume quadrature points, as `(x, y)` components.
    pub fn rho_at_quadrature(&self, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let nb = self.reference.nb;
        (&self.reference.phi * y.rows(0, nb), &self.reference.phi * y.rows(nb, nb))
    }
}

fn local_system(problem: &FemProblem, r: &BdmReference, t: usize, mode: BdmMode) -> Result<BdmLocal, EstimatorError> {
    let d = problem.disc();
    let mesh = d.mesh();
    let elem = d.element();
    let geo = d.geometry(t);
    let det = geo.det;
    let n = r.degree;
    let nb = r.nb;
    let size = 2 * nb;
    let np = n + 1;
    let quad = elem.quadrature();
    let mut sys = DMatrix::zeros(size, size);
    let mut row = 0;

    // int rho . grad w, w in P_{N-1} without constants
    for m in 0..r.grad_w[0].ncols() {
        for q in 0..quad.len() {
            let g = geo.grad(r.grad_w[0][(q, m)], r.grad_w[1][(q, m)]);
            let w = quad.weights[q] * det;
            for a in 0..nb {
                sys[(row, a)] += w * r.phi[(q, a)] * g[0];
                sys[(row, nb + a)] += w * r.phi[(q, a)] * g[1];
            }
        }
        row += 1;
    }
    // int rho . S(psi), S(psi) = (psi_y, -psi_x)
    for m in 0..r.grad_bubble[0].ncols() {
        for q in 0..quad.len() {
            let g = geo.grad(r.grad_bubble[0][(q, m)], r.grad_bubble[1][(q, m)]);
            let w = quad.weights[q] * det;
            for a in 0..nb {
                sys[(row, a)] += w * r.phi[(q, a)] * g[1];
                sys[(row, nb + a)] -= w * r.phi[(q, a)] * g[0];
            }
        }
        row += 1;
    }
    let rule = elem.edge_rule();
    let mut active = [false; 3];
    for (i, act) in active.iter_mut().enumerate() {
        let e = mesh.tri_edges(t)[i];
        *act = d.edge_kind(e) != EdgeKind::Dirichlet;
        let nrm = mesh.outward_normal(t, i);
        let s = mesh.edge_length(e).sqrt();
        for j in 0..np {
            for q in 0..rule.len() {
                let w = rule.weights[q] * s * r.legendre[(q, j)];
                for a in 0..nb {
                    let v = w * r.phi_edge[i][(q, a)];
                    sys[(row, a)] += v * nrm[0];
                    sys[(row, nb + a)] += v * nrm[1];
                }
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, size);

    let lu = sys.clone().lu();
    let edge_rows = size - 3 * np;
    let mut rhs = DMatrix::zeros(size, 3 * np);
    for c in 0..3 * np {
        rhs[(edge_rows + c, c)] = 1.0;
    }
    let lifting = lu.solve(&rhs).ok_or(EstimatorError::SingularLocalSystem(t))?;
    if lifting.iter().any(|v| !v.is_finite()) {
        return Err(EstimatorError::SingularLocalSystem(t));
    }

    let mass_scale = det / d.kappa(t);
    let cols: Vec<usize> = (0..3 * np).filter(|c| active[c / np]).collect();
    let mu2 = if cols.is_empty() {
        0.0
    } else {
        let la = lifting.select_columns(cols.iter());
        let mut ml = DMatrix::zeros(size, la.ncols());
        ml.rows_mut(0, nb).copy_from(&(&r.mass * la.rows(0, nb)));
        ml.rows_mut(nb, nb).copy_from(&(&r.mass * la.rows(nb, nb)));
        let g = la.tr_mul(&ml) * mass_scale;
        let g = (&g + g.transpose()) * 0.5;
        let ev = SymmetricEigen::new(g).eigenvalues;
        let lo = ev.min();
        let hi = ev.max();
        if lo < 1e-12 * hi { lo.max(0.0) } else { lo }
    };
    Ok(BdmLocal {
        mu2,
        lifting: (mode != BdmMode::LowerBoundOnly).then_some(lifting),
        system: (mode == BdmMode::Verify).then_some(sys),
        active,
        mass_scale,
    })
}
