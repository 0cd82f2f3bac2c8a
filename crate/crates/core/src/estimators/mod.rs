//! A posteriori estimators evaluated on a CG iterate.

mod bdm;

pub use bdm::{Bdm, BdmLocal, BdmMode};
pub use crate::krylov::eta_alg;

use crate::assembly::{EdgeKind, FemProblem, ResidualSplit, StrongResiduals};
use crate::error::EstimatorError;
use crate::mesh::{classify_subdomains, NodeClass};

/// `eta_R` and its element contributions `eta_{R,K}`.
#[derive(Clone, Debug)]
pub struct ResidualEstimate {
    pub global: f64,
    pub elements: Vec<f64>,
}

/// `sum_q w_q det r_q^2` over element `t`.
fn element_l2_sq(problem: &FemProblem, res: &StrongResiduals, t: usize) -> f64 {
    let d = problem.disc();
    let w = &d.element().quadrature().weights;
    let det = d.geometry(t).det;
    res.element_values(t).iter().zip(w).map(|(r, w)| w * det * r * r).sum()
}

fn edge_l2_sq(problem: &FemProblem, res: &StrongResiduals, e: usize) -> f64 {
    let d = problem.disc();
    let w = &d.element().edge_rule().weights;
    let len = d.mesh().edge_length(e);
    res.edge_values(e).iter().zip(w).map(|(r, w)| w * len * r * r).sum()
}

fn element_mean(problem: &FemProblem, res: &StrongResiduals, t: usize) -> f64 {
    let d = problem.disc();
    let w = &d.element().quadrature().weights;
    let det = d.geometry(t).det;
    let area = d.mesh().area(t);
    res.element_values(t).iter().zip(w).map(|(r, w)| w * det * r).sum::<f64>() / area
}

fn edge_mean(problem: &FemProblem, res: &StrongResiduals, e: usize) -> f64 {
    let w = &problem.disc().element().edge_rule().weights;
    res.edge_values(e).iter().zip(w).map(|(r, w)| w * r).sum()
}

/// Residual estimator with explicit `h`, `N` and `kappa` scaling. Interior
/// edges are shared half and half between their two elements.
pub fn eta_r(problem: &FemProblem, res: &StrongResiduals) -> ResidualEstimate {
    let d = problem.disc();
    let mesh = d.mesh();
    let n = d.degree() as f64;
    let elements = d.execution().map(d.num_triangles(), |t| {
        let h = mesh.diameter(t);
        let mut s = h * h / (d.kappa(t) * n * n) * element_l2_sq(problem, res, t);
        for e in mesh.tri_edges(t) {
            let c = match d.edge_kind(e) {
                EdgeKind::Dirichlet => continue,
                EdgeKind::Interior => 2.0,
                EdgeKind::Neumann => 1.0,
            };
            s += mesh.edge_length(e) / (c * d.edge_kappa(e) * n) * edge_l2_sq(problem, res, e);
        }
        s.sqrt()
    });
    let global = elements.iter().map(|v| v * v).sum::<f64>().sqrt();
    ResidualEstimate { global, elements }
}

/// Modified residual estimator built from element and edge means.
pub fn eta_mr(problem: &FemProblem, res: &StrongResiduals) -> f64 {
    let d = problem.disc();
    let mesh = d.mesh();
    let vol: f64 = d
        .execution()
        .map(d.num_triangles(), |t| {
            let a = mesh.area(t);
            let m = element_mean(problem, res, t);
            a * a * m * m * a / d.kappa(t)
        })
        .iter()
        .sum();
    let edge: f64 = d
        .execution()
        .map(mesh.num_edges(), |e| {
            if !d.edge_active(e) {
                return 0.0;
            }
            let l = mesh.edge_length(e);
            let m = edge_mean(problem, res, e);
            l * l * m * m * l / d.edge_kappa(e)
        })
        .iter()
        .sum();
    (vol + edge).sqrt()
}

pub fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
}

fn masked_weighted_norm(v: &[f64], w: &[f64], mask: &[f64]) -> f64 {
    v.iter().zip(w).zip(mask).map(|((v, w), m)| m * w * v * v).sum::<f64>().sqrt()
}

/// `(||M_p r||_w, ||M_p R||_w + ||M_p F||_w)` for one subdomain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubdomainPair {
    pub class: NodeClass,
    pub res_w: f64,
    pub eta_rf_w: f64,
}

#[derive(Clone, Debug)]
pub struct ResidualFlux {
    pub eta_rf_w: f64,
    pub res_w: f64,
    pub subdomains: Option<[SubdomainPair; 3]>,
}

/// Diagonal masks of the interior, overlap and exterior node sets on the free dofs.
#[derive(Clone, Debug)]
pub struct FreeMasks {
    pub masks: [Vec<f64>; 3],
}

impl FreeMasks {
    pub fn new(problem: &FemProblem) -> crate::error::Result<Self> {
        let d = problem.disc();
        let m = classify_subdomains(d.mesh(), d.dofs())?;
        Ok(Self { masks: NodeClass::ALL.map(|c| d.dofs().restrict(&m.mask(c))) })
    }
}

/// `||R||_w + ||F||_w` together with `||r||_w`, optionally per subdomain.
pub fn eta_rf(split: &ResidualSplit, w: &[f64], masks: Option<&FreeMasks>) -> ResidualFlux {
    let eta_rf_w = weighted_norm(&split.volume, w) + weighted_norm(&split.edge, w);
    let res_w = weighted_norm(&split.residual, w);
    let subdomains = masks.map(|m| {
        std::array::from_fn(|i| {
            let mk = &m.masks[i];
            SubdomainPair {
                class: NodeClass::ALL[i],
                res_w: masked_weighted_norm(&split.residual, w, mk),
                eta_rf_w: masked_weighted_norm(&split.volume, w, mk) + masked_weighted_norm(&split.edge, w, mk),
            }
        })
    });
    ResidualFlux { eta_rf_w, res_w, subdomains }
}

/// Which estimators to evaluate at a sampled iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EstimatorSet {
    pub r: bool,
    pub mr: bool,
    pub bdm: bool,
    pub bdm_lb: bool,
    pub rf: bool,
    pub subdomains: bool,
}

impl EstimatorSet {
    pub const ALL: Self = Self { r: true, mr: true, bdm: true, bdm_lb: true, rf: true, subdomains: true };
    pub const NONE: Self = Self { r: false, mr: false, bdm: false, bdm_lb: false, rf: false, subdomains: false };

    pub fn needs_strong_residuals(&self) -> bool {
        self.r || self.mr || self.bdm || self.bdm_lb || self.rf
    }
}

/// All estimator values at one iterate. Missing entries were not requested.
#[derive(Clone, Debug, Default)]
pub struct EstimatorSample {
    pub k: usize,
    pub res_l2: f64,
    pub res_w: Option<f64>,
    pub eta_r: Option<f64>,
    pub eta_mr: Option<f64>,
    pub eta_bdm: Option<f64>,
    pub eta_bdm_lb: Option<f64>,
    pub eta_rf_w: Option<f64>,
    pub subdomains: Option<[SubdomainPair; 3]>,
    pub eta_r_elements: Vec<f64>,
}

/// Precomputed state for repeated estimator evaluation on one problem.
#[derive(Clone, Debug)]
pub struct EstimatorSuite {
    pub set: EstimatorSet,
    pub bdm: Option<Bdm>,
    pub weights: Vec<f64>,
    pub masks: Option<FreeMasks>,
}

impl EstimatorSuite {
    pub fn new(problem: &FemProblem, mut set: EstimatorSet) -> crate::error::Result<Self> {
        let bdm = if set.bdm || set.bdm_lb {
            let mode = if set.bdm { BdmMode::Lifting } else { BdmMode::LowerBoundOnly };
            Some(Bdm::precompute(problem, mode)?)
        } else {
            None
        };
        let masks = if set.subdomains && problem.disc().mesh().has_regions() {
            Some(FreeMasks::new(problem)?)
        } else {
            set.subdomains = false;
            None
        };
        Ok(Self { set, bdm, weights: problem.weight_vector(), masks })
    }

    /// Evaluates the requested estimators at `x` (free-dof coefficients).
    pub fn sample(&self, problem: &FemProblem, k: usize, x: &[f64]) -> Result<EstimatorSample, EstimatorError> {
        let split_needed = self.set.rf;
        let mut s = EstimatorSample { k, ..Default::default() };
        if !self.set.needs_strong_residuals() {
            let r = problem.residual(x);
            s.res_l2 = crate::assembly::sparse::norm2(&r);
            s.res_w = Some(weighted_norm(&r, &self.weights));
            return Ok(s);
        }
        let res = problem.strong_residuals(x);
        if self.set.r {
            let e = eta_r(problem, &res);
            s.eta_r = Some(e.global);
            s.eta_r_elements = e.elements;
        }
        if self.set.mr {
            s.eta_mr = Some(eta_mr(problem, &res));
        }
        if let Some(b) = &self.bdm {
            let data = b.jump_data(problem, &res);
            if self.set.bdm {
                s.eta_bdm = Some(b.eta(&data)?);
            }
            if self.set.bdm_lb {
                s.eta_bdm_lb = Some(b.eta_lower(&data));
            }
        }
        let residual = problem.residual(x);
        s.res_l2 = crate::assembly::sparse::norm2(&residual);
        if split_needed {
            let split = problem.split_with_residual(residual, &res);
            let rf = eta_rf(&split, &self.weights, self.masks.as_ref());
            s.res_w = Some(rf.res_w);
            s.eta_rf_w = Some(rf.eta_rf_w);
            s.subdomains = rf.subdomains;
        } else {
            s.res_w = Some(weighted_norm(&residual, &self.weights));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests;
