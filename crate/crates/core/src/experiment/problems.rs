use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::{FemProblem, ProblemSpec};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{diamond_mesh, lshape_mesh, unit_square_mesh, BoundaryTag, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Test1,
    Test2,
    Test3_1,
    Test3_2,
    Test4,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [Self::Test1, Self::Test2, Self::Test3_1, Self::Test3_2, Self::Test4];

    pub fn name(self) -> &'static str {
        match self {
            Self::Test1 => "test1",
            Self::Test2 => "test2",
            Self::Test3_1 => "test3_1",
            Self::Test3_2 => "test3_2",
            Self::Test4 => "test4",
        }
    }

    pub fn is_lshape(self) -> bool {
        matches!(self, Self::Test3_1 | Self::Test3_2 | Self::Test4)
    }

    /// The problem whose discretization this one solves; test4 reuses test3_2.
    pub fn discretized_as(self) -> Self {
        if self == Self::Test4 { Self::Test3_2 } else { self }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown problem `{s}`")))
    }
}

/// A smooth solution with closed-form derivatives.
pub trait AnalyticSolution: Send + Sync {
    fn value(&self, p: [f64; 2]) -> f64;
    fn grad(&self, p: [f64; 2]) -> [f64; 2];
    fn laplacian(&self, p: [f64; 2]) -> f64;
}

/// `f = -div(kappa grad u)` for constant `kappa`.
pub fn manufacture_rhs<U: AnalyticSolution + ?Sized>(u: &U, kappa: f64) -> impl Fn([f64; 2]) -> f64 + '_ {
    move |p| -kappa * u.laplacian(p)
}

/// `u = (1 - x^2)^2 (1 - y^2)^2 e^{x + y}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SmoothBump;

impl SmoothBump {
    /// `(q, q', q'')` of `q(t) = (1 - t^2)^2 e^t`.
    fn factor(t: f64) -> [f64; 3] {
        let e = t.exp();
        let p = (1.0 - t * t).powi(2);
        let dp = -4.0 * t * (1.0 - t * t);
        let ddp = 12.0 * t * t - 4.0;
        [p * e, (p + dp) * e, (p + 2.0 * dp + ddp) * e]
    }
}

impl AnalyticSolution for SmoothBump {
    fn value(&self, p: [f64; 2]) -> f64 {
        Self::factor(p[0])[0] * Self::factor(p[1])[0]
    }

    fn grad(&self, p: [f64; 2]) -> [f64; 2] {
        let (x, y) = (Self::factor(p[0]), Self::factor(p[1]));
        [x[1] * y[0], x[0] * y[1]]
    }

    fn laplacian(&self, p: [f64; 2]) -> f64 {
        let (x, y) = (Self::factor(p[0]), Self::factor(p[1]));
        x[2] * y[0] + x[0] * y[2]
    }
}

/// Coefficient inside the three inclusions of the L-shaped domain.
pub fn inclusion_kappa(kind: ProblemKind) -> Option<f64> {
    match kind {
        ProblemKind::Test3_1 => Some(1e-6),
        ProblemKind::Test3_2 | ProblemKind::Test4 => Some(1e6),
        _ => None,
    }
}

pub fn lshape_source(kind: ProblemKind) -> f64 {
    if kind == ProblemKind::Test3_1 { 0.1 } else { 10.0 }
}

/// Source of the warm-up solve that builds the recycle space.
pub fn warmup_source(p: [f64; 2]) -> f64 {
    10.0 + 50.0 * p[0].sin()
}

/// Problem data; the flux through every boundary edge is the one of the exact
/// solution, so the unit-square problems are pure Neumann problems.
pub fn problem_spec(kind: ProblemKind) -> ProblemSpec {
    match kind {
        ProblemKind::Test1 | ProblemKind::Test2 => {
            let u = Arc::new(SmoothBump);
            let (a, b, c) = (u.clone(), u.clone(), u.clone());
            ProblemSpec::new(move |p| manufacture_rhs(&*a, 1.0)(p))
                .with_neumann(move |p, n| {
                    let g = b.grad(p);
                    g[0] * n[0] + g[1] * n[1]
                })
                .with_exact(move |p| c.value(p), move |p| u.grad(p))
        }
        _ => {
            let k = inclusion_kappa(kind).unwrap();
            let f = lshape_source(kind);
            ProblemSpec::new(move |_| f).with_kappa(1, k).with_kappa(2, k).with_kappa(3, k)
        }
    }
}

/// Starting mesh before any adaptive refinement.
pub fn base_mesh(kind: ProblemKind, n: usize, ratio: f64) -> Result<Mesh> {
    Ok(match kind {
        ProblemKind::Test1 => unit_square_mesh(n)?.with_boundary(|_| BoundaryTag::Neumann),
        ProblemKind::Test2 => diamond_mesh(ratio)?.with_boundary(|_| BoundaryTag::Neumann),
        _ => lshape_mesh(),
    })
}

pub fn build(kind: ProblemKind, mesh: Mesh, degree: usize, exec: Execution) -> Result<FemProblem> {
    Ok(FemProblem::with_execution(mesh, degree, problem_spec(kind), exec)?)
}
