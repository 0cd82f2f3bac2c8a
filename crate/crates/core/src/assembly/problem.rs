use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::AssemblyError;
use crate::mesh::Mesh;

pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
/// Neumann datum `g(x, n)` with `n` the outward unit normal.
pub type FluxFn = Arc<dyn Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad: VectorFn,
}

/// `-div(kappa grad u) = f` with `kappa` constant per region, Neumann flux `g`
/// on edges tagged Neumann and `u = u_D` on edges tagged Dirichlet.
#[derive(Clone)]
pub struct ProblemSpec {
    pub kappa: BTreeMap<u32, f64>,
    pub source: ScalarFn,
    pub neumann: FluxFn,
    pub dirichlet: ScalarFn,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("kappa", &self.kappa)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Unit coefficient on region 0, homogeneous boundary data.
    pub fn new(source: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kappa: BTreeMap::from([(0, 1.0)]),
            source: Arc::new(source),
            neumann: Arc::new(|_, _| 0.0),
            dirichlet: Arc::new(|_| 0.0),
            exact: None,
        }
    }

    pub fn with_kappa(mut self, region: u32, value: f64) -> Self {
        self.kappa.insert(region, value);
        self
    }

    pub fn with_neumann(mut self, g: impl Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        self.neumann = Arc::new(g);
        self
    }

    pub fn with_dirichlet(mut self, g: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        self.dirichlet = Arc::new(g);
        self
    }

    pub fn with_exact(
        mut self,
        u: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
        grad: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(ExactSolution { u: Arc::new(u), grad: Arc::new(grad) });
        self
    }

    pub fn with_source(mut self, f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Arc::new(f);
        self
    }

    /// Coefficient of every triangle of `mesh`.
    pub fn element_kappa(&self, mesh: &Mesh) -> Result<Vec<f64>, AssemblyError> {
        for (&region, &value) in &self.kappa {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AssemblyError::NonPositiveKappa { region, value });
            }
        }
        (0..mesh.num_triangles())
            .map(|t| {
                let r = mesh.region(t);
                self.kappa.get(&r).copied().ok_or(AssemblyError::MissingKappa(r))
            })
            .collect()
    }
}
