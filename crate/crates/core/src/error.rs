use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("degenerate or clockwise triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    OverSharedEdge(usize, usize),
    #[error("boundary edge ({0}, {1}) carries no boundary tag (hanging node or open boundary)")]
    UntaggedBoundaryEdge(usize, usize),
    #[error("interior edge ({0}, {1}) carries a boundary tag")]
    TaggedInteriorEdge(usize, usize),
    #[error("triangle {0} references a missing vertex")]
    BadVertexIndex(usize),
    #[error("invalid mesh parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh has no region tags distinguishing subdomains")]
    MissingRegions,
    #[error("mesh file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("polynomial degree {0} outside supported range 1..=12")]
    UnsupportedDegree(usize),
    #[error("nodal set is not unisolvent (Vandermonde is singular)")]
    SingularVandermonde,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("diffusion coefficient must be positive, found {value} in region {region}")]
    NonPositiveKappa { region: u32, value: f64 },
    #[error("no diffusion coefficient given for region {0}")]
    MissingKappa(u32),
    #[error("problem too large for desk scale: {0} dofs (limit {1})")]
    TooLarge(usize, usize),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("non-positive pivot {pivot:e} at column {column} in incomplete Cholesky; increase the diagonal shift")]
    PivotBreakdown { column: usize, pivot: f64 },
    #[error("matrix is not positive definite along a search direction (p'Ap = {0:e})")]
    Indefinite(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("recycle basis is rank deficient")]
    RankDeficient,
    #[error("non-finite value encountered in the iteration")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("singular local flux-recovery system on element {0}")]
    SingularLocalSystem(usize),
    #[error("local flux-recovery matrices were discarded (lower-bound-only mode)")]
    MatricesDiscarded,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
