use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the polytope has no interior point")]
    EmptyPolytope,
    #[error("the polytope is unbounded")]
    Unbounded,
    #[error("linear form {index} has a zero coefficient vector")]
    DegenerateForm { index: usize },
    #[error("direction vector is zero")]
    ZeroDirection,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("face enumeration would visit {count} subsets (limit {limit})")]
    TooManySubsets { count: u128, limit: u128 },
    #[error("linear program failed: {0}")]
    LpFailure(String),
    #[error("start point is not in the open polytope")]
    InvalidStart,
    #[error("Birkhoff polytope needs N >= 2, got {0}")]
    BadSize(usize),
    #[error("density value {observed} exceeds the declared bound {bound}")]
    SamplerBoundViolated { observed: f64, bound: f64 },
    #[error("invalid direction family: {0}")]
    InvalidFamily(String),
    #[error("grid would hold {count} cells (cap {cap})")]
    TooManyCells { count: usize, cap: usize },
    #[error("cell size {cell_size} is coarser than h/4 = {limit}")]
    ResolutionTooCoarse { cell_size: f64, limit: f64 },
    #[error("eigensolver did not converge after {iterations} restarts")]
    NoConvergence { iterations: usize },
    #[error("cell {cell} has no stencil neighbor in any direction")]
    DisconnectedStencil { cell: usize },
    #[error("linear solver failed: {0}")]
    SolverFailure(String),
    #[error("no minorization found up to N = {n_max}")]
    MinorizationNotFound { n_max: usize },
    #[error("{replicas} replicas over {bins} bins is fewer than 20 per bin")]
    TooFewReplicas { replicas: usize, bins: usize },
    #[error("rate fit window is degenerate: {0}")]
    WindowDegenerate(String),
    #[error("spectrum holds only {computed} eigenvalues, all inside the counting window")]
    SpectrumTruncated { computed: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
