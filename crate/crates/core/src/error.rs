use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("row {row} is not a probability vector (sum {sum})")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("distribution is not stationary (residual {residual:e})")]
    NotStationary { residual: f64 },
    #[error("stationary mass at state {state} is {mass}, expected > 0")]
    ZeroMass { state: usize, mass: f64 },
    #[error("weights are not a probability vector: {0}")]
    NotProbability(String),
    #[error("not a proper metric: {0}")]
    NotAMetric(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("stationary iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("marginals are not probability vectors: {0}")]
    InfeasibleMarginals(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("instance too large for brute force ({cells} cells, limit {limit})")]
    TooLarge { cells: usize, limit: usize },
    #[error("transport solver failed: {0}")]
    SolverFailure(String),
    #[error("label dimensions differ ({0} vs {1})")]
    LabelDimMismatch(usize, usize),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("coupling marginals do not match: {0}")]
    MarginalMismatch(String),
}
