use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("unknown edge id {0}")]
    UnknownEdge(usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("{what} exceeds the configured cap ({size} > {cap})")]
    CapExceeded { what: &'static str, size: u128, cap: u128 },
    #[error("point is on the boundary of the local polytope: {0}")]
    Boundary(String),
    #[error("operation requires binary variables")]
    NotBinary,
    #[error("graph is not a tree")]
    NotTree,
    #[error("expected nullity {expected}, found {found}")]
    Nullity { expected: usize, found: usize },
    #[error("input is not a fixed point (residual {0:e})")]
    NotFixedPoint(f64),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("singular block U for factor {0}")]
    SingularFactor(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
