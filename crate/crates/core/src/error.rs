use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("modular vanishes; the ratio is undefined")]
    ZeroModular,
    #[error("modular is infinite; the ratio is undefined")]
    InfiniteModular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("argument must vanish on the boundary")]
    NonzeroBoundary,
    #[error("energy is +INF at the given point")]
    SaturatedEnergy,
    #[error("ill-posed data: {0}")]
    IllPosed(String),
    #[error("no admissible pairs among {0} samples")]
    NoAdmissiblePairs(usize),
    #[error("support not resolved: {0}")]
    Unresolved(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}
