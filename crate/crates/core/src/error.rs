use thiserror::Error;

/// Errors raised by ladder validation and the spectral computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("weights must sum to 1 (got {0})")]
    WeightSum(String),
    #[error("invalid ladder geometry: {0}")]
    Geometry(String),
    #[error("steps do not share a common rho_k*(b_k - a_k): {0}")]
    TauMismatch(String),
    #[error("non-numeric field: {0}")]
    NonNumeric(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("{atoms} atoms exceed the capacity limit of {limit}")]
    Capacity { atoms: u128, limit: usize },
    #[error("index {index} out of range (system has {len} eigenvalues)")]
    Index { index: usize, len: usize },
    #[error("inverse iteration did not converge at lambda = {0}")]
    NoConverge(f64),
    #[error("vector has no entry above the zero threshold")]
    ZeroVec,
    #[error("eigenvalues {0} and {1} are not resolved by bisection")]
    Cluster(usize, usize),
    #[error("trust margin violated: k + {margin} > g (k = {k}, g = {g})")]
    Margin { k: usize, g: usize, margin: usize },
    #[error("systems are not built on the same atoms")]
    Mismatch,
}

impl SpectraError {
    /// Numerical failures, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SpectraError::NoConverge(_) | SpectraError::Capacity { .. } | SpectraError::Cluster(..)
        )
    }
}

pub type Result<T> = std::result::Result<T, SpectraError>;
