//! Shared error and result types.

use crate::glm::FittedModel;

/// Errors produced by data loading, model fitting, and effect estimation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input data could not be read, parsed, or validated.
    #[error("data error: {0}")]
    Data(String),
    /// A design, intervention, or argument combination is not usable.
    #[error("invalid specification: {0}")]
    Invalid(String),
    /// The (weighted) design matrix does not have full column rank.
    #[error("rank-deficient design: {0}")]
    RankDeficient(String),
    /// Iteratively reweighted least squares stopped without meeting the
    /// convergence criteria. The last iterate is attached for inspection.
    #[error(
        "fit did not converge after {iterations} iterations (max |score| = {max_abs_score:.3e})"
    )]
    NotConverged {
        iterations: usize,
        max_abs_score: f64,
        last: Box<FittedModel>,
    },
    /// Estimation failed for a reason other than a model fit.
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
