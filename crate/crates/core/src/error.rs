//! Error types shared by all estimators and pipelines.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (empty series, length mismatch, non-finite values).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Structural parameters violating a model assumption.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Requested a noise family or moment order without a closed form.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// No moment order up to `n_max` produced a usable denominator.
    /// At population level this is exactly what Gaussian confounding looks like.
    #[error("ratio condition not detected up to n = {n_max} (tol = {tol})")]
    ConditionNotDetected { n_max: u32, tol: f64 },

    /// |E[DZ]| is below tolerance, so the sign of the ratio is undefined.
    #[error("sign of E[DZ] undetermined (|E[DZ]| = {value:.3e} below tolerance)")]
    SignUndetermined { value: f64 },

    /// A denominator collapsed below tolerance.
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    /// Rank-deficient regression design.
    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    /// More than half of the bootstrap resamples failed for a proxy.
    #[error("proxy {proxy} unusable: {failed} of {total} resamples failed")]
    ProxyUnusable {
        proxy: String,
        failed: usize,
        total: usize,
    },

    /// Supplied delta violates the admissibility inequalities of the twin construction.
    #[error("invalid delta {delta}: must satisfy 0 < delta <= min({bound1}, {bound2})")]
    InvalidDelta { delta: f64, bound1: f64, bound2: f64 },

    /// Twin construction produced a negative noise variance.
    #[error("twin construction failed: {0}")]
    ConstructionFailed(String),

    /// A mapped column is missing from the input file.
    #[error("schema error: {0}")]
    SchemaError(String),

    /// No rows survived missing-value filtering.
    #[error("empty dataset after filtering")]
    EmptyDataset,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
