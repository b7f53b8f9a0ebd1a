use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("sample contains a non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("values are not sorted in non-decreasing order")]
    Unsorted,

    #[error("invalid range [{lo}, {hi}]: lower bound must be below upper bound")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("number of bins must be at least 1")]
    ZeroBins,

    #[error("invalid parameters for {family}: {reason}")]
    InvalidParameters { family: String, reason: String },

    #[error("{family} cannot be fitted: {reason}")]
    SupportViolation { family: String, reason: String },

    #[error(
        "{family} maximum likelihood did not converge after {iterations} iterations \
         (last step {last_step:e}, gradient norm {gradient_norm:e})"
    )]
    NonConvergence {
        family: String,
        iterations: usize,
        last_step: f64,
        gradient_norm: f64,
    },

    #[error("spacings form requires equal sizes; use esjs (got {p} and {q})")]
    UnequalSizes { p: usize, q: usize },

    #[error("degenerate perfect fit: the reference ESJS is zero")]
    DegeneratePerfectFit,

    #[error("invalid bootstrap configuration: {0}")]
    InvalidBootstrap(String),

    #[error("invalid block length {block_length} for a series of length {len}")]
    InvalidBlockLength { block_length: usize, len: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no hypothesis could be evaluated: {0}")]
    NoHypotheses(String),
}

impl Error {
    /// True for failures of a numerical procedure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::DegeneratePerfectFit
        )
    }
}
