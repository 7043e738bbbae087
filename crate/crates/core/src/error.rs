use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An exponent or dimension violates its sign/order constraint.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate exponents: delta = (k-m)(k-s) - pq = {delta:e} is zero within tolerance")]
    DegenerateDelta { delta: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("sigma is undefined for k <= m")]
    SigmaUndefined,

    #[error("trajectory did not terminate in a blow-up")]
    NotABlowup,

    #[error("fixed-point iteration did not converge in {max_iter} iterations")]
    NoConvergence { max_iter: usize },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("trajectory reaches r = {r_max:e}; at least {required:e} is needed")]
    InsufficientRange { r_max: f64, required: f64 },

    #[error("invalid sweep specification: {0}")]
    Sweep(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::DegenerateDelta { .. }
                | Error::Precondition(_)
                | Error::SigmaUndefined
                | Error::Sweep(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
