use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {func}({arg}) is outside the supported domain")]
    Domain { func: &'static str, arg: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("singular matrix: condition number estimate {cond:.3e}")]
    Singular { cond: f64 },

    #[error("noise covariance is not positive semidefinite (min eigenvalue {min_eig:.3e}, floor {floor:.3e}); circuit parameters are inconsistent")]
    NotPsd { min_eig: f64, floor: f64 },

    #[error("rank-deficient receive matrix: condition number {cond:.3e} exceeds {limit:.3e}")]
    RankDeficient { cond: f64, limit: f64 },

    #[error("zero-forcing rejection rate too high: {rejected} rejected trials for {trials} accepted (cap {cap})")]
    RejectionCap {
        rejected: usize,
        trials: usize,
        cap: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
