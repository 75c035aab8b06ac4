use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The shifted QR iteration ran out of sweeps. `partial` holds the
    /// eigenvalues deflated before the budget was exhausted.
    #[error("eigensolver did not converge after {iterations} sweeps ({} of {n} eigenvalues deflated)", partial.len())]
    NoConvergence {
        iterations: usize,
        n: usize,
        partial: Vec<Complex64>,
    },

    #[error("resolvent shift is singular or ill-conditioned (condition estimate {condition:e})")]
    SingularShift { condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
