use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("mode {mode} out of range for a {modes}-mode space")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("mode {0} appears more than once")]
    RepeatedMode(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time {time} outside the schedule window [0, {t_final}]")]
    TimeOutOfRange { time: f64, t_final: f64 },

    #[error("{what} too large for exhaustive enumeration ({size} > {limit})")]
    TooLarge { what: &'static str, size: usize, limit: usize },

    #[error("memory budget exceeded: {required} bytes required, budget is {budget} bytes")]
    MemoryBudget { required: u128, budget: u128 },

    #[error("time step {dt} exceeds the RK4 stability limit {limit:.3e} (spectral radius bound {radius:.1})")]
    UnstableStep { dt: f64, limit: f64, radius: f64 },

    #[error("integration failed at step {step} (t = {time}): norm drift {drift:.3e} exceeds tolerance {tolerance:.1e}")]
    NormDrift { step: usize, time: f64, drift: f64, tolerance: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NormDrift { .. } | Error::NoConvergence { .. } | Error::UnstableStep { .. } | Error::MemoryBudget { .. }
        )
    }
}
