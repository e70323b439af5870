use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least 3 interior nodes, got {0}")]
    GridTooSmall(usize),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mode {mode} does not exist: {reason}")]
    NoSuchMode { mode: usize, reason: String },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("integration diverged: sup norm {value:.3e} exceeds guard {bound:.3e} at {at:.4}")]
    Divergence { value: f64, bound: f64, at: f64 },

    #[error("matrix is not symmetric (entry ({row}, {col}) differs by {diff:.3e})")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("divisor {divisor} is not admissible for mode {mode}: {reason}")]
    InvalidDivisor { divisor: usize, mode: usize, reason: String },

    #[error("trajectory does not converge: final distance {final_distance:.3e}, initial {initial_distance:.3e}")]
    NonConverging { final_distance: f64, initial_distance: f64 },

    #[error("probe did not settle within t_max = {t_max}")]
    Unresolved { t_max: f64 },

    #[error("sample set is empty")]
    EmptySamples,
}
