use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs that violate a documented precondition.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A sampled mode failed its normalization / orthogonality check.
    #[error("grid too coarse or too narrow: mode {order} {detail}")]
    Grid { order: usize, detail: String },

    /// Numerically evaluated operator is not Hermitian within tolerance.
    #[error("grid quality: overlap matrix not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("pump above threshold for mode {mode}: lambda/gamma = {ratio:.4} (threshold 1)")]
    AboveThreshold { mode: usize, ratio: f64 },

    #[error("near-threshold singularity in mode {mode} at omega = {omega:.6}: |H| = {magnitude:.3e}")]
    NearThreshold { mode: usize, omega: f64, magnitude: f64 },

    #[error("ill-conditioned system at omega = {omega:.6}: condition number {condition:.3e}")]
    IllConditioned { omega: f64, condition: f64 },

    /// The ±Ω pairing required by every spectrum formula is broken.
    #[error("frequency grid: {0}")]
    FrequencyGrid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
