//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A decision-set, design, or estimator input failed validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A privacy-parameter domain bound was violated.
    #[error("privacy parameter out of range: {0}")]
    PrivacyDomain(String),

    /// The design solver hit its iteration cap before reaching the target.
    /// Carries the best design value achieved, which signals how far a
    /// degenerate or ill-conditioned action set was from the goal.
    #[error("design solver did not converge: best g-value {best_g_value:.6} (target {target:.6})")]
    DesignNonConvergence { best_g_value: f64, target: f64 },

    /// The normal-equations matrix was singular beyond span handling.
    #[error("singular estimator system: {0}")]
    SingularSystem(String),

    /// An experiment configuration failed validation before any simulation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Metrics bookkeeping was driven past its round budget.
    #[error("metrics error: {0}")]
    Metrics(String),

    /// File input/output failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Config file parse failure.
    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
