//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum FracError {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Result would overflow the floating-point range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Invalid or degenerate mesh input.
    #[error("mesh error: {0}")]
    Mesh(String),

    /// Boundary topology not supported (e.g. several boundary loops).
    #[error("unsupported topology: {0}")]
    Topology(String),

    /// A linear-algebra factorization or iterative solve failed.
    #[error("linear solver failure: {0}")]
    Solver(String),

    /// A matrix expected to be positive definite was not; usually signals
    /// an assembly sign or scaling bug upstream.
    #[error("coercivity violation: {0}")]
    Coercivity(String),

    /// Sequence extrapolation hit a vanishing denominator.
    #[error("extrapolation failure: {0}")]
    Extrapolation(String),

    /// Point evaluation requested where the field is not defined.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Malformed configuration or command-line input.
    #[error("config error: {0}")]
    Config(String),

    /// Error while a per-mode problem was being assembled or solved.
    #[error("mode {mode}: {source}")]
    Mode {
        mode: usize,
        #[source]
        source: Box<FracError>,
    },

    /// Error while one refinement level of a study was being processed.
    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<FracError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FracError>;
