//! Crate-wide error type.

/// Errors produced by models, integrators, graph construction and solves.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{context}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An implicit one-step solve did not reach the residual tolerance.
    #[error("implicit step did not converge after {iterations} iterations (residual {residual:.3e})")]
    IntegrationFailure { iterations: usize, residual: f64 },

    /// Integration failure while composing steps over a grid interval.
    #[error("integration failed on interval {interval}")]
    SimulationFailure {
        interval: usize,
        #[source]
        source: Box<Error>,
    },

    /// A residual evaluation produced NaN or infinity.
    #[error("edge {edge} produced a non-finite residual")]
    EdgeEvaluation { edge: usize },

    #[error("quadratic program: {0}")]
    Qp(String),

    #[error("nonlinear program did not produce a usable solution: {0}")]
    Nlp(String),

    #[error("LQR design failed: {0}")]
    LqrDesign(String),

    /// The requested region sampling would exceed the configured budget.
    #[error("region sampling needs {required} samples, budget is {budget}")]
    RegionBudget { required: u64, budget: u64 },

    #[error("no qualifying samples for region estimate")]
    EmptyRegion,

    /// The controller could not compute a fresh control. The carried
    /// fallback is a zero-order hold of the previously applied control.
    #[error("controller step infeasible; zero-order hold fallback available")]
    ControllerFallback { fallback: Vec<f64> },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
