use thiserror::Error;

/// Errors raised by the solver and its analyses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero density: integrated mass {mass:e} is below the vacuum threshold")]
    ZeroDensity { mass: f64 },

    #[error("tridiagonal solve failed: {0}")]
    SolverFailure(String),

    #[error("CFL violation: max|v|*dt/dx = {courant} exceeds 1")]
    CflViolation { courant: f64 },

    #[error("invalid parameters for pair ({i}, {j}): {message}")]
    InvalidParameters { i: usize, j: usize, message: String },

    #[error("rate fit is degenerate: {0}")]
    FitDegenerate(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("step {step} failed: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Attach the failing step index to an error raised inside a time loop.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            Error::AtStep { .. } => self,
            other => Error::AtStep {
                step,
                source: Box::new(other),
            },
        }
    }

    /// The step index, if this error was raised inside a time loop.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::AtStep { step, .. } => Some(*step),
            _ => None,
        }
    }
}
