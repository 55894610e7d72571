use thiserror::Error;

/// Errors raised across the library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("endpoints must satisfy a1 < a2 < a3 < a4, got ({0}, {1}, {2}, {3})")]
    InvalidConfiguration(f64, f64, f64, f64),

    #[error("evaluation at singular point {point} is undefined")]
    SingularPoint { point: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grids collide: measurement node {x} coincides with object node {y}")]
    GridCollision { x: f64, y: f64 },

    #[error("filter is not admissible: {0}")]
    InadmissibleFilter(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("ill-conditioned log-basis match (condition {condition:.3e}) at offset {offset}")]
    IllConditioned { condition: f64, offset: f64 },

    #[error("step size underflow while propagating at x = {x}")]
    StepUnderflow { x: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("too few samples: needed {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
