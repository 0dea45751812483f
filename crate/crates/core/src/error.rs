use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("derivative order {0} is not supported (max 3)")]
    Order(usize),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("support separation {found} is below the required {required}")]
    Separation { found: f64, required: f64 },
    #[error("interpolation system is not provably invertible: ||I - C|| = {0}")]
    NotInvertible(f64),
    #[error("rank deficient system ({rows}x{cols}), condition estimate {cond:e}")]
    RankDeficient { rows: usize, cols: usize, cond: f64 },
    #[error("infeasible packing: {count} points with separation {delta}")]
    InfeasiblePacking { count: usize, delta: f64 },
    #[error("eigendecomposition failed")]
    Eigen,
    #[error("support-locating polynomial is uninformative: {0:.1}% of the grid exceeds the threshold")]
    Uninformative(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
