use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("parameter {value} outside [0, 1]")]
    ParameterOutOfRange { value: f64 },

    #[error("derivative order {order} exceeds supported maximum {max}")]
    DerivativeOrder { order: usize, max: usize },

    #[error("non-positive rational denominator {0:e} (corrupt weights)")]
    NonPositiveWeight(f64),

    #[error("degenerate geometry mapping: det J = {det:e} at ({xi0}, {xi1})")]
    SingularJacobian { det: f64, xi0: f64, xi1: f64 },

    #[error("unknown geometry `{0}`")]
    UnknownGeometry(String),

    #[error("unknown example `{0}`")]
    UnknownExample(String),

    #[error("quadrature order {0} outside 1..=16")]
    QuadratureOrder(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("solver residual {residual:e} above tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("{0}")]
    InvalidInput(String),

    #[error("cheap indicator requires degree >= 2 (gradient not in H(div) for degree {0})")]
    DegreeTooLow(usize),

    #[error("exact error is zero; efficiency index undefined")]
    ZeroExactError,

    #[error("empty cell list")]
    EmptyCells,

    #[error("level {level}: {source}")]
    AtLevel { level: usize, source: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
