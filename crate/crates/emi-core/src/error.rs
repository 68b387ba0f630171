use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmiError {
    #[error("invalid mesh resolution nh={0}: must be a power of two and at least 4")]
    InvalidResolution(usize),

    #[error("incompatible geometry for model {model}: nh={nh}, N={cells}: {reason}")]
    IncompatibleGeometry {
        model: char,
        nh: usize,
        cells: usize,
        reason: String,
    },

    #[error("subdomain {0} does not exist or owns no elements")]
    EmptySubdomain(usize),

    #[error("interface between subdomains {0} and {1} is empty")]
    EmptyInterface(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("factorization failed at pivot {index}: value {pivot:e}")]
    FactorizationFailed { index: usize, pivot: f64 },

    #[error("singular capacitance system (eps={eps:e}, pivot ratio estimate {rcond:e})")]
    SingularCapacitance { eps: f64, rcond: f64 },

    #[error("operation requires model A (arrowhead structure); got model {0}")]
    NotArrowhead(char),

    #[error("AMG coarsening stagnated at level {level}: {fine} -> {coarse} unknowns")]
    CoarseningStagnated {
        level: usize,
        fine: usize,
        coarse: usize,
    },

    #[error("eigensolver did not converge: {0}")]
    EigenNoConvergence(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for EmiError {
    fn from(e: std::io::Error) -> Self {
        EmiError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EmiError>;
