use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("overdispersion required: variance {variance} must exceed mean {mean} for a negative binomial marginal")]
    NotOverdispersed { mean: f64, variance: f64 },

    #[error("probability {0} outside [0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("dimension {0} outside supported range 2..=12")]
    DimensionOutOfRange(usize),

    #[error("zero variance in coordinate {0}")]
    ZeroVariance(usize),

    #[error("matrix is not a symmetric unit-diagonal correlation matrix: {0}")]
    NotCorrelationMatrix(String),

    #[error(
        "infeasible target: correlation {target} for pair ({},{}) outside admissible range [{min}, {max}]",
        pair.0 + 1,
        pair.1 + 1
    )]
    OutsideAdmissibleRange {
        pair: (usize, usize),
        target: f64,
        min: f64,
        max: f64,
    },

    #[error("infeasible target: no convex combination of extreme correlation matrices matches it (phase-1 objective {objective:e}, largest residual {residual:e} in constraint row {row})")]
    Infeasible {
        objective: f64,
        row: usize,
        residual: f64,
    },

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for the two calibration infeasibility variants.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::OutsideAdmissibleRange { .. } | Error::Infeasible { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
