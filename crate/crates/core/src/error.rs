use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
///
/// Messages begin with the variant name so that command-line callers can
/// match on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("BadWeights: {0}")]
    BadWeights(String),
    #[error("DuplicateAtoms: atoms {0} and {1} coincide")]
    DuplicateAtoms(usize, usize),
    #[error("MixedFamilies: all atoms must share one kernel family")]
    MixedFamilies,
    #[error("InvalidParam: {0}")]
    InvalidParam(String),
    #[error("IndexMismatch: expected dimension {expected}, got {got}")]
    IndexMismatch { expected: usize, got: usize },
    #[error("OrderTooHigh: order {0} exceeds the supported maximum of {1}")]
    OrderTooHigh(usize, usize),
    #[error("PoleAtZeroShape: shape parameter must be nonzero here")]
    PoleAtZeroShape,
    #[error("NotS0: {0}")]
    NotS0(String),
    #[error("SupportTooLarge: {0} atoms (limit {1})")]
    SupportTooLarge(usize, usize),
    #[error("BadParams: {0}")]
    BadParams(String),
    #[error("LabelMismatch: expected {expected}, got {got}")]
    LabelMismatch { expected: String, got: String },
    #[error("NotApplicable: {0}")]
    NotApplicable(String),
    #[error("GridTooCoarse: grid covers mass {0:.3e} short of 1")]
    GridTooCoarse(f64),
    #[error("NoConvergedStart: no start reached the stall tolerance")]
    NoConvergedStart,
    #[error("DegenerateRegression: {0}")]
    DegenerateRegression(String),
    #[error("QuadratureFailure: {0}")]
    QuadratureFailure(String),
    #[error("SlopeRefused: predicted exponent {0} is too small to estimate at desk scale")]
    SlopeRefused(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
