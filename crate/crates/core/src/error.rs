use thiserror::Error;

/// Every failure the library can report.
///
/// Learner failures that the algorithms themselves define (the search ran
/// off the grid, no histogram bin survived, ...) are ordinary variants here;
/// the harness records them per trial instead of aborting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Laplace scale must be finite and positive, got {0}")]
    InvalidScale(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset value {value} at index {index} is not a finite nonnegative real")]
    InvalidData { index: usize, value: f64 },
    #[error("budget fractions must be positive and sum to 1, got sum {0}")]
    BadSplit(f64),
    #[error("budget `{0}` has already been split or spent")]
    BudgetExhausted(String),
    #[error("invalid privacy budget (epsilon={epsilon}, delta={delta})")]
    InvalidBudget { epsilon: f64, delta: f64 },
    #[error("mechanism requires pure DP but budget carries delta={0}")]
    RequiresPureDp(f64),
    #[error("mechanism requires delta > 0")]
    RequiresApproxDp,
    #[error("rate must be finite and positive, got {0}")]
    InvalidRate(f64),
    #[error("rate bounds must satisfy 0 < lambda_min < lambda_max, got [{0}, {1}]")]
    InvalidBounds(f64, f64),
    #[error("ratio must be at least 1, got {0}")]
    InvalidRatio(f64),
    #[error("Pareto shape/scale must be finite and positive, got {0}")]
    InvalidShape(f64),
    #[error("cannot draw an empty sample")]
    EmptyRequest,
    #[error("{name}={value} is outside the supported regime {regime}")]
    OutOfRegime {
        name: &'static str,
        value: f64,
        regime: &'static str,
    },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("noisy clipped mean {0} is not positive")]
    NonpositiveMean(f64),
    #[error("private range estimation exhausted its grid")]
    RangeEstimationFailed,
    #[error("binary search over quantile checkpoints found no accepted point")]
    SearchExhausted,
    #[error("coarse estimate failed")]
    CoarseFailed,
    #[error("no histogram bin survived the stability threshold")]
    NoBinSurvived,
    #[error("selected histogram bin yields bounds outside the representable range")]
    BoundsOverflow,
    #[error("no sample at or above the tail pivot {0}")]
    EmptyTail(f64),
    #[error("value {value} lies below the known Pareto scale {scale}")]
    ScaleViolation { value: f64, scale: f64 },
    #[error("bounds ratio must exceed 1")]
    DegenerateBounds,
    #[error("missing input `{0}` for this calculator")]
    IncompleteInputs(&'static str),
    #[error("regime violation: {0}")]
    RegimeViolation(String),
    #[error("input error on line {line}: {message}")]
    Input { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable short name used in trial records and reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidScale(_) => "InvalidScale",
            Error::EmptyDataset => "EmptyDataset",
            Error::InvalidData { .. } => "InvalidData",
            Error::BadSplit(_) => "BadSplit",
            Error::BudgetExhausted(_) => "BudgetExhausted",
            Error::InvalidBudget { .. } => "InvalidBudget",
            Error::RequiresPureDp(_) => "RequiresPureDp",
            Error::RequiresApproxDp => "RequiresApproxDp",
            Error::InvalidRate(_) => "InvalidRate",
            Error::InvalidBounds(..) => "InvalidBounds",
            Error::InvalidRatio(_) => "InvalidRatio",
            Error::InvalidShape(_) => "InvalidShape",
            Error::EmptyRequest => "EmptyRequest",
            Error::OutOfRegime { .. } => "OutOfRegime",
            Error::TooFewSamples(_) => "TooFewSamples",
            Error::NonpositiveMean(_) => "NonpositiveMean",
            Error::RangeEstimationFailed => "RangeEstimationFailed",
            Error::SearchExhausted => "SearchExhausted",
            Error::CoarseFailed => "CoarseFailed",
            Error::NoBinSurvived => "NoBinSurvived",
            Error::BoundsOverflow => "BoundsOverflow",
            Error::EmptyTail(_) => "EmptyTail",
            Error::ScaleViolation { .. } => "ScaleViolation",
            Error::DegenerateBounds => "DegenerateBounds",
            Error::IncompleteInputs(_) => "IncompleteInputs",
            Error::RegimeViolation(_) => "RegimeViolation",
            Error::Input { .. } => "InputError",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
