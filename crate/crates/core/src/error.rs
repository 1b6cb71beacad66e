use thiserror::Error;

/// Errors raised by the scoring, fitting and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("conditioning on a null event: survival at {0} is zero")]
    NullEvent(f64),

    #[error("infinite mean: shape {0} must be below 1")]
    InfiniteMean(f64),

    #[error("no closed-form CRPS for family `{0}`")]
    UnsupportedFamily(&'static str),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("quadrature failed to reach tolerance (estimate {value}, error {abs_err})")]
    Quadrature { value: f64, abs_err: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("threshold {w} lies below the fitting threshold {u0}")]
    BelowThreshold { w: f64, u0: f64 },

    #[error("shifted scale is not positive: threshold {0} is beyond the fitted endpoint")]
    EndpointExceeded(f64),

    #[error("a = {0} is the minimiser of the expected score; no distinct counterpart exists")]
    UniquePoint(f64),

    #[error("a = {a} lies outside the ambiguity cup (0, {a0})")]
    OutsideCup { a: f64, a0: f64 },

    #[error("tail splice is invalid: {0}")]
    Construction(String),

    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o: {0}")]
    Io(String),

    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_record(self, index: usize) -> Self {
        Error::Record {
            index,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
