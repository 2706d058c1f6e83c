use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("axis set is empty")]
    EmptyAxes,
    #[error("too many axes ({0}); at most 64 are supported")]
    TooManyAxes(usize),
    #[error("duplicate axis `{0}`")]
    DuplicateAxis(String),
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("unknown space `{0}` (expected spider:k, book:k or t4)")]
    UnknownSpace(String),
    #[error("coordinate {value} on axis `{axis}` is not a finite nonnegative number")]
    InvalidCoordinate { axis: String, value: f64 },
    #[error("active axes {0} do not form a face of the complex")]
    NotAFace(String),
    #[error("point belongs to a different complex")]
    ForeignPoint,
    #[error("complex is not flag, so the orthant space is not CAT(0)")]
    NotFlag,
    #[error("operation requires a spider (one-dimensional complex)")]
    NotSpider,
    #[error("invalid integration domain: {0}")]
    InvalidDomain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature did not converge: estimate {estimate}, error estimate {error}")]
    Quadrature { estimate: f64, error: f64 },
    #[error("malformed support pair: {0}")]
    MalformedSupport(String),
    #[error("sample is empty")]
    EmptySample,
    #[error(
        "log-concave MLE does not exist: the sample's convex hull has measure zero \
         and the likelihood is unbounded"
    )]
    LcmleNonexistent,
    #[error("log-concave MLE did not converge after {0} iterations")]
    LcmleNotConverged(usize),
    #[error("unsupported density for this operation: {0}")]
    UnsupportedDensity(String),
    #[error("invalid concave function: {0}")]
    InvalidConcaveFn(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyAxes
            | Error::TooManyAxes(_)
            | Error::DuplicateAxis(_)
            | Error::UnknownAxis(_)
            | Error::UnknownSpace(_) => "invalid-space",
            Error::InvalidCoordinate { .. } | Error::NotAFace(_) | Error::ForeignPoint => "invalid-point",
            Error::NotFlag => "not-cat0",
            Error::NotSpider => "not-spider",
            Error::InvalidDomain(_) | Error::InvalidParameter(_) => "invalid-parameter",
            Error::Quadrature { .. } => "quadrature-nonconvergent",
            Error::MalformedSupport(_) => "malformed-support",
            Error::EmptySample => "empty-sample",
            Error::LcmleNonexistent => "lcmle-nonexistent",
            Error::LcmleNotConverged(_) => "lcmle-nonconvergent",
            Error::UnsupportedDensity(_) => "unsupported-density",
            Error::InvalidConcaveFn(_) => "invalid-concave-fn",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}
