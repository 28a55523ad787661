use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Out-of-range or otherwise invalid parameter.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Operation not defined for this grid kind (e.g. blurring class ids).
    #[error("grid kind error: {0}")]
    Kind(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("GeoJSON error in feature {feature}: {message}")]
    GeoJson { feature: usize, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("class mapping error: unmapped class ids {0:?}")]
    Mapping(Vec<u32>),

    #[error("format error: {0}")]
    Format(String),

    #[error("degenerate range: {0}")]
    DegenerateRange(String),

    #[error("degenerate vector: {0}")]
    DegenerateVector(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
