use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image has zero width or height")]
    EmptyImage,

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },

    #[error("failed to decode image {path}: {message}")]
    ImageDecode { path: String, message: String },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("only {found} background pixels outside the face region (need {required})")]
    NoBackgroundReference { found: usize, required: usize },

    #[error("skin mask has {found} pixels (need {required})")]
    InsufficientSkinArea { found: usize, required: usize },

    #[error("{found} pixels supplied for {required} clusters")]
    InsufficientPixels { found: usize, required: usize },

    #[error("no face detected")]
    NoFaceDetected,

    #[error("invalid landmarks: {0}")]
    InvalidLandmarks(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("palette {palette}: {message}")]
    InvalidPalette { palette: String, message: String },

    #[error("bounding box has zero area")]
    ZeroAreaBox,

    #[error("contingency table has an all-zero {axis} at index {index}")]
    ZeroMarginal { axis: &'static str, index: usize },

    #[error("sample is empty")]
    EmptySample,

    #[error("each sample needs at least {0} observations")]
    SampleTooSmall(usize),

    #[error("both samples have zero variance but different means")]
    DegenerateVariance,

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("table {table}: no summary grouped by {grouping}")]
    MissingGrouping { table: String, grouping: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Error::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub(crate) fn parse(what: impl Into<String>, e: impl std::fmt::Display) -> Self {
        Error::Parse { what: what.into(), message: e.to_string() }
    }
}
