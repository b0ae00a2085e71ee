use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("non-finite value {value} at cell {cell}")]
    NonFiniteValue { cell: usize, value: f64 },

    #[error("expected {expected} values, found {found}")]
    ValueCount { expected: usize, found: usize },

    #[error("crack face {0} is not an interior face")]
    CrackNotInterior(String),

    #[error("duplicate crack face {0}")]
    DuplicateCrack(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported file version {0}")]
    UnsupportedVersion(u32),

    #[error(
        "profile is not weakly vanishing: window centered at {center} carries {mass} > eps = {eps}"
    )]
    NotWeaklyVanishing { center: f64, mass: f64, eps: f64 },

    #[error("bands of bubbles {lower} and {upper} overlap: {lower_top} > {upper_bottom}")]
    OverlappingBands {
        lower: usize,
        upper: usize,
        lower_top: f64,
        upper_bottom: f64,
    },

    #[error("datum mismatch: u != h at cell {cell} outside the reference domain")]
    DatumMismatch { cell: usize },

    #[error("operation requires dimension {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("index {index} out of range for axis {axis} (extent {extent})")]
    IndexOutOfRange {
        axis: usize,
        index: usize,
        extent: usize,
    },

    #[error("inconsistent parameters across sequence: {0}")]
    InconsistentParams(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
