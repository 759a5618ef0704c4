use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("column `{column}` not found in {path}")]
    MissingColumn { path: PathBuf, column: String },

    #[error("unsupported delimiter {0:?}; expected ',' or '\\t'")]
    BadDelimiter(char),

    #[error("fewer than 3 valid rows ({found} found)")]
    TooFewPoints { found: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate range on the {axis} axis (all values equal)")]
    DegenerateRange { axis: char },

    #[error("singular covariance (determinant {det:e}); points are collinear or coincident")]
    SingularCovariance { det: f64 },

    #[error("zero variance on the {axis} axis")]
    ZeroVariance { axis: char },

    #[error("point ({x}, {y}) lies outside the histogram rectangle")]
    OutsideRect { x: f64, y: f64 },

    #[error("histograms are defined on different grids")]
    GridMismatch,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("density thresholds are not strictly ascending at level {index}")]
    DegenerateLevels { index: usize },

    #[error("every annulus is empty in the sprinkle rectangle")]
    EmptyAnnuli,

    #[error("transport solver failed: {0}")]
    Solver(String),
}

/// Coarse error classes, used by the command line for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Csv { .. }
            | Error::MissingColumn { .. }
            | Error::BadDelimiter(_)
            | Error::TooFewPoints { .. }
            | Error::NonFinite { .. }
            | Error::InvalidArgument(_)
            | Error::OutsideRect { .. }
            | Error::GridMismatch
            | Error::LengthMismatch(..) => ErrorKind::Input,
            Error::DegenerateRange { .. }
            | Error::SingularCovariance { .. }
            | Error::ZeroVariance { .. }
            | Error::DegenerateLevels { .. }
            | Error::EmptyAnnuli
            | Error::Solver(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
