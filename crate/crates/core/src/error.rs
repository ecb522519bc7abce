use std::path::PathBuf;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad configuration or input that can be rejected before any work.
    Validation,
    /// Malformed or inconsistent data encountered while working.
    Data,
    /// A numerical procedure could not produce a meaningful answer.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("parse error: invalid token {token:?} at line {line}")]
    ParseToken { line: usize, token: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("empty group: {0}")]
    EmptyGroup(String),
    #[error("grouping error: {0}")]
    Grouping(String),
    #[error("latitude {lat} is too close to a pole for planar displacement")]
    PolarGuard { lat: f64 },
    #[error("no admin polygon for admin_id {0:?}")]
    MissingAdmin(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("could not place displaced point inside admin unit {0:?}")]
    Constraint(String),

    #[error("point (lat {lat}, lon {lon}) is outside the grid extent")]
    OutOfExtent { lat: f64, lon: f64 },
    #[error("no data at cells {cells:?}")]
    NoData { cells: Vec<(usize, usize)> },
    #[error("day {day}: {source}")]
    Day {
        day: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("geometry {geometry} cannot be extracted with method {method}")]
    MethodMismatch { geometry: &'static str, method: &'static str },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unknown season region {region:?} for calendar {country:?}")]
    UnknownRegion { country: String, region: String },

    #[error("collinear design columns: {}", columns.join(", "))]
    Collinearity { columns: Vec<String> },
    #[error("need at least 2 clusters, got {0}")]
    Cluster(usize),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("empty subset")]
    EmptySubset,
    #[error("lattice error: {0}")]
    Lattice(String),
    #[error("journal error: {0}")]
    Journal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Invalid(_) | Error::Lattice(_) | Error::MissingAdmin(_) => ErrorClass::Validation,
            Error::Collinearity { .. }
            | Error::Cluster(_)
            | Error::DegenerateFit(_)
            | Error::EmptySubset => ErrorClass::Numeric,
            Error::Day { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
