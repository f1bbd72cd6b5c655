use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-domain input (unknown point, negative argument, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// The dyadic scale violates `96 kappa^6 eta <= 1` and no backend permits it.
    #[error("scale constraint violated: 96 * kappa^6 * eta = {product} > 1")]
    Constraint { product: f64 },

    #[error("dyadic construction failed after {attempts} attempts: {violation}")]
    ConstructionFailed { attempts: usize, violation: String },

    #[error(
        "no covering cube at level {level} for ball centered at {center} with radius {radius}"
    )]
    Lookup {
        center: usize,
        radius: f64,
        level: i32,
    },

    #[error("problem size {n} exceeds the configured cap {cap}")]
    Size { n: usize, cap: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A pipeline failure tagged with the sweep instance it came from.
    #[error("instance {id}: {source}")]
    Instance { id: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// The underlying error with instance tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Instance { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn at(id: &str) -> impl FnOnce(Error) -> Error + '_ {
        move |e| Error::Instance {
            id: id.to_owned(),
            source: Box::new(e),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
