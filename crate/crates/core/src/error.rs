use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Unknown model, scheme or kernel name, or an invalid rule parameter.
    #[error("configuration error: {0}")]
    Config(String),

    /// The limit law needs f(t0) > 0 and f'(t0) < 0.
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("need at least {required} bootstrap replicates, got {got}")]
    TooFewReplicates { required: usize, got: usize },

    /// A simulated path whose majorant carries no information (all values equal).
    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
