use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside an operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was invoked in a mode/state that forbids it.
    #[error("state error: {0}")]
    State(String),

    /// Missing or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Scenario validation failed; lists every violated invariant.
    #[error("invalid scenario:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    /// Scenario execution failed (unreachable waypoint, tick cap, ...).
    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
