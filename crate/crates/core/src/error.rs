use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A run configuration (grid, preset, policy) is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A ray march never left the superlevel set before the radius cap.
    #[error("ray in direction ({:.6}, {:.6}) does not bracket level {lambda:e} within radius {cap:e}", direction[0], direction[1])]
    NonBracketing {
        direction: [f64; 2],
        lambda: f64,
        cap: f64,
    },

    #[error("unsupported dimension {0} (only n = 1 and n = 2 are supported)")]
    Dimension(usize),

    #[error("malformed csv at line {line}: {message}")]
    Csv { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
