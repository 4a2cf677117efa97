use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid run parameters (non-square element counts, nonpositive powers, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed; `dump` carries the offending instance so the
    /// failure can be reproduced offline.
    #[error("numerical error: {message}\ninstance dump:\n{dump}")]
    Numerical { message: String, dump: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
