use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (bad index, length mismatch...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration; `path` names the offending field, e.g. `array.n_modules`.
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A numerical operation could not produce a trustworthy result.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The Fresnel approximation is not applicable (|a| below the degeneracy floor).
    #[error("degenerate geometry: quadratic coefficient |a| = {0:e} below floor")]
    Degenerate(f64),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io { .. } => 2,
            Error::Domain(_) | Error::Numerical(_) | Error::Degenerate(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
