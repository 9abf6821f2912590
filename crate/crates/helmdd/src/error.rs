//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad argument to a constructor or operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Mesh construction or consistency failure.
    #[error("mesh error: {0}")]
    Mesh(String),

    /// A matrix that was expected to be invertible is (numerically) singular.
    #[error("singular matrix in {context}{}", subdomain.map(|s| format!(" (subdomain {s})")).unwrap_or_default())]
    Singular {
        context: String,
        subdomain: Option<usize>,
    },

    /// A local subdomain solve failed; carries the subdomain id and the
    /// local matrix kind so the failure can be traced back.
    #[error("local solve failed on subdomain {subdomain} ({kind}): {source}")]
    LocalSolve {
        subdomain: usize,
        kind: String,
        #[source]
        source: Box<Error>,
    },

    /// Eigensolver failure (non-convergence or residual out of contract).
    #[error("eigensolver failure: {context}{}", subdomain.map(|s| format!(" (subdomain {s})")).unwrap_or_default())]
    Eig {
        context: String,
        subdomain: Option<usize>,
    },

    /// Fine space is not a refinement of the coarse space.
    #[error("spaces are not nested: {0}")]
    NotNested(String),

    /// Configuration rejected at validation time.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Attach a subdomain id to singular/eigensolver errors as they
    /// propagate out of per-subdomain work.
    pub fn in_subdomain(self, s: usize) -> Self {
        match self {
            Error::Singular { context, .. } => Error::Singular {
                context,
                subdomain: Some(s),
            },
            Error::Eig { context, .. } => Error::Eig {
                context,
                subdomain: Some(s),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
