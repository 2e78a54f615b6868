//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration document failed to parse or referenced an unknown key.
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// A field value violates a scenario invariant.
    #[error("invalid `{name}`: {reason}")]
    Validation { name: String, reason: String },

    /// An argument is outside the mathematical domain of an operation.
    #[error("{op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// Direct-link SNR requested for a UAV declared blocked.
    #[error("UAV {0} is blocked and has no direct link")]
    NoDirectLink(usize),

    /// A cascade with zero quality cannot support the closed-form split.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// An internal structural contract was broken by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A benchmark scheme was invoked on a scenario it does not apply to.
    #[error("scheme `{scheme}` not applicable: {reason}")]
    SchemeInapplicable { scheme: String, reason: String },

    /// Every sweep point of a campaign was infeasible.
    #[error("campaign infeasible at every sweep point")]
    InfeasibleEverywhere,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            op,
            reason: reason.into(),
        }
    }

    pub fn validation(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
