use std::path::PathBuf;

use thiserror::Error;

use crate::model::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent; `field` is a dotted path.
    #[error("invalid configuration at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    /// A caller handed a conditioning state that the requested label does not apply to.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("joint state space has {count} states, above the cap of {cap}")]
    Size { count: usize, cap: usize },

    #[error("chain has {} recurrent classes (representatives: {})", .0.len(), .0.join("; "))]
    MultipleRecurrentClasses(Vec<String>),

    #[error("numerical failure in {equation}")]
    Numerical { equation: String },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{}: {source}", .path.display())]
    File { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { field: field.into(), reason: reason.into() }
    }

    /// Attaches the path to a failed file operation.
    pub fn file(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Error::File { path, source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
