use thiserror::Error;

use crate::network::CellId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the simulation core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The horizontal plane cuts the mainlobe cone itself, so no
    /// beyond-conic-section range exists.
    #[error("target height {target_height} m is below the antenna height {antenna_height} m")]
    BelowCone { antenna_height: f64, target_height: f64 },

    #[error("unknown cell {0}")]
    UnknownCell(CellId),

    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    #[error("pattern has no -3 dB crossing within 90 degrees of its peak")]
    Unmeasurable,

    #[error("no audible cell at the start of the flight")]
    CannotAttach,

    #[error("malformed measurement report: {0}")]
    MalformedReport(String),

    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Scenario file problems, reported with enough location detail to fix
/// the file by hand.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Semantic { path: String, message: String },
}

impl ScenarioError {
    pub(crate) fn semantic(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Semantic {
            path: path.into(),
            message: message.into(),
        }
    }
}
