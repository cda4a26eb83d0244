use thiserror::Error;

use crate::geometry::{Coord, Timestamp};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error: {0}")]
pub struct ParseError(pub String);

impl ParseError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("distance must be odd and at least 3, got {0}")]
    InvalidDistance(usize),
    #[error("invalid circuit parameters: {0}")]
    InvalidParameters(String),
    #[error("noise strength must satisfy 0 <= p < 0.5, got {0}")]
    InvalidProbability(f64),
    #[error("qubit {coord} targeted twice in layer {timestamp}")]
    DoubleTarget { coord: Coord, timestamp: Timestamp },
    #[error("detector construction failed: {0}")]
    Detector(String),
    #[error("fault {fault} cannot be decomposed into retained edges")]
    Undecomposable { fault: String },
    #[error("matching failed: {0}")]
    Matching(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("rearrangement planning failed: {0}")]
    Plan(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
