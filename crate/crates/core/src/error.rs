use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid branching schedule: {0}")]
    Schedule(String),

    #[error("invalid level profile: {}", join_violations(.0))]
    InvalidProfile(Vec<Violation>),

    #[error("invalid Huffman sequence: {0}")]
    InvalidSequence(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("complex dominant root pair at modulus {modulus:.12} (re {re:.12}, im {im:.12})")]
    ComplexDominant { modulus: f64, re: f64, im: f64 },

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
