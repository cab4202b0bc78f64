use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{split} split missing: {path}")]
    MissingSplit { split: &'static str, path: PathBuf },

    #[error("length mismatch: {left} scores vs {right} labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("score at position {0} is NaN")]
    NanScore(usize),

    #[error("cannot rank an empty score list")]
    EmptyScores,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("rank pair ({i}, {j}) out of range for a list of {len}")]
    RankOutOfRange { i: usize, j: usize, len: usize },

    #[error("list of length {len} exceeds the brute-force bound {bound}")]
    OracleBound { len: usize, bound: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("model version mismatch: found {found:?}, expected {expected:?}")]
    VersionMismatch { found: String, expected: String },

    #[error("model format error in tree {tree}: {message}")]
    TreeFormat { tree: usize, message: String },

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
