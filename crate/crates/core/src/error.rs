use std::path::PathBuf;

use thiserror::Error;

use crate::session::Phase;

/// Which labeled group a scoring or training step found empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSide {
    Relevant,
    Irrelevant,
    Both,
}

impl std::fmt::Display for LabelSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelSide::Relevant => f.write_str("relevant"),
            LabelSide::Irrelevant => f.write_str("irrelevant"),
            LabelSide::Both => f.write_str("relevant and irrelevant"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to load {}: {reason}", path.display())]
    Load { path: PathBuf, reason: String },

    #[error("duplicate item ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("feature extraction failed for item {id}: {reason}")]
    Extraction { id: String, reason: String },

    #[error("feature extraction failed for {} item(s): {}", .0.len(), .0.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>().join(", "))]
    BatchExtraction(Vec<(String, String)>),

    #[error("descriptor {descriptor} produced a non-finite value for item {id}")]
    NonFinite { id: String, descriptor: String },

    #[error("stale feature cache {}: {reason}", path.display())]
    StaleCache { path: PathBuf, reason: String },

    #[error("insufficient labels: no {0} items labeled yet, label more items before advancing")]
    InsufficientLabels(LabelSide),

    #[error("item {0} cannot be classified: no labeled cell on its path")]
    Unclassifiable(String),

    #[error("unknown item ids: {}", .0.join(", "))]
    UnknownIds(Vec<String>),

    #[error("target {target}: need {needed} items per side, found {positives} target and {negatives} non-target items")]
    ClassCounts {
        target: String,
        needed: usize,
        positives: usize,
        negatives: usize,
    },

    #[error("session file version {found} is not supported (expected {expected}); migrate the file first")]
    SessionVersion { found: u32, expected: u32 },

    #[error("failed to parse session file: {0}")]
    SessionParse(String),

    #[error("illegal phase transition {from:?} -> {to:?}")]
    PhaseTransition { from: Phase, to: Phase },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
