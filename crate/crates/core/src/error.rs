use thiserror::Error;

use crate::domain::SlotName;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("malformed value `{value}` for slot {slot}")]
    MalformedValue { slot: SlotName, value: String },
    #[error("invalid goal: {0}")]
    InvalidGoal(String),
    #[error("invalid act: {0}")]
    InvalidAct(String),
    #[error("parse error at {position}: {reason}")]
    Parse { position: usize, reason: String },
    #[error("unknown name `{0}`")]
    UnknownName(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("slot {0} is not a query constraint of this subtask")]
    UnknownSlot(SlotName),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("invalid knowledge-base parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QnetError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("replay buffer is empty")]
    EmptyBuffer,
    #[error("empty batch")]
    EmptyBatch,
    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),
}

/// Errors from the agents, simulator and training harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Qnet(#[from] QnetError),
    #[error("simulator stepped after the dialogue ended")]
    SteppedAfterDone,
    #[error("a subtask segment is already open")]
    SegmentAlreadyOpen,
    #[error("no subtask segment is open")]
    NoOpenSegment,
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("invalid count: {0}")]
    InvalidCount(&'static str),
    #[error("dialogue loop ran past the turn limit ({0} agent turns)")]
    TurnLimitBug(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
