use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state enumeration exceeded the cap of {cap} states")]
    CapExceeded { cap: usize },

    #[error("broken parent chain: state record {index} has no parent and is not the initial state")]
    BrokenChain { index: usize },

    #[error("maze generation: need {needed} free cells for teleports, only {available} available")]
    TeleportPlacement { needed: usize, available: usize },

    #[error("sokoban generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: malformed character {ch:?}")]
    MalformedCharacter { line: usize, ch: char },

    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),

    #[error("teleport digit {0} does not appear exactly twice")]
    UnpairedTeleport(char),

    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("feature tensor has {got} channels, model expects {expected}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("non-finite gradient component at index {index}")]
    NonFiniteGradient { index: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("missing heuristic value: sample has {expected} states, got {got} values")]
    MissingHeuristicValue { expected: usize, got: usize },

    #[error("state {index} of sample {sample:?} has no cost-to-go label")]
    UnlabeledState { sample: String, index: usize },

    #[error("search outcome has no plan")]
    UnsolvedOutcome,

    #[error("labeling budget of {budget} states exceeded")]
    LabelingBudgetExceeded { budget: usize },

    #[error("unsupported format version: {0:?}")]
    VersionMismatch(String),

    #[error("line {line}: malformed record: {msg}")]
    MalformedRecord { line: usize, msg: String },

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
