use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("symbol {0:?} is not in the alphabet")]
    UnknownSymbol(char),
    #[error("state index {index} out of range for {num_states} states")]
    IndexOutOfRange { index: usize, num_states: usize },
    #[error("state space of {num_states} states exceeds the dense cap of {cap}")]
    DenseCapExceeded { num_states: u128, cap: usize },
    #[error("sequence length {found} does not match state space length {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("state spaces differ: {0}")]
    SpaceMismatch(String),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite rate encountered at state {0}")]
    NonFiniteRate(String),
    #[error("trajectory exceeded {jumps} jumps at state {state} (exit rate {exit_rate})")]
    RunawayTrajectory {
        jumps: usize,
        state: String,
        exit_rate: f64,
    },
    #[error("no candidate mutations with positive rate at state {0}")]
    NoCandidates(String),
    #[error("loss diverged at epoch {epoch} (loss {loss}, parameter norm {param_norm})")]
    Divergence {
        epoch: usize,
        loss: f64,
        param_norm: f64,
    },
    #[error("baseline assigns zero probability to {0}")]
    ZeroProbability(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("oracle failed at {state}: {reason}")]
    Oracle { state: String, reason: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidAlphabet(_)
                | Error::UnknownSymbol(_)
                | Error::IndexOutOfRange { .. }
                | Error::LengthMismatch { .. }
                | Error::SpaceMismatch(_)
                | Error::InvalidArgument(_)
                | Error::MalformedTree(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
