use thiserror::Error;

use crate::types::Indication;

/// Errors produced by the responsibility workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The human always takes the same action, so `H(X) = 0`.
    #[error("degenerate human distribution: H(X) = 0, responsibility is undefined")]
    DegenerateHumanDistribution,

    #[error("no discrimination: d' = 0 leaves the cutoff undefined")]
    NoDiscrimination,

    #[error("impossible indication: {0} has probability zero")]
    ImpossibleIndication(Indication),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("line {line}: {kind}")]
    Log { line: usize, kind: LogErrorKind },

    #[error("degenerate normalization: all values are equal")]
    DegenerateNormalization,

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("condition mismatch: {0}")]
    ConditionMismatch(String),

    #[error("missing policy for condition {0}")]
    MissingPolicy(String),

    #[error("i/o: {0}")]
    Io(String),
}

/// What went wrong on a specific line of a trial or questionnaire log.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogErrorKind {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("payoff {found} inconsistent with {state}/{response} (expected {expected})")]
    PayoffMismatch {
        state: String,
        response: String,
        found: i64,
        expected: f64,
    },

    #[error("duplicate trial_index {trial_index} in session {session_id}, condition {condition_id}")]
    DuplicateTrial {
        session_id: String,
        condition_id: String,
        trial_index: u64,
    },
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
