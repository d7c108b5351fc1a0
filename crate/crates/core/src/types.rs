//! Binary alphabets shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

/// The world state on a trial: a defective item (signal) or an intact one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrueState {
    Signal,
    Noise,
}

/// The system's classification, shown to the human as an indicator color.
///
/// Red means the system classified the item as a signal (an alarm), green
/// means it classified it as noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Indication {
    Red,
    Green,
}

/// The human's final action. Rejecting an item declares it a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    Reject,
    Accept,
}

impl Indication {
    pub const ALL: [Indication; 2] = [Indication::Red, Indication::Green];

    /// Column index in a [`crate::JointPmf2x2`].
    pub fn index(self) -> usize {
        match self {
            Indication::Red => 0,
            Indication::Green => 1,
        }
    }
}

impl Response {
    pub const ALL: [Response; 2] = [Response::Reject, Response::Accept];

    /// Row index in a [`crate::JointPmf2x2`].
    pub fn index(self) -> usize {
        match self {
            Response::Reject => 0,
            Response::Accept => 1,
        }
    }

    /// Whether this response is correct for the given state.
    pub fn is_correct(self, state: TrueState) -> bool {
        matches!(
            (self, state),
            (Response::Reject, TrueState::Signal) | (Response::Accept, TrueState::Noise)
        )
    }
}

impl TrueState {
    pub const ALL: [TrueState; 2] = [TrueState::Signal, TrueState::Noise];
}

impl fmt::Display for TrueState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrueState::Signal => "signal",
            TrueState::Noise => "noise",
        })
    }
}

impl fmt::Display for Indication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Indication::Red => "red",
            Indication::Green => "green",
        })
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Response::Reject => "reject",
            Response::Accept => "accept",
        })
    }
}
