use thiserror::Error;

use crate::dist::DistError;

/// Errors raised by the world model, history enumeration, and inference layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid world: {0}")]
    InvalidWorld(String),

    #[error("invalid script: {0}")]
    InvalidScript(String),

    #[error("no transition rule covers state {state} under joint action {action}")]
    NoMatchingRule { state: String, action: String },

    #[error("transition rules {rules:?} all match state {state}")]
    AmbiguousTransition { rules: Vec<String>, state: String },

    #[error("rule `{rule}` produced an invalid outcome: {reason}")]
    InvalidOutcome { rule: String, reason: String },

    #[error("history enumeration exceeded the cap of {cap} histories (reached {reached})")]
    ExplosionGuard { cap: usize, reached: usize },

    #[error("no history is consistent with the observations of `{owner}` ({steps} steps)")]
    ZeroPosterior { owner: String, steps: usize },

    #[error("utterance `{utterance}` has no denotation")]
    UndefinedSemantics { utterance: String },

    #[error("{observed} observations exceed horizon {horizon}")]
    ObservationTooLong { observed: usize, horizon: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Dist(#[from] DistError),
}
