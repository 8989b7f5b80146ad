//! Exact inference for unintended and intended offense in partially
//! observable multi-agent interactions.
//!
//! A [`world::WorldModel`] describes agents, actions and stochastic
//! transitions with per-agent observations. Histories are enumerated up to
//! a horizon, agents' beliefs are distributions over those histories, and
//! speakers and listeners reason about one another's beliefs. The
//! [`scenario`] module compiles declarative Curtains-style scenarios and
//! [`report`] summarizes them.

pub mod agents;
pub mod belief;
pub mod dist;
pub mod error;
pub mod fixtures;
pub mod history;
pub mod oracle;
pub mod presets;
pub mod report;
pub mod scenario;
pub mod semantics;
pub mod world;

pub use agents::{
    luce_choice, speaker_reward, ExpectedDeltas, Interaction, JointPosterior, LiteralSpeaker,
    RationalSpeaker, SpeakerHypothesis, SpeakerParams, UtteranceProducer,
};
pub use belief::{
    condition, marginal, nested_values, other_agent_belief, prior_belief, BeliefState, ExactMatch,
    ObservationModel, QueryVariable, StepRef,
};
pub use dist::{expectation, Dist, DistError};
pub use error::ModelError;
pub use history::{enumerate_histories, enumerate_histories_capped, History, HistorySet, Script};
pub use report::{
    compare_variants, prediction_profile, ModelSettings, PredictionProfile, Signature, VariantComparison,
};
pub use scenario::{build_world, parse_scenario, CompiledScenario, HistoryVariant, ScenarioSpec, SpecError};
pub use semantics::{evaluate_denotation, literal_utterance_likelihood, LiteralListener, UtteranceSemantics};
pub use world::{
    ActionId, ActionKind, AgentId, JointAction, JointObservation, Observation, State, VarId, WorldModel,
};

/// Any error the engine can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
