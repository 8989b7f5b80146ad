//! Declarative scenarios in the Curtains family and their compilation into
//! a world model.
//!
//! A listener may modify an object at step 0; a speaker arrives either
//! before the listener acts (and witnesses it) or after; at step 1 the
//! speaker comments on how the object looks to them. The look of a modified
//! object depends on the listener's ability, so a negative comment is
//! evidence of low ability for anyone who knows the listener modified it.
//!
//! Observation rules:
//! * every agent perceives its own action;
//! * an agent perceives another agent's non-movement action (modify, noop,
//!   utterance) iff both are at the object's location during the step; a
//!   speaker who enters before the step's events counts as present;
//! * agent locations after each step are public, so entry is observed by all;
//! * the speaker perceives their private view of the object (`perception`)
//!   whenever they are at its location after a step;
//! * nobody perceives the listener's ability or the modified flag directly.
//!
//! Whether the speaker arrives before or after the listener acts is common
//! ground: it is pinned in the shared prior rather than observed, so the
//! listener's observation sequence is identical in both variants.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{SpeakerHypothesis, SpeakerParams};
use crate::belief::{QueryVariable, StepRef};
use crate::error::ModelError;
use crate::history::Script;
use crate::semantics::UtteranceSemantics;
use crate::world::{
    ActionId, ActionKind, AgentId, JointAction, JointObservation, Observation, Outcome, State,
    TransitionRule, VarId, WorldModel,
};

/// Step at which the speaker comments.
pub const UTTERANCE_STEP: usize = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("unknown key `{path}`")]
    UnknownKey { path: String },
    #[error("scenario is not valid TOML: {0}")]
    Syntax(String),
}

impl SpecError {
    fn invalid(path: &str, message: impl Into<String>) -> Self {
        SpecError::Invalid {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observability {
    /// Percepts follow co-location.
    CoLocated,
    /// Every agent receives every agent's percepts.
    Public,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arrival {
    Before,
    After,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtteranceChoice {
    Good,
    Bad,
    Nothing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Look {
    Good,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryVariant {
    Shared,
    Diverging,
}

impl HistoryVariant {
    pub const ALL: [HistoryVariant; 2] = [HistoryVariant::Shared, HistoryVariant::Diverging];

    pub fn as_str(self) -> &'static str {
        match self {
            HistoryVariant::Shared => "shared",
            HistoryVariant::Diverging => "diverging",
        }
    }
}

impl fmt::Display for HistoryVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ListenerSpec {
    pub label: String,
    /// How the modify action reads in reports.
    pub action_label: String,
    pub locations: Vec<String>,
    pub start: String,
}

impl Default for ListenerSpec {
    fn default() -> Self {
        ListenerSpec {
            label: "Paul".into(),
            action_label: "put up new curtains".into(),
            locations: vec!["inside".into(), "outside".into()],
            start: "inside".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeakerSpec {
    pub label: String,
    pub locations: Vec<String>,
    pub start: String,
}

impl Default for SpeakerSpec {
    fn default() -> Self {
        SpeakerSpec {
            label: "Lisa".into(),
            locations: vec!["inside".into(), "outside".into()],
            start: "outside".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentsSpec {
    pub listener: ListenerSpec,
    pub speaker: SpeakerSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectSpec {
    pub label: String,
    pub location: String,
}

impl Default for ObjectSpec {
    fn default() -> Self {
        ObjectSpec {
            label: "curtains".into(),
            location: "inside".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorsSpec {
    pub ability_high: f64,
    pub perception_good: f64,
    pub modify: f64,
    /// Prior that the speaker arrives before the listener acts; only used
    /// when the arrival is not pinned.
    pub speaker_arrives_before: f64,
    /// Probability a modified object looks good to the speaker, by ability.
    pub modified_looks_good_if_high: f64,
    pub modified_looks_good_if_low: f64,
}

impl Default for PriorsSpec {
    fn default() -> Self {
        PriorsSpec {
            ability_high: 0.90,
            perception_good: 0.50,
            modify: 0.05,
            speaker_arrives_before: 0.5,
            modified_looks_good_if_high: 1.0,
            modified_looks_good_if_low: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UtterancesSpec {
    pub good: String,
    pub bad: String,
    pub nothing: String,
}

impl Default for UtterancesSpec {
    fn default() -> Self {
        UtterancesSpec {
            good: "the curtains look good".into(),
            bad: "the curtains look bad".into(),
            nothing: "<nothing>".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeakerModelSpec {
    pub rationality: f64,
    pub theta_info: f64,
    pub theta_eval: f64,
}

impl Default for SpeakerModelSpec {
    fn default() -> Self {
        SpeakerModelSpec {
            rationality: 3.0,
            theta_info: 1.0,
            theta_eval: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypothesisSpec {
    pub name: String,
    pub theta_info: f64,
    pub theta_eval: f64,
    pub prior: f64,
}

impl Default for HypothesisSpec {
    fn default() -> Self {
        HypothesisSpec {
            name: "benign".into(),
            theta_info: 1.0,
            theta_eval: 0.0,
            prior: 0.9,
        }
    }
}

fn default_hypotheses() -> Vec<HypothesisSpec> {
    vec![
        HypothesisSpec::default(),
        HypothesisSpec {
            name: "harmful".into(),
            theta_info: 1.0,
            theta_eval: -1.0,
            prior: 0.1,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantSpec {
    pub speaker_arrives: Arrival,
    pub listener_modifies: bool,
    pub utterance: UtteranceChoice,
    /// What the speaker actually perceives in the actual history.
    pub speaker_perceives: Look,
}

impl Default for VariantSpec {
    fn default() -> Self {
        VariantSpec {
            speaker_arrives: Arrival::Before,
            listener_modifies: true,
            utterance: UtteranceChoice::Bad,
            speaker_perceives: Look::Bad,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantPresets {
    pub shared: VariantSpec,
    pub diverging: VariantSpec,
}

impl Default for VariantPresets {
    fn default() -> Self {
        VariantPresets {
            shared: VariantSpec::default(),
            diverging: VariantSpec {
                speaker_arrives: Arrival::After,
                ..VariantSpec::default()
            },
        }
    }
}

impl VariantPresets {
    pub fn get(&self, variant: HistoryVariant) -> &VariantSpec {
        match variant {
            HistoryVariant::Shared => &self.shared,
            HistoryVariant::Diverging => &self.diverging,
        }
    }
}

/// A complete Curtains-family scenario; `Default` is the canonical Curtains
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub name: String,
    pub epsilon: f64,
    pub horizon: usize,
    pub observability: Observability,
    pub agents: AgentsSpec,
    pub object: ObjectSpec,
    pub priors: PriorsSpec,
    pub utterances: UtterancesSpec,
    pub speaker_model: SpeakerModelSpec,
    pub hypotheses: Vec<HypothesisSpec>,
    pub variants: VariantPresets,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            name: "curtain".into(),
            epsilon: 0.05,
            horizon: 2,
            observability: Observability::CoLocated,
            agents: AgentsSpec::default(),
            object: ObjectSpec::default(),
            priors: PriorsSpec::default(),
            utterances: UtterancesSpec::default(),
            speaker_model: SpeakerModelSpec::default(),
            hypotheses: default_hypotheses(),
            variants: VariantPresets::default(),
        }
    }
}

impl ScenarioSpec {
    /// Canonical TOML form; `parse_scenario` of it yields an equal spec.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialize")
    }

    /// Dotted paths of every leaf value differing from the default spec.
    pub fn overrides(&self) -> Vec<String> {
        let mine = toml::Value::try_from(self).expect("serializable");
        let base = toml::Value::try_from(ScenarioSpec::default()).expect("serializable");
        let mut out = Vec::new();
        diff_values("", &mine, Some(&base), &mut out);
        out
    }
}

fn diff_values(path: &str, value: &toml::Value, base: Option<&toml::Value>, out: &mut Vec<String>) {
    match (value, base) {
        (toml::Value::Table(t), Some(toml::Value::Table(b))) => {
            for (key, v) in t {
                diff_values(&join(path, key), v, b.get(key), out);
            }
        }
        (v, Some(b)) if v == b => {}
        _ => out.push(path.to_string()),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Rejects keys the default document does not have.
fn check_keys(path: &str, raw: &toml::Value, schema: &toml::Value) -> Result<(), SpecError> {
    match (raw, schema) {
        (toml::Value::Table(t), toml::Value::Table(s)) => {
            for (key, v) in t {
                let sub = join(path, key);
                match s.get(key) {
                    Some(schema_value) => check_keys(&sub, v, schema_value)?,
                    None => return Err(SpecError::UnknownKey { path: sub }),
                }
            }
            Ok(())
        }
        (toml::Value::Array(items), toml::Value::Array(schema_items)) => {
            if let Some(element) = schema_items.first() {
                for (i, item) in items.iter().enumerate() {
                    check_keys(&format!("{path}[{i}]"), item, element)?;
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, SpecError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| SpecError::Syntax(e.to_string()))?;
    validate_spec(&table)
}

/// Strict-mode parse of a raw document: unknown keys are errors, missing
/// keys take Curtains defaults, and every value is range-checked.
pub fn validate_spec(raw: &toml::Table) -> Result<ScenarioSpec, SpecError> {
    let schema = toml::Value::try_from(ScenarioSpec::default()).expect("serializable");
    let raw_value = toml::Value::Table(raw.clone());
    check_keys("", &raw_value, &schema)?;
    let spec: ScenarioSpec = serde_path_to_error::deserialize(raw_value).map_err(|e| {
        let path = e.path().to_string();
        SpecError::invalid(&path, e.into_inner().to_string())
    })?;
    check_spec(&spec)?;
    Ok(spec)
}

fn probability(path: &str, p: f64) -> Result<(), SpecError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SpecError::invalid(path, format!("{p} is not a probability")))
    }
}

fn non_empty(path: &str, s: &str) -> Result<(), SpecError> {
    if s.trim().is_empty() {
        Err(SpecError::invalid(path, "must not be empty"))
    } else {
        Ok(())
    }
}

fn locations(path: &str, locs: &[String], start: &str, object: &str) -> Result<(), SpecError> {
    if locs.is_empty() {
        return Err(SpecError::invalid(&format!("{path}.locations"), "must not be empty"));
    }
    let unique: BTreeSet<&String> = locs.iter().collect();
    if unique.len() != locs.len() {
        return Err(SpecError::invalid(&format!("{path}.locations"), "values must be unique"));
    }
    if !locs.iter().any(|l| l == start) {
        return Err(SpecError::invalid(&format!("{path}.start"), format!("`{start}` is not a listed location")));
    }
    if !locs.iter().any(|l| l == object) {
        return Err(SpecError::invalid(
            &format!("{path}.locations"),
            format!("must include the object location `{object}`"),
        ));
    }
    Ok(())
}

/// Range and consistency checks on an already-typed spec.
pub fn check_spec(spec: &ScenarioSpec) -> Result<(), SpecError> {
    non_empty("name", &spec.name)?;
    if !(spec.epsilon > 0.0 && spec.epsilon < 0.5) {
        return Err(SpecError::invalid("epsilon", format!("{} is outside (0, 0.5)", spec.epsilon)));
    }
    for variant in HistoryVariant::ALL {
        if spec.horizon <= UTTERANCE_STEP {
            return Err(SpecError::invalid(
                &format!("variants.{variant}"),
                format!(
                    "script pins the utterance at step {UTTERANCE_STEP}, beyond horizon {}",
                    spec.horizon
                ),
            ));
        }
    }
    let object = &spec.object.location;
    non_empty("object.label", &spec.object.label)?;
    non_empty("object.location", object)?;
    let listener = &spec.agents.listener;
    let speaker = &spec.agents.speaker;
    non_empty("agents.listener.label", &listener.label)?;
    non_empty("agents.speaker.label", &speaker.label)?;
    if listener.label == speaker.label {
        return Err(SpecError::invalid("agents.speaker.label", "must differ from the listener label"));
    }
    locations("agents.listener", &listener.locations, &listener.start, object)?;
    locations("agents.speaker", &speaker.locations, &speaker.start, object)?;
    if &listener.start != object {
        return Err(SpecError::invalid(
            "agents.listener.start",
            "the listener must start at the object's location",
        ));
    }
    if &speaker.start == object {
        return Err(SpecError::invalid(
            "agents.speaker.start",
            "the speaker must start away from the object's location",
        ));
    }
    let p = &spec.priors;
    probability("priors.ability_high", p.ability_high)?;
    probability("priors.perception_good", p.perception_good)?;
    probability("priors.modify", p.modify)?;
    probability("priors.speaker_arrives_before", p.speaker_arrives_before)?;
    probability("priors.modified_looks_good_if_high", p.modified_looks_good_if_high)?;
    probability("priors.modified_looks_good_if_low", p.modified_looks_good_if_low)?;
    non_empty("utterances.good", &spec.utterances.good)?;
    non_empty("utterances.bad", &spec.utterances.bad)?;
    non_empty("utterances.nothing", &spec.utterances.nothing)?;
    let m = &spec.speaker_model;
    if !(m.rationality > 0.0 && m.rationality.is_finite()) {
        return Err(SpecError::invalid("speaker_model.rationality", "must be positive"));
    }
    if !m.theta_info.is_finite() || !m.theta_eval.is_finite() {
        return Err(SpecError::invalid("speaker_model", "theta weights must be finite"));
    }
    if spec.hypotheses.is_empty() {
        return Err(SpecError::invalid("hypotheses", "at least one hypothesis is required"));
    }
    let mut names = BTreeSet::new();
    let mut total = 0.0;
    for (i, h) in spec.hypotheses.iter().enumerate() {
        let path = format!("hypotheses[{i}]");
        non_empty(&format!("{path}.name"), &h.name)?;
        if !names.insert(h.name.as_str()) {
            return Err(SpecError::invalid(&format!("{path}.name"), "duplicate hypothesis name"));
        }
        probability(&format!("{path}.prior"), h.prior)?;
        if !h.theta_info.is_finite() || !h.theta_eval.is_finite() {
            return Err(SpecError::invalid(&path, "theta weights must be finite"));
        }
        total += h.prior;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(SpecError::invalid("hypotheses", format!("priors sum to {total}, expected 1")));
    }
    Ok(())
}

/// Handles into the compiled world.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurtainsIds {
    pub listener: AgentId,
    pub speaker: AgentId,
    pub listener_location: VarId,
    pub speaker_location: VarId,
    pub ability: VarId,
    pub perception: VarId,
    pub modified: VarId,
    pub modify: ActionId,
    pub listener_noop: ActionId,
    pub enter: ActionId,
    pub enter_late: ActionId,
    pub wait: ActionId,
    pub looks_good: ActionId,
    pub looks_bad: ActionId,
    pub nothing: ActionId,
}

impl CurtainsIds {
    pub fn utterance(&self, choice: UtteranceChoice) -> ActionId {
        match choice {
            UtteranceChoice::Good => self.looks_good,
            UtteranceChoice::Bad => self.looks_bad,
            UtteranceChoice::Nothing => self.nothing,
        }
    }

    pub fn is_movement(&self, action: ActionId) -> bool {
        action == self.enter || action == self.enter_late
    }

    /// Domain index of a look value in the perception variable.
    pub fn look(&self, look: Look) -> usize {
        match look {
            Look::Good => 0,
            Look::Bad => 1,
        }
    }
}

/// A scenario compiled to a world model, semantics, and handles.
#[derive(Debug, Clone)]
pub struct CompiledScenario {
    pub spec: ScenarioSpec,
    pub world: Arc<WorldModel>,
    pub semantics: UtteranceSemantics,
    pub ids: CurtainsIds,
    pub object_location: usize,
}

const HIGH: usize = 0;
const GOOD: usize = 0;
const BAD: usize = 1;
const UNMODIFIED: usize = 0;
const MODIFIED: usize = 1;

impl CompiledScenario {
    /// Listener ability (constant over time).
    pub fn ability_variable(&self) -> QueryVariable {
        QueryVariable::state(&self.world, self.ids.ability, StepRef::Final)
    }

    /// The speaker's view of the object when the utterance is made.
    pub fn perception_variable(&self) -> QueryVariable {
        QueryVariable::state(&self.world, self.ids.perception, StepRef::At(UTTERANCE_STEP))
    }

    pub fn initial_perception_variable(&self) -> QueryVariable {
        QueryVariable::state(&self.world, self.ids.perception, StepRef::Initial)
    }

    /// Whether the listener modified the object at step 0.
    pub fn modified_variable(&self) -> QueryVariable {
        QueryVariable::action_taken(&self.world, self.ids.modify, 0)
    }

    /// Informative variable = speaker perception, evaluative variable =
    /// listener ability with target `high`.
    pub fn speaker_params(
        &self,
        theta_info: f64,
        theta_eval: f64,
        rationality: f64,
    ) -> Result<SpeakerParams, ModelError> {
        SpeakerParams::new(
            theta_info,
            theta_eval,
            rationality,
            self.perception_variable(),
            self.ability_variable(),
            HIGH,
        )
    }

    pub fn default_speaker_params(&self) -> Result<SpeakerParams, ModelError> {
        let m = &self.spec.speaker_model;
        self.speaker_params(m.theta_info, m.theta_eval, m.rationality)
    }

    pub fn hypotheses(&self) -> Result<Vec<SpeakerHypothesis>, ModelError> {
        hypotheses_from(self, &self.spec.hypotheses, self.spec.speaker_model.rationality)
    }
}

pub fn hypotheses_from(
    compiled: &CompiledScenario,
    specs: &[HypothesisSpec],
    rationality: f64,
) -> Result<Vec<SpeakerHypothesis>, ModelError> {
    specs
        .iter()
        .map(|h| {
            Ok(SpeakerHypothesis {
                name: h.name.clone(),
                params: compiled.speaker_params(h.theta_info, h.theta_eval, rationality)?,
                prior_mass: h.prior,
            })
        })
        .collect()
}

fn loc_refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn world_error(e: ModelError) -> SpecError {
    SpecError::invalid("<world>", e.to_string())
}

/// Compiles a validated spec into a world model.
pub fn build_world(spec: &ScenarioSpec) -> Result<CompiledScenario, SpecError> {
    check_spec(spec)?;
    let l = &spec.agents.listener;
    let s = &spec.agents.speaker;
    let mut b = WorldModel::builder();
    let listener_location = b.variable("listener_location", &loc_refs(&l.locations));
    let speaker_location = b.variable("speaker_location", &loc_refs(&s.locations));
    let ability = b.variable("ability", &["high", "low"]);
    let perception = b.variable("perception", &["good", "bad"]);
    let modified = b.variable("modified", &["no", "yes"]);

    let listener = b.agent(&l.label);
    let speaker = b.agent(&s.label);
    let modify = b.action(listener, "modify", ActionKind::Physical);
    let listener_noop = b.action(listener, "noop", ActionKind::Noop);
    let enter = b.action(speaker, "enter", ActionKind::Physical);
    let enter_late = b.action(speaker, "enter_late", ActionKind::Physical);
    let wait = b.action(speaker, "wait", ActionKind::Noop);
    let looks_good = b.action(speaker, "looks_good", ActionKind::Utterance);
    let looks_bad = b.action(speaker, "looks_bad", ActionKind::Utterance);
    let nothing = b.action(speaker, "nothing", ActionKind::Utterance);

    let ids = CurtainsIds {
        listener,
        speaker,
        listener_location,
        speaker_location,
        ability,
        perception,
        modified,
        modify,
        listener_noop,
        enter,
        enter_late,
        wait,
        looks_good,
        looks_bad,
        nothing,
    };

    let p = &spec.priors;
    b.action_prior(
        listener,
        vec![
            vec![(modify, p.modify), (listener_noop, 1.0 - p.modify)],
            vec![(listener_noop, 1.0)],
        ],
    );
    let third = 1.0 / 3.0;
    b.action_prior(
        speaker,
        vec![
            vec![(enter, p.speaker_arrives_before), (enter_late, 1.0 - p.speaker_arrives_before)],
            vec![(looks_good, third), (looks_bad, third), (nothing, third)],
        ],
    );

    let l_start = l.locations.iter().position(|x| *x == l.start).expect("checked");
    let s_start = s.locations.iter().position(|x| *x == s.start).expect("checked");
    let l_object = l.locations.iter().position(|x| *x == spec.object.location).expect("checked");
    let s_object = s.locations.iter().position(|x| *x == spec.object.location).expect("checked");
    for (a, pa) in [(HIGH, p.ability_high), (1, 1.0 - p.ability_high)] {
        for (v, pv) in [(GOOD, p.perception_good), (BAD, 1.0 - p.perception_good)] {
            let mut values = vec![0; 5];
            values[listener_location.0] = l_start;
            values[speaker_location.0] = s_start;
            values[ability.0] = a;
            values[perception.0] = v;
            values[modified.0] = UNMODIFIED;
            b.initial_state(State::new(values), pa * pv);
        }
    }

    let dynamics = Dynamics {
        ids,
        listener_object: l_object,
        speaker_object: s_object,
        looks_good_if_high: p.modified_looks_good_if_high,
        looks_good_if_low: p.modified_looks_good_if_low,
    };
    let d = dynamics.clone();
    b.rule(TransitionRule::new(
        "listener-modifies",
        move |_, a| a.of(listener) == modify,
        move |s, a| d.modify_outcomes(s, a),
    ));
    let d = dynamics;
    b.rule(TransitionRule::new(
        "object-untouched",
        move |_, a| a.of(listener) != modify,
        move |s, a| {
            let next = d.move_agents(s, a);
            vec![Outcome {
                observation: d.observe(s, a, &next),
                next,
                probability: 1.0,
            }]
        },
    ));

    let mut world = b.build().map_err(world_error)?;
    if spec.observability == Observability::Public {
        world = world.with_public_observations();
    }
    let semantics = UtteranceSemantics::new(spec.epsilon)
        .map_err(|e| SpecError::invalid("epsilon", e.to_string()))?
        .define(looks_good, move |h| h.final_state().get(perception) == GOOD)
        .define(looks_bad, move |h| h.final_state().get(perception) == BAD)
        .define_vacuous(nothing);
    Ok(CompiledScenario {
        spec: spec.clone(),
        world: Arc::new(world),
        semantics,
        ids,
        object_location: l_object,
    })
}

#[derive(Debug, Clone)]
struct Dynamics {
    ids: CurtainsIds,
    listener_object: usize,
    speaker_object: usize,
    looks_good_if_high: f64,
    looks_good_if_low: f64,
}

impl Dynamics {
    fn move_agents(&self, s: &State, a: &JointAction) -> State {
        let ids = &self.ids;
        if ids.is_movement(a.of(ids.speaker)) {
            s.with(ids.speaker_location, self.speaker_object)
        } else {
            s.clone()
        }
    }

    fn modify_outcomes(&self, s: &State, a: &JointAction) -> Vec<Outcome> {
        let ids = &self.ids;
        let moved = self.move_agents(s, a).with(ids.modified, MODIFIED);
        let p_good = if s.get(ids.ability) == HIGH {
            self.looks_good_if_high
        } else {
            self.looks_good_if_low
        };
        [(GOOD, p_good), (BAD, 1.0 - p_good)]
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(look, p)| {
                let next = moved.with(ids.perception, look);
                Outcome {
                    observation: self.observe(s, a, &next),
                    next,
                    probability: p,
                }
            })
            .collect()
    }

    /// Whether the agent is at the object's location while the step's
    /// events happen.
    fn present(&self, agent: AgentId, s: &State, a: &JointAction) -> bool {
        let ids = &self.ids;
        if agent == ids.listener {
            s.get(ids.listener_location) == self.listener_object
        } else {
            s.get(ids.speaker_location) == self.speaker_object || a.of(ids.speaker) == ids.enter
        }
    }

    fn observe(&self, s: &State, a: &JointAction, next: &State) -> JointObservation {
        let ids = &self.ids;
        let agents = [ids.listener, ids.speaker];
        let per_agent = agents
            .iter()
            .map(|&me| {
                let mut z = Observation::empty();
                z.perceive_action(me, a.of(me));
                for &other in agents.iter().filter(|&&o| o != me) {
                    let act = a.of(other);
                    if !ids.is_movement(act) && self.present(me, s, a) && self.present(other, s, a) {
                        z.perceive_action(other, act);
                    }
                }
                z.perceive_variable(ids.listener_location, next.get(ids.listener_location));
                z.perceive_variable(ids.speaker_location, next.get(ids.speaker_location));
                if me == ids.speaker && next.get(ids.speaker_location) == self.speaker_object {
                    z.perceive_variable(ids.perception, next.get(ids.perception));
                }
                z
            })
            .collect();
        JointObservation::new(per_agent)
    }
}

/// Action pins for one variant: `common` is common ground and conditions
/// every agent's prior; `actual` additionally fixes what actually happened.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantScript {
    pub variant: HistoryVariant,
    pub common: Script,
    pub actual: Script,
    /// The speaker's actual view of the object (domain index).
    pub perceived: usize,
    pub utterance: ActionId,
}

pub fn script_variant(compiled: &CompiledScenario, variant: HistoryVariant) -> VariantScript {
    let ids = &compiled.ids;
    let v = compiled.spec.variants.get(variant);
    let arrival = match v.speaker_arrives {
        Arrival::Before => ids.enter,
        Arrival::After => ids.enter_late,
    };
    let common = Script::new().pin(0, ids.speaker, arrival);
    let listener_action = if v.listener_modifies {
        ids.modify
    } else {
        ids.listener_noop
    };
    let utterance = ids.utterance(v.utterance);
    let actual = common
        .clone()
        .pin(0, ids.listener, listener_action)
        .pin(UTTERANCE_STEP, ids.speaker, utterance)
        .pin(UTTERANCE_STEP, ids.listener, ids.listener_noop);
    VariantScript {
        variant,
        common,
        actual,
        perceived: ids.look(v.speaker_perceives),
        utterance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        let spec = parse_scenario("").unwrap();
        assert_eq!(spec, ScenarioSpec::default());
        assert!(spec.overrides().is_empty());
    }

    #[test]
    fn canonical_round_trip() {
        let text = ScenarioSpec::default().to_toml();
        assert_eq!(parse_scenario(&text).unwrap(), ScenarioSpec::default());
        assert_eq!(parse_scenario(&text).unwrap().to_toml(), text);
    }

    #[test]
    fn epsilon_out_of_range() {
        let err = parse_scenario("epsilon = 1.5").unwrap_err();
        assert_eq!(err, SpecError::invalid("epsilon", "1.5 is outside (0, 0.5)"));
    }

    #[test]
    fn horizon_too_short_for_script() {
        let err = parse_scenario("horizon = 0").unwrap_err();
        assert!(matches!(err, SpecError::Invalid { ref path, .. } if path == "variants.shared"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert_eq!(
            parse_scenario("colour = 3").unwrap_err(),
            SpecError::UnknownKey { path: "colour".into() }
        );
        assert_eq!(
            parse_scenario("[priors]\nabilty_high = 0.9").unwrap_err(),
            SpecError::UnknownKey { path: "priors.abilty_high".into() }
        );
        assert_eq!(
            parse_scenario("[[hypotheses]]\nname = \"x\"\nprior = 1.0\nweight = 2").unwrap_err(),
            SpecError::UnknownKey { path: "hypotheses[0].weight".into() }
        );
    }

    #[test]
    fn type_errors_carry_paths() {
        let err = parse_scenario("[priors]\nmodify = \"often\"").unwrap_err();
        assert!(matches!(err, SpecError::Invalid { ref path, .. } if path == "priors.modify"), "{err:?}");
    }

    #[test]
    fn overrides_are_recorded() {
        let spec = parse_scenario("epsilon = 0.1\n[priors]\nmodify = 0.2").unwrap();
        assert_eq!(spec.overrides(), vec!["epsilon".to_string(), "priors.modify".to_string()]);
    }

    #[test]
    fn hypothesis_priors_must_normalize() {
        let text = "[[hypotheses]]\nname = \"a\"\nprior = 0.5\n";
        assert!(matches!(
            parse_scenario(text).unwrap_err(),
            SpecError::Invalid { ref path, .. } if path == "hypotheses"
        ));
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_scenario("epsilon = "), Err(SpecError::Syntax(_))));
    }

    #[test]
    fn listener_must_start_with_object() {
        let text = "[agents.listener]\nstart = \"outside\"";
        assert!(matches!(
            parse_scenario(text).unwrap_err(),
            SpecError::Invalid { ref path, .. } if path == "agents.listener.start"
        ));
    }
}
