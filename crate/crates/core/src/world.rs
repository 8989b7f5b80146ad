//! Partially observable stochastic game: variables, agents, actions,
//! private observations, and a rule-based stochastic transition function.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::{Dist, MASS_TOLERANCE};
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDecl {
    pub name: String,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Physical,
    Utterance,
    Noop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDecl {
    pub agent: AgentId,
    pub name: String,
    pub kind: ActionKind,
}

/// Total assignment of domain-value indices, one per declared variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Vec<usize>);

impl State {
    pub fn new(values: Vec<usize>) -> Self {
        State(values)
    }

    pub fn get(&self, var: VarId) -> usize {
        self.0[var.0]
    }

    pub fn with(&self, var: VarId, value: usize) -> State {
        let mut values = self.0.clone();
        values[var.0] = value;
        State(values)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

/// One action per agent, indexed by agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction(Vec<ActionId>);

impl JointAction {
    pub fn new(actions: Vec<ActionId>) -> Self {
        JointAction(actions)
    }

    pub fn of(&self, agent: AgentId) -> ActionId {
        self.0[agent.0]
    }

    pub fn with(&self, agent: AgentId, action: ActionId) -> JointAction {
        let mut actions = self.0.clone();
        actions[agent.0] = action;
        JointAction(actions)
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.0
    }
}

/// What a percept is about: a state variable, or the action some agent took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    Variable(VarId),
    Action(AgentId),
}

/// A set of percepts; each subject appears at most once. Values are domain
/// indices for variables and raw [`ActionId`] indices for actions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation(BTreeMap<Subject, usize>);

impl Observation {
    pub fn empty() -> Self {
        Observation::default()
    }

    pub fn perceive_variable(&mut self, var: VarId, value: usize) {
        self.0.insert(Subject::Variable(var), value);
    }

    pub fn perceive_action(&mut self, agent: AgentId, action: ActionId) {
        self.0.insert(Subject::Action(agent), action.0);
    }

    pub fn get(&self, subject: Subject) -> Option<usize> {
        self.0.get(&subject).copied()
    }

    pub fn action_of(&self, agent: AgentId) -> Option<ActionId> {
        self.get(Subject::Action(agent)).map(ActionId)
    }

    pub fn contains(&self, subject: Subject) -> bool {
        self.0.contains_key(&subject)
    }

    pub fn percepts(&self) -> impl Iterator<Item = (Subject, usize)> + '_ {
        self.0.iter().map(|(s, v)| (*s, *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Union of percepts; later entries win on conflicting subjects.
    pub fn merge(&mut self, other: &Observation) {
        for (subject, value) in other.percepts() {
            self.0.insert(subject, value);
        }
    }
}

/// Private observations, one per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointObservation(Vec<Observation>);

impl JointObservation {
    pub fn new(per_agent: Vec<Observation>) -> Self {
        JointObservation(per_agent)
    }

    pub fn of(&self, agent: AgentId) -> &Observation {
        &self.0[agent.0]
    }

    pub fn per_agent(&self) -> &[Observation] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub next: State,
    pub observation: JointObservation,
    pub probability: f64,
}

pub type Guard = Arc<dyn Fn(&State, &JointAction) -> bool + Send + Sync>;
pub type OutcomeFn = Arc<dyn Fn(&State, &JointAction) -> Vec<Outcome> + Send + Sync>;

/// A guarded family of transitions: when `guard` holds for `(s, a)`,
/// `outcomes(s, a)` gives `P(s', z | s, a)`.
#[derive(Clone)]
pub struct TransitionRule {
    pub name: String,
    pub guard: Guard,
    pub outcomes: OutcomeFn,
}

impl TransitionRule {
    pub fn new<G, O>(name: impl Into<String>, guard: G, outcomes: O) -> Self
    where
        G: Fn(&State, &JointAction) -> bool + Send + Sync + 'static,
        O: Fn(&State, &JointAction) -> Vec<Outcome> + Send + Sync + 'static,
    {
        TransitionRule {
            name: name.into(),
            guard: Arc::new(guard),
            outcomes: Arc::new(outcomes),
        }
    }
}

impl fmt::Debug for TransitionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionRule")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Per-agent action prior. Entry `t` is the distribution used at step `t`;
/// the last entry repeats for later steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionPrior {
    pub per_step: Vec<Dist<ActionId>>,
}

impl ActionPrior {
    pub fn at(&self, step: usize) -> &Dist<ActionId> {
        &self.per_step[step.min(self.per_step.len() - 1)]
    }
}

#[derive(Debug, Clone)]
pub struct WorldModel {
    variables: Vec<VariableDecl>,
    agents: Vec<String>,
    actions: Vec<ActionDecl>,
    transitions: Vec<TransitionRule>,
    action_priors: Vec<ActionPrior>,
    initial_state_prior: Dist<State>,
}

impl WorldModel {
    pub fn builder() -> WorldBuilder {
        WorldBuilder::default()
    }

    pub fn variables(&self) -> &[VariableDecl] {
        &self.variables
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len()).map(AgentId)
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_label(&self, agent: AgentId) -> &str {
        &self.agents[agent.0]
    }

    pub fn agent(&self, label: &str) -> Option<AgentId> {
        self.agents.iter().position(|l| l == label).map(AgentId)
    }

    pub fn variable(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn variable_decl(&self, var: VarId) -> &VariableDecl {
        &self.variables[var.0]
    }

    pub fn value_index(&self, var: VarId, value: &str) -> Option<usize> {
        self.variables[var.0].domain.iter().position(|v| v == value)
    }

    pub fn value_label(&self, var: VarId, value: usize) -> &str {
        &self.variables[var.0].domain[value]
    }

    pub fn actions(&self) -> &[ActionDecl] {
        &self.actions
    }

    pub fn action_decl(&self, action: ActionId) -> &ActionDecl {
        &self.actions[action.0]
    }

    pub fn action(&self, agent: AgentId, name: &str) -> Option<ActionId> {
        self.actions
            .iter()
            .position(|a| a.agent == agent && a.name == name)
            .map(ActionId)
    }

    pub fn actions_of(&self, agent: AgentId) -> impl Iterator<Item = ActionId> + '_ {
        self.actions
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.agent == agent)
            .map(|(i, _)| ActionId(i))
    }

    pub fn action_prior(&self, agent: AgentId) -> &ActionPrior {
        &self.action_priors[agent.0]
    }

    pub fn initial_state_prior(&self) -> &Dist<State> {
        &self.initial_state_prior
    }

    pub fn transitions(&self) -> &[TransitionRule] {
        &self.transitions
    }

    pub fn describe_state(&self, state: &State) -> String {
        let parts: Vec<String> = self
            .variables
            .iter()
            .zip(state.values())
            .map(|(v, &i)| format!("{}={}", v.name, v.domain[i]))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    pub fn describe_action(&self, action: &JointAction) -> String {
        let parts: Vec<String> = action
            .actions()
            .iter()
            .map(|a| {
                let decl = &self.actions[a.0];
                format!("{}:{}", self.agents[decl.agent.0], decl.name)
            })
            .collect();
        format!("({})", parts.join(", "))
    }

    pub fn describe_observation(&self, obs: &Observation) -> String {
        let parts: Vec<String> = obs
            .percepts()
            .map(|(subject, value)| match subject {
                Subject::Variable(var) => {
                    format!("{}={}", self.variables[var.0].name, self.value_label(var, value))
                }
                Subject::Action(agent) => {
                    format!("{} did {}", self.agents[agent.0], self.actions[value].name)
                }
            })
            .collect();
        format!("[{}]", parts.join("; "))
    }

    pub fn validate_joint_action(&self, action: &JointAction) -> Result<(), ModelError> {
        if action.actions().len() != self.agents.len() {
            return Err(ModelError::InvalidParameter(format!(
                "joint action has {} entries for {} agents",
                action.actions().len(),
                self.agents.len()
            )));
        }
        for (i, a) in action.actions().iter().enumerate() {
            match self.actions.get(a.0) {
                Some(decl) if decl.agent == AgentId(i) => {}
                _ => {
                    return Err(ModelError::InvalidParameter(format!(
                        "action {} does not belong to agent `{}`",
                        a.0, self.agents[i]
                    )))
                }
            }
        }
        Ok(())
    }

    fn validate_state(&self, state: &State) -> Result<(), String> {
        if state.values().len() != self.variables.len() {
            return Err(format!(
                "state assigns {} of {} variables",
                state.values().len(),
                self.variables.len()
            ));
        }
        for (decl, &v) in self.variables.iter().zip(state.values()) {
            if v >= decl.domain.len() {
                return Err(format!("value {v} out of domain for `{}`", decl.name));
            }
        }
        Ok(())
    }

    fn validate_observation(&self, obs: &Observation) -> Result<(), String> {
        for (subject, value) in obs.percepts() {
            match subject {
                Subject::Variable(var) => {
                    let decl = self
                        .variables
                        .get(var.0)
                        .ok_or_else(|| format!("unknown variable {}", var.0))?;
                    if value >= decl.domain.len() {
                        return Err(format!("percept value {value} out of domain for `{}`", decl.name));
                    }
                }
                Subject::Action(agent) => {
                    if agent.0 >= self.agents.len() {
                        return Err(format!("unknown agent {}", agent.0));
                    }
                    match self.actions.get(value) {
                        Some(decl) if decl.agent == agent => {}
                        _ => return Err(format!("percept action {value} not owned by agent {}", agent.0)),
                    }
                }
            }
        }
        Ok(())
    }

    /// `P(s', z | s, a)` from the unique rule whose guard covers `(s, a)`.
    pub fn transition(
        &self,
        state: &State,
        action: &JointAction,
    ) -> Result<Dist<(State, JointObservation)>, ModelError> {
        self.validate_joint_action(action)?;
        let mut matched = self
            .transitions
            .iter()
            .filter(|rule| (rule.guard)(state, action));
        let rule = match matched.next() {
            Some(rule) => rule,
            None => {
                return Err(ModelError::NoMatchingRule {
                    state: self.describe_state(state),
                    action: self.describe_action(action),
                })
            }
        };
        let others: Vec<String> = matched.map(|r| r.name.clone()).collect();
        if !others.is_empty() {
            let mut rules = vec![rule.name.clone()];
            rules.extend(others);
            return Err(ModelError::AmbiguousTransition {
                rules,
                state: self.describe_state(state),
            });
        }
        let outcomes = (rule.outcomes)(state, action);
        let invalid = |reason: String| ModelError::InvalidOutcome {
            rule: rule.name.clone(),
            reason,
        };
        let mut total = 0.0;
        for outcome in &outcomes {
            self.validate_state(&outcome.next).map_err(invalid)?;
            if outcome.observation.per_agent().len() != self.agents.len() {
                return Err(invalid("joint observation does not cover every agent".into()));
            }
            for obs in outcome.observation.per_agent() {
                self.validate_observation(obs).map_err(invalid)?;
            }
            total += outcome.probability;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("outcome masses sum to {total}")));
        }
        Dist::from_weights(
            outcomes
                .into_iter()
                .map(|o| ((o.next, o.observation), o.probability)),
        )
        .map_err(|e| invalid(e.to_string()))
    }

    /// Same world, but every agent receives the union of all agents'
    /// percepts at every step.
    pub fn with_public_observations(&self) -> WorldModel {
        let mut world = self.clone();
        world.transitions = self
            .transitions
            .iter()
            .map(|rule| {
                let inner = rule.outcomes.clone();
                TransitionRule {
                    name: rule.name.clone(),
                    guard: rule.guard.clone(),
                    outcomes: Arc::new(move |s: &State, a: &JointAction| {
                        inner(s, a)
                            .into_iter()
                            .map(|o| {
                                let mut shared = Observation::empty();
                                for obs in o.observation.per_agent() {
                                    shared.merge(obs);
                                }
                                let n = o.observation.per_agent().len();
                                Outcome {
                                    next: o.next,
                                    observation: JointObservation::new(vec![shared; n]),
                                    probability: o.probability,
                                }
                            })
                            .collect()
                    }),
                }
            })
            .collect();
        world
    }
}

#[derive(Default)]
pub struct WorldBuilder {
    variables: Vec<VariableDecl>,
    agents: Vec<String>,
    actions: Vec<ActionDecl>,
    transitions: Vec<TransitionRule>,
    action_priors: BTreeMap<usize, Vec<Vec<(ActionId, f64)>>>,
    initial: Vec<(State, f64)>,
}

impl WorldBuilder {
    pub fn variable(&mut self, name: &str, domain: &[&str]) -> VarId {
        self.variables.push(VariableDecl {
            name: name.to_string(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
        });
        VarId(self.variables.len() - 1)
    }

    pub fn agent(&mut self, label: &str) -> AgentId {
        self.agents.push(label.to_string());
        AgentId(self.agents.len() - 1)
    }

    pub fn action(&mut self, agent: AgentId, name: &str, kind: ActionKind) -> ActionId {
        self.actions.push(ActionDecl {
            agent,
            name: name.to_string(),
            kind,
        });
        ActionId(self.actions.len() - 1)
    }

    pub fn rule(&mut self, rule: TransitionRule) -> &mut Self {
        self.transitions.push(rule);
        self
    }

    /// Sets the per-step action prior of `agent`; the last step repeats.
    pub fn action_prior(&mut self, agent: AgentId, per_step: Vec<Vec<(ActionId, f64)>>) -> &mut Self {
        self.action_priors.insert(agent.0, per_step);
        self
    }

    pub fn initial_state(&mut self, state: State, weight: f64) -> &mut Self {
        self.initial.push((state, weight));
        self
    }

    pub fn build(self) -> Result<WorldModel, ModelError> {
        let bad = |msg: String| ModelError::InvalidWorld(msg);
        let mut names = HashSet::new();
        for decl in &self.variables {
            if !names.insert(decl.name.as_str()) {
                return Err(bad(format!("variable `{}` declared twice", decl.name)));
            }
            if decl.domain.is_empty() {
                return Err(bad(format!("variable `{}` has an empty domain", decl.name)));
            }
            let unique: HashSet<&String> = decl.domain.iter().collect();
            if unique.len() != decl.domain.len() {
                return Err(bad(format!("variable `{}` repeats a domain value", decl.name)));
            }
        }
        if self.agents.is_empty() {
            return Err(bad("world has no agents".into()));
        }
        let labels: HashSet<&String> = self.agents.iter().collect();
        if labels.len() != self.agents.len() {
            return Err(bad("agent labels must be unique".into()));
        }
        for decl in &self.actions {
            if decl.agent.0 >= self.agents.len() {
                return Err(bad(format!("action `{}` has unknown agent", decl.name)));
            }
        }
        for (i, label) in self.agents.iter().enumerate() {
            let has_noop = self
                .actions
                .iter()
                .any(|a| a.agent == AgentId(i) && a.kind == ActionKind::Noop);
            if !has_noop {
                return Err(bad(format!("agent `{label}` has no noop action")));
            }
        }
        let mut action_priors = Vec::with_capacity(self.agents.len());
        for (i, label) in self.agents.iter().enumerate() {
            let steps = self
                .action_priors
                .get(&i)
                .ok_or_else(|| bad(format!("agent `{label}` has no action prior")))?;
            if steps.is_empty() {
                return Err(bad(format!("agent `{label}` has an empty action prior")));
            }
            let mut per_step = Vec::new();
            for step in steps {
                for (a, _) in step {
                    if self.actions.get(a.0).map(|d| d.agent) != Some(AgentId(i)) {
                        return Err(bad(format!("action prior of `{label}` uses a foreign action")));
                    }
                }
                let dist = Dist::new(step.clone())
                    .map_err(|e| bad(format!("action prior of `{label}`: {e}")))?;
                per_step.push(dist);
            }
            action_priors.push(ActionPrior { per_step });
        }
        for (state, _) in &self.initial {
            if state.values().len() != self.variables.len()
                || state
                    .values()
                    .iter()
                    .zip(&self.variables)
                    .any(|(&v, d)| v >= d.domain.len())
            {
                return Err(bad("initial state is not a total in-domain assignment".into()));
            }
        }
        let initial_state_prior =
            Dist::new(self.initial).map_err(|e| bad(format!("initial state prior: {e}")))?;
        Ok(WorldModel {
            variables: self.variables,
            agents: self.agents,
            actions: self.actions,
            transitions: self.transitions,
            action_priors,
            initial_state_prior,
        })
    }
}
