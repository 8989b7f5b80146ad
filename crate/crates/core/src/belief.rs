//! Exact conditioning of history distributions on an agent's observation
//! sequence, and nested beliefs about other agents.
//!
//! A belief keeps unnormalized per-history weights (prior mass times the
//! product of per-step likelihoods, applied in step order) and normalizes on
//! read. Conditioning in one batch and conditioning step by step therefore
//! perform the same floating-point operations and agree bit for bit.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::dist::Dist;
use crate::error::ModelError;
use crate::history::{enumerate_histories, History, HistorySet, Script};
use crate::world::{ActionId, AgentId, Observation, VarId, WorldModel};

/// Likelihood of one observed step given a hypothesized history.
pub trait ObservationModel {
    fn likelihood(
        &self,
        world: &WorldModel,
        history: &History,
        owner: AgentId,
        step: usize,
        observed: &Observation,
    ) -> Result<f64, ModelError>;
}

/// Observations are deterministic projections of the history.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl ObservationModel for ExactMatch {
    fn likelihood(
        &self,
        _world: &WorldModel,
        history: &History,
        owner: AgentId,
        step: usize,
        observed: &Observation,
    ) -> Result<f64, ModelError> {
        Ok(if history.observation_of(step, owner) == observed {
            1.0
        } else {
            0.0
        })
    }
}

/// Which time slice of a state variable a query reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRef {
    Initial,
    Final,
    At(usize),
}

/// A total function from histories to one of `values`.
#[derive(Clone)]
pub struct QueryVariable {
    pub name: String,
    pub values: Vec<String>,
    extract: Arc<dyn Fn(&History) -> usize + Send + Sync>,
}

impl fmt::Debug for QueryVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QueryVariable")
            .field("name", &self.name)
            .field("values", &self.values)
            .finish()
    }
}

impl QueryVariable {
    pub fn new<F>(name: impl Into<String>, values: Vec<String>, extract: F) -> Self
    where
        F: Fn(&History) -> usize + Send + Sync + 'static,
    {
        QueryVariable {
            name: name.into(),
            values,
            extract: Arc::new(extract),
        }
    }

    /// Value of state variable `var` at the given step.
    pub fn state(world: &WorldModel, var: VarId, at: StepRef) -> Self {
        let decl = world.variable_decl(var);
        let name = match at {
            StepRef::Initial => format!("{}@0", decl.name),
            StepRef::Final => decl.name.clone(),
            StepRef::At(t) => format!("{}@{t}", decl.name),
        };
        QueryVariable::new(name, decl.domain.clone(), move |h: &History| match at {
            StepRef::Initial => h.state(0).get(var),
            StepRef::Final => h.final_state().get(var),
            StepRef::At(t) => h.state(t.min(h.len())).get(var),
        })
    }

    /// `yes` when `action` was taken at `step`, otherwise `no`.
    pub fn action_taken(world: &WorldModel, action: ActionId, step: usize) -> Self {
        let decl = world.action_decl(action);
        let agent = decl.agent;
        let name = format!("{}:{}@{step}", world.agent_label(agent), decl.name);
        QueryVariable::new(name, vec!["no".into(), "yes".into()], move |h: &History| {
            usize::from(step < h.len() && h.action_of(step, agent) == action)
        })
    }

    pub fn extract(&self, history: &History) -> usize {
        (self.extract)(history)
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// One agent's distribution over histories after some observation prefix.
#[derive(Debug, Clone)]
pub struct BeliefState {
    owner: AgentId,
    set: Arc<HistorySet>,
    weights: Vec<(usize, f64)>,
    total: f64,
    conditioned_on: Vec<Observation>,
}

impl BeliefState {
    /// The unconditioned belief: the enumeration weights themselves.
    pub fn prior(set: Arc<HistorySet>, owner: AgentId) -> Self {
        let weights: Vec<(usize, f64)> = set
            .histories()
            .iter()
            .enumerate()
            .map(|(i, h)| (i, h.weight))
            .collect();
        let total = weights.iter().map(|(_, w)| w).sum();
        BeliefState {
            owner,
            set,
            weights,
            total,
            conditioned_on: Vec::new(),
        }
    }

    pub(crate) fn from_weights(
        owner: AgentId,
        set: Arc<HistorySet>,
        weights: Vec<(usize, f64)>,
        conditioned_on: Vec<Observation>,
    ) -> Result<Self, ModelError> {
        let weights: Vec<(usize, f64)> = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if weights.is_empty() || !(total > 0.0) {
            return Err(ModelError::ZeroPosterior {
                owner: set.world().agent_label(owner).to_string(),
                steps: conditioned_on.len(),
            });
        }
        Ok(BeliefState {
            owner,
            set,
            weights,
            total,
            conditioned_on,
        })
    }

    pub fn owner(&self) -> AgentId {
        self.owner
    }

    pub fn set(&self) -> &Arc<HistorySet> {
        &self.set
    }

    pub fn world(&self) -> &WorldModel {
        self.set.world()
    }

    pub fn conditioned_on(&self) -> &[Observation] {
        &self.conditioned_on
    }

    /// Number of observed steps.
    pub fn time(&self) -> usize {
        self.conditioned_on.len()
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    /// Normalized `(history index, mass)` pairs in enumeration order.
    pub fn masses(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let total = self.total;
        self.weights.iter().map(move |&(i, w)| (i, w / total))
    }

    pub fn histories(&self) -> impl Iterator<Item = (&History, f64)> + '_ {
        self.masses().map(|(i, m)| (self.set.get(i), m))
    }

    pub fn dist(&self) -> Dist<usize> {
        Dist::from_distinct_weights(self.weights.clone()).expect("belief support is non-empty")
    }

    /// Bayes update on the next `observed.len()` steps of the owner's
    /// observation sequence.
    pub fn condition(
        &self,
        observed: &[Observation],
        model: &dyn ObservationModel,
    ) -> Result<BeliefState, ModelError> {
        let start = self.conditioned_on.len();
        let horizon = self.set.horizon();
        if start + observed.len() > horizon {
            return Err(ModelError::ObservationTooLong {
                observed: start + observed.len(),
                horizon,
            });
        }
        let world = self.set.world();
        let mut weights = Vec::with_capacity(self.weights.len());
        for &(i, w) in &self.weights {
            let history = self.set.get(i);
            let mut weight = w;
            for (offset, obs) in observed.iter().enumerate() {
                if weight == 0.0 {
                    break;
                }
                weight *= model.likelihood(world, history, self.owner, start + offset, obs)?;
            }
            if weight > 0.0 {
                weights.push((i, weight));
            }
        }
        let mut conditioned_on = self.conditioned_on.clone();
        conditioned_on.extend_from_slice(observed);
        BeliefState::from_weights(self.owner, self.set.clone(), weights, conditioned_on)
    }

    /// `b(X = value)`.
    pub fn probability(&self, variable: &QueryVariable, value: usize) -> f64 {
        self.histories()
            .filter(|(h, _)| variable.extract(h) == value)
            .map(|(_, m)| m)
            .sum()
    }

    /// `b(X)` over every value of the variable, in domain order.
    pub fn marginal(&self, variable: &QueryVariable) -> Dist<String> {
        let mut mass = vec![0.0; variable.values.len()];
        for (h, m) in self.histories() {
            mass[variable.extract(h)] += m;
        }
        Dist::from_distinct_weights(variable.values.iter().cloned().zip(mass).collect())
            .expect("marginal of a normalized belief is normalized")
    }

    /// The unconditioned belief of `agent` over the same history set.
    pub fn shared_prior_for(&self, agent: AgentId) -> BeliefState {
        BeliefState::prior(self.set.clone(), agent)
    }
}

/// Enumerates the world and wraps the result as an unconditioned belief.
pub fn prior_belief(
    world: &Arc<WorldModel>,
    horizon: usize,
    script: &Script,
    owner: AgentId,
) -> Result<BeliefState, ModelError> {
    let set = enumerate_histories(world, horizon, script)?;
    Ok(BeliefState::prior(Arc::new(set), owner))
}

pub fn condition(
    belief: &BeliefState,
    observed: &[Observation],
    model: &dyn ObservationModel,
) -> Result<BeliefState, ModelError> {
    belief.condition(observed, model)
}

pub fn marginal(belief: &BeliefState, variable: &QueryVariable) -> Dist<String> {
    belief.marginal(variable)
}

pub use crate::dist::expectation;

/// For each history the owner entertains, forms `other`'s belief from
/// `other`'s first `steps` observations in that history (conditioning the
/// shared prior) and maps it to a number with `f`. Returns the owner-weighted
/// distribution of those numbers. Beliefs are memoized by observation prefix.
pub fn nested_values<F>(
    belief: &BeliefState,
    other: AgentId,
    steps: usize,
    model: &dyn ObservationModel,
    mut f: F,
) -> Result<Dist<f64>, ModelError>
where
    F: FnMut(&BeliefState) -> Result<f64, ModelError>,
{
    let prior = belief.shared_prior_for(other);
    let mut memo: HashMap<Vec<Observation>, f64> = HashMap::new();
    let mut weighted = Vec::with_capacity(belief.support_len());
    for (h, mass) in belief.histories() {
        let prefix = h.observation_prefix(other, steps);
        let value = match memo.get(&prefix) {
            Some(v) => *v,
            None => {
                let theirs = prior.condition(&prefix, model)?;
                let v = f(&theirs)?;
                memo.insert(prefix, v);
                v
            }
        };
        weighted.push((value, mass));
    }
    Ok(Dist::over_values(weighted)?)
}

/// The owner's distribution over `other`'s probability that `variable`
/// takes `value`, at the owner's current time.
pub fn other_agent_belief(
    belief: &BeliefState,
    other: AgentId,
    variable: &QueryVariable,
    value: usize,
    model: &dyn ObservationModel,
) -> Result<Dist<f64>, ModelError> {
    nested_values(belief, other, belief.time(), model, |b| Ok(b.probability(variable, value)))
}
