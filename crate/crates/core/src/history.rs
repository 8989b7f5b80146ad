//! Interaction histories and exhaustive enumeration at a fixed horizon.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::ModelError;
use crate::world::{ActionId, AgentId, JointAction, JointObservation, Observation, State, WorldModel};

/// Default cap on the number of enumerated histories.
pub const DEFAULT_HISTORY_CAP: usize = 1_000_000;

/// `(s0, a0, z0, ..., s_{T-1}, a_{T-1}, z_{T-1}, s_T)` with its prior mass.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub states: Vec<State>,
    pub actions: Vec<JointAction>,
    pub observations: Vec<JointObservation>,
    pub weight: f64,
}

impl History {
    /// Number of completed steps.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn state(&self, step: usize) -> &State {
        &self.states[step]
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("histories hold at least s0")
    }

    pub fn action_of(&self, step: usize, agent: AgentId) -> ActionId {
        self.actions[step].of(agent)
    }

    pub fn observation_of(&self, step: usize, agent: AgentId) -> &Observation {
        self.observations[step].of(agent)
    }

    /// The agent's first `steps` private observations.
    pub fn observation_prefix(&self, agent: AgentId, steps: usize) -> Vec<Observation> {
        self.observations[..steps]
            .iter()
            .map(|z| z.of(agent).clone())
            .collect()
    }

    /// The first `steps` steps of this history, keeping the full weight.
    pub fn truncated(&self, steps: usize) -> History {
        History {
            states: self.states[..=steps].to_vec(),
            actions: self.actions[..steps].to_vec(),
            observations: self.observations[..steps].to_vec(),
            weight: self.weight,
        }
    }

    /// Same sequence, ignoring weight.
    pub fn same_path(&self, other: &History) -> bool {
        self.states == other.states
            && self.actions == other.actions
            && self.observations == other.observations
    }
}

/// `(z^i_0, ..., z^i_{T-1})`, the agent's projection of the joint observations.
pub fn observation_sequence(history: &History, agent: AgentId) -> Vec<Observation> {
    history.observation_prefix(agent, history.len())
}

/// Pins some agents' actions at some steps. Pinned actions are taken with
/// probability one; states and observations still come from the transitions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pins: BTreeMap<(usize, AgentId), ActionId>,
}

impl Script {
    pub fn new() -> Self {
        Script::default()
    }

    pub fn pin(mut self, step: usize, agent: AgentId, action: ActionId) -> Self {
        self.pins.insert((step, agent), action);
        self
    }

    pub fn get(&self, step: usize, agent: AgentId) -> Option<ActionId> {
        self.pins.get(&(step, agent)).copied()
    }

    pub fn pins(&self) -> impl Iterator<Item = (usize, AgentId, ActionId)> + '_ {
        self.pins.iter().map(|(&(step, agent), &action)| (step, agent, action))
    }

    pub fn is_empty(&self) -> bool {
        self.pins.is_empty()
    }

    /// Last pinned step plus one, or zero.
    pub fn span(&self) -> usize {
        self.pins.keys().map(|(step, _)| step + 1).max().unwrap_or(0)
    }

    fn validate(&self, world: &WorldModel, horizon: usize) -> Result<(), ModelError> {
        for (step, agent, action) in self.pins() {
            if step >= horizon {
                return Err(ModelError::InvalidScript(format!(
                    "pin at step {step} lies beyond horizon {horizon}"
                )));
            }
            if agent.0 >= world.agent_count() {
                return Err(ModelError::InvalidScript(format!("unknown agent {}", agent.0)));
            }
            if world.actions().get(action.0).map(|a| a.agent) != Some(agent) {
                return Err(ModelError::InvalidScript(format!(
                    "action {} is not available to `{}`",
                    action.0,
                    world.agent_label(agent)
                )));
            }
        }
        Ok(())
    }
}

/// The weighted set of all positive-mass histories at one horizon.
#[derive(Debug, Clone)]
pub struct HistorySet {
    world: Arc<WorldModel>,
    horizon: usize,
    histories: Vec<History>,
}

impl HistorySet {
    pub fn world(&self) -> &Arc<WorldModel> {
        &self.world
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn histories(&self) -> &[History] {
        &self.histories
    }

    pub fn get(&self, index: usize) -> &History {
        &self.histories[index]
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.histories.iter().map(|h| h.weight).sum()
    }

    /// Keeps histories satisfying `keep` and renormalizes their weights.
    pub fn filtered<F>(&self, mut keep: F) -> Result<HistorySet, ModelError>
    where
        F: FnMut(&History) -> bool,
    {
        let mut histories: Vec<History> = self.histories.iter().filter(|h| keep(h)).cloned().collect();
        let total: f64 = histories.iter().map(|h| h.weight).sum();
        if histories.is_empty() || total <= 0.0 {
            return Err(ModelError::ZeroPosterior {
                owner: "history filter".into(),
                steps: self.horizon,
            });
        }
        for h in &mut histories {
            h.weight /= total;
        }
        Ok(HistorySet {
            world: self.world.clone(),
            horizon: self.horizon,
            histories,
        })
    }
}

pub fn enumerate_histories(
    world: &Arc<WorldModel>,
    horizon: usize,
    script: &Script,
) -> Result<HistorySet, ModelError> {
    enumerate_histories_capped(world, horizon, script, DEFAULT_HISTORY_CAP)
}

/// Breadth-first expansion of every positive-mass history up to `horizon`.
///
/// Weight = initial prior x product of per-agent action priors (1 for pinned
/// actions) x transition mass. Order follows the initial-prior order, then
/// joint actions in agent-major declaration order, then outcome order.
pub fn enumerate_histories_capped(
    world: &Arc<WorldModel>,
    horizon: usize,
    script: &Script,
    cap: usize,
) -> Result<HistorySet, ModelError> {
    script.validate(world, horizon)?;
    let mut frontier: Vec<History> = world
        .initial_state_prior()
        .iter()
        .filter(|(_, mass)| *mass > 0.0)
        .map(|(state, mass)| History {
            states: vec![state.clone()],
            actions: Vec::new(),
            observations: Vec::new(),
            weight: mass,
        })
        .collect();
    if frontier.len() > cap {
        return Err(ModelError::ExplosionGuard {
            cap,
            reached: frontier.len(),
        });
    }
    for step in 0..horizon {
        let joint = joint_action_prior(world, step, script);
        let mut next = Vec::new();
        for history in &frontier {
            let state = history.final_state();
            for (action, action_mass) in &joint {
                let outcomes = world.transition(state, action)?;
                for ((s_next, z), mass) in outcomes.iter() {
                    if mass <= 0.0 {
                        continue;
                    }
                    if next.len() == cap {
                        return Err(ModelError::ExplosionGuard {
                            cap,
                            reached: cap + 1,
                        });
                    }
                    let mut extended = history.clone();
                    extended.actions.push(action.clone());
                    extended.observations.push(z.clone());
                    extended.states.push(s_next.clone());
                    extended.weight = history.weight * action_mass * mass;
                    next.push(extended);
                }
            }
        }
        frontier = next;
    }
    Ok(HistorySet {
        world: world.clone(),
        horizon,
        histories: frontier,
    })
}

/// Product of independent per-agent priors, with pinned actions at mass one.
fn joint_action_prior(world: &WorldModel, step: usize, script: &Script) -> Vec<(JointAction, f64)> {
    let mut joint: Vec<(Vec<ActionId>, f64)> = vec![(Vec::new(), 1.0)];
    for agent in world.agents() {
        let options: Vec<(ActionId, f64)> = match script.get(step, agent) {
            Some(action) => vec![(action, 1.0)],
            None => world
                .action_prior(agent)
                .at(step)
                .iter()
                .filter(|(_, mass)| *mass > 0.0)
                .map(|(a, mass)| (*a, mass))
                .collect(),
        };
        joint = joint
            .into_iter()
            .flat_map(|(prefix, mass)| {
                options.iter().map(move |(a, m)| {
                    let mut actions = prefix.clone();
                    actions.push(*a);
                    (actions, mass * m)
                })
            })
            .collect();
    }
    joint
        .into_iter()
        .map(|(actions, mass)| (JointAction::new(actions), mass))
        .collect()
}
