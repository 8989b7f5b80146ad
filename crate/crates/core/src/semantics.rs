//! Truth-functional utterance meanings and the literal listener's
//! noisy-truth likelihood.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::belief::ObservationModel;
use crate::error::ModelError;
use crate::history::History;
use crate::world::{ActionId, ActionKind, AgentId, Observation, Subject, WorldModel};

pub type Predicate = Arc<dyn Fn(&History) -> bool + Send + Sync>;

/// Denotations of every utterance plus the literal noise level `epsilon`.
#[derive(Clone)]
pub struct UtteranceSemantics {
    epsilon: f64,
    predicates: BTreeMap<ActionId, Predicate>,
}

impl fmt::Debug for UtteranceSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UtteranceSemantics")
            .field("epsilon", &self.epsilon)
            .field("utterances", &self.predicates.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl UtteranceSemantics {
    pub fn new(epsilon: f64) -> Result<Self, ModelError> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(ModelError::InvalidParameter(format!(
                "epsilon must lie in (0, 0.5), got {epsilon}"
            )));
        }
        Ok(UtteranceSemantics {
            epsilon,
            predicates: BTreeMap::new(),
        })
    }

    pub fn define<F>(mut self, utterance: ActionId, predicate: F) -> Self
    where
        F: Fn(&History) -> bool + Send + Sync + 'static,
    {
        self.predicates.insert(utterance, Arc::new(predicate));
        self
    }

    /// Always true; used for the vacuous `<nothing>` utterance.
    pub fn define_vacuous(self, utterance: ActionId) -> Self {
        self.define(utterance, |_| true)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_defined(&self, utterance: ActionId) -> bool {
        self.predicates.contains_key(&utterance)
    }

    /// Checks that every utterance-kind action of `world` has a predicate.
    pub fn covers(&self, world: &WorldModel) -> Result<(), ModelError> {
        for (i, decl) in world.actions().iter().enumerate() {
            if decl.kind == ActionKind::Utterance && !self.is_defined(ActionId(i)) {
                return Err(ModelError::UndefinedSemantics {
                    utterance: decl.name.clone(),
                });
            }
        }
        Ok(())
    }

    fn predicate(&self, utterance: ActionId) -> Result<&Predicate, ModelError> {
        self.predicates
            .get(&utterance)
            .ok_or_else(|| ModelError::UndefinedSemantics {
                utterance: format!("action #{}", utterance.0),
            })
    }
}

/// `[[u]](h)`.
pub fn evaluate_denotation(
    utterance: ActionId,
    semantics: &UtteranceSemantics,
    history: &History,
) -> Result<bool, ModelError> {
    Ok((semantics.predicate(utterance)?)(history))
}

/// `1 - eps` when the utterance is true of the history, `eps` otherwise.
pub fn literal_utterance_likelihood(
    utterance: ActionId,
    semantics: &UtteranceSemantics,
    history: &History,
) -> Result<f64, ModelError> {
    let eps = semantics.epsilon;
    Ok(if evaluate_denotation(utterance, semantics, history)? {
        1.0 - eps
    } else {
        eps
    })
}

/// Exact match on every percept, times the literal likelihood of each
/// utterance the owner hears from another agent.
#[derive(Debug, Clone, Copy)]
pub struct LiteralListener<'a> {
    pub semantics: &'a UtteranceSemantics,
}

impl ObservationModel for LiteralListener<'_> {
    fn likelihood(
        &self,
        world: &WorldModel,
        history: &History,
        owner: AgentId,
        step: usize,
        observed: &Observation,
    ) -> Result<f64, ModelError> {
        if history.observation_of(step, owner) != observed {
            return Ok(0.0);
        }
        let mut factor = 1.0;
        for (subject, value) in observed.percepts() {
            if let Subject::Action(speaker) = subject {
                let action = ActionId(value);
                if speaker != owner && world.action_decl(action).kind == ActionKind::Utterance {
                    factor *= literal_utterance_likelihood(action, self.semantics, history)?;
                }
            }
        }
        Ok(factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::State;

    fn bare_history(value: usize) -> History {
        History {
            states: vec![State::new(vec![value])],
            actions: vec![],
            observations: vec![],
            weight: 1.0,
        }
    }

    #[test]
    fn literal_likelihood_values() {
        let sem = UtteranceSemantics::new(0.05)
            .unwrap()
            .define(ActionId(0), |h| h.final_state().values()[0] == 1);
        let yes = literal_utterance_likelihood(ActionId(0), &sem, &bare_history(1)).unwrap();
        let no = literal_utterance_likelihood(ActionId(0), &sem, &bare_history(0)).unwrap();
        assert_eq!(yes, 0.95);
        assert_eq!(no, 0.05);
        assert!((yes / no - 19.0).abs() < 1e-9);
    }

    #[test]
    fn vacuous_is_always_true() {
        let sem = UtteranceSemantics::new(0.05).unwrap().define_vacuous(ActionId(3));
        for v in 0..3 {
            assert!(evaluate_denotation(ActionId(3), &sem, &bare_history(v)).unwrap());
        }
    }

    #[test]
    fn undefined_semantics_is_an_error() {
        let sem = UtteranceSemantics::new(0.05).unwrap();
        assert!(matches!(
            evaluate_denotation(ActionId(1), &sem, &bare_history(0)),
            Err(ModelError::UndefinedSemantics { .. })
        ));
    }

    #[test]
    fn epsilon_bounds() {
        assert!(UtteranceSemantics::new(0.0).is_err());
        assert!(UtteranceSemantics::new(0.5).is_err());
        assert!(UtteranceSemantics::new(1.5).is_err());
    }
}
