//! Speaker and listener models.
//!
//! The speaker scores each utterance by the expected change it causes in a
//! literal listener's beliefs about an informative variable and an
//! evaluative variable, then picks by exponentiated value. The
//! sophisticated listener inverts that speaker jointly over histories and
//! speaker goal hypotheses.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use crate::belief::{BeliefState, QueryVariable};
use crate::dist::{Dist, MASS_TOLERANCE};
use crate::error::ModelError;
use crate::history::{History, HistorySet};
use crate::semantics::{literal_utterance_likelihood, LiteralListener, UtteranceSemantics};
use crate::world::{ActionId, ActionKind, AgentId, Observation};

/// Goal weights and choice sharpness of a speaker.
#[derive(Debug, Clone)]
pub struct SpeakerParams {
    pub theta_info: f64,
    pub theta_eval: f64,
    pub rationality: f64,
    pub info_variable: QueryVariable,
    pub eval_variable: QueryVariable,
    /// Index into `eval_variable.values` the listener wants to hold.
    pub eval_target: usize,
}

impl SpeakerParams {
    pub fn new(
        theta_info: f64,
        theta_eval: f64,
        rationality: f64,
        info_variable: QueryVariable,
        eval_variable: QueryVariable,
        eval_target: usize,
    ) -> Result<Self, ModelError> {
        if !(rationality > 0.0 && rationality.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "rationality must be positive, got {rationality}"
            )));
        }
        if !theta_info.is_finite() || !theta_eval.is_finite() {
            return Err(ModelError::InvalidParameter("theta weights must be finite".into()));
        }
        if eval_target >= eval_variable.values.len() {
            return Err(ModelError::InvalidParameter(format!(
                "eval target {eval_target} outside `{}`",
                eval_variable.name
            )));
        }
        Ok(SpeakerParams {
            theta_info,
            theta_eval,
            rationality,
            info_variable,
            eval_variable,
            eval_target,
        })
    }

    pub fn with_weights(&self, theta_info: f64, theta_eval: f64) -> SpeakerParams {
        SpeakerParams {
            theta_info,
            theta_eval,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpeakerHypothesis {
    pub name: String,
    pub params: SpeakerParams,
    pub prior_mass: f64,
}

/// Listener belief change in the true value of the informative variable.
pub fn delta_info(
    before: &BeliefState,
    after: &BeliefState,
    variable: &QueryVariable,
    true_value_of: &History,
) -> f64 {
    let truth = variable.extract(true_value_of);
    after.probability(variable, truth) - before.probability(variable, truth)
}

/// Listener belief change in the target value of the evaluative variable.
pub fn delta_eval(
    before: &BeliefState,
    after: &BeliefState,
    variable: &QueryVariable,
    target: usize,
) -> f64 {
    after.probability(variable, target) - before.probability(variable, target)
}

pub fn speaker_reward(params: &SpeakerParams, d_info: f64, d_eval: f64) -> f64 {
    params.theta_info * d_info + params.theta_eval * d_eval
}

/// `P(i) ∝ exp(rationality * values[i])`, computed relative to the maximum.
pub fn luce_choice(values: &[f64], rationality: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let strengths: Vec<f64> = values
        .iter()
        .map(|v| (rationality * (v - max)).exp())
        .collect();
    let total: f64 = strengths.iter().sum();
    strengths.into_iter().map(|s| s / total).collect()
}

/// Expected listener belief changes for one utterance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExpectedDeltas {
    pub info: f64,
    pub eval: f64,
}

/// A speaker/listener pair over a shared history set, with the utterance
/// made at `utterance_step`. Beliefs conditioned on an observation prefix
/// are memoized.
pub struct Interaction {
    set: Arc<HistorySet>,
    semantics: UtteranceSemantics,
    speaker: AgentId,
    listener: AgentId,
    utterance_step: usize,
    listener_beliefs: RefCell<HashMap<Vec<Observation>, Rc<BeliefState>>>,
    speaker_beliefs: RefCell<HashMap<Vec<Observation>, Rc<BeliefState>>>,
}

impl Interaction {
    pub fn new(
        set: Arc<HistorySet>,
        semantics: UtteranceSemantics,
        speaker: AgentId,
        listener: AgentId,
        utterance_step: usize,
    ) -> Result<Self, ModelError> {
        if speaker == listener {
            return Err(ModelError::InvalidParameter("speaker and listener must differ".into()));
        }
        if utterance_step >= set.horizon() {
            return Err(ModelError::InvalidParameter(format!(
                "utterance step {utterance_step} is not before horizon {}",
                set.horizon()
            )));
        }
        semantics.covers(set.world())?;
        Ok(Interaction {
            set,
            semantics,
            speaker,
            listener,
            utterance_step,
            listener_beliefs: RefCell::default(),
            speaker_beliefs: RefCell::default(),
        })
    }

    pub fn set(&self) -> &Arc<HistorySet> {
        &self.set
    }

    pub fn semantics(&self) -> &UtteranceSemantics {
        &self.semantics
    }

    pub fn speaker(&self) -> AgentId {
        self.speaker
    }

    pub fn listener(&self) -> AgentId {
        self.listener
    }

    pub fn utterance_step(&self) -> usize {
        self.utterance_step
    }

    /// The speaker's utterance-kind actions in declaration order.
    pub fn utterances(&self) -> Vec<ActionId> {
        let world = self.set.world();
        world
            .actions_of(self.speaker)
            .filter(|a| world.action_decl(*a).kind == ActionKind::Utterance)
            .collect()
    }

    fn literal(&self) -> LiteralListener<'_> {
        LiteralListener {
            semantics: &self.semantics,
        }
    }

    fn cached(
        &self,
        cache: &RefCell<HashMap<Vec<Observation>, Rc<BeliefState>>>,
        owner: AgentId,
        observed: &[Observation],
    ) -> Result<Rc<BeliefState>, ModelError> {
        if let Some(b) = cache.borrow().get(observed) {
            return Ok(b.clone());
        }
        let belief = Rc::new(BeliefState::prior(self.set.clone(), owner).condition(observed, &self.literal())?);
        cache.borrow_mut().insert(observed.to_vec(), belief.clone());
        Ok(belief)
    }

    /// Literal listener's belief after the given observations.
    pub fn listener_belief(&self, observed: &[Observation]) -> Result<Rc<BeliefState>, ModelError> {
        self.cached(&self.listener_beliefs, self.listener, observed)
    }

    pub fn speaker_belief(&self, observed: &[Observation]) -> Result<Rc<BeliefState>, ModelError> {
        self.cached(&self.speaker_beliefs, self.speaker, observed)
    }

    /// Speaker's belief just before speaking, in the given history.
    pub fn speaker_belief_in(&self, history: &History) -> Result<Rc<BeliefState>, ModelError> {
        self.speaker_belief(&history.observation_prefix(self.speaker, self.utterance_step))
    }

    /// Listener's belief just before the utterance, in the given history.
    pub fn listener_before_in(&self, history: &History) -> Result<Rc<BeliefState>, ModelError> {
        self.listener_belief(&history.observation_prefix(self.listener, self.utterance_step))
    }

    /// Listener's belief just after the utterance step, in the given history.
    pub fn listener_after_in(&self, history: &History) -> Result<Rc<BeliefState>, ModelError> {
        self.listener_belief(&history.observation_prefix(self.listener, self.utterance_step + 1))
    }

    /// Listener before/after beliefs if the speaker said `utterance` at the
    /// utterance step of `history` instead, one entry per transition outcome.
    pub fn counterfactual_listener(
        &self,
        history: &History,
        utterance: ActionId,
    ) -> Result<Vec<(f64, Rc<BeliefState>, Rc<BeliefState>)>, ModelError> {
        let t = self.utterance_step;
        let world = self.set.world();
        let prefix = history.observation_prefix(self.listener, t);
        let before = self.listener_belief(&prefix)?;
        let action = history.actions[t].with(self.speaker, utterance);
        let outcomes = world.transition(history.state(t), &action)?;
        let mut effects = Vec::with_capacity(outcomes.len());
        for ((_, z), p) in outcomes.iter() {
            if p <= 0.0 {
                continue;
            }
            let mut observed = prefix.clone();
            observed.push(z.of(self.listener).clone());
            effects.push((p, before.clone(), self.listener_belief(&observed)?));
        }
        Ok(effects)
    }

    /// Belief changes the utterance would cause if `history` were actual.
    pub fn deltas_in(
        &self,
        history: &History,
        utterance: ActionId,
        params: &SpeakerParams,
    ) -> Result<ExpectedDeltas, ModelError> {
        let mut out = ExpectedDeltas::default();
        for (p, before, after) in self.counterfactual_listener(history, utterance)? {
            out.info += p * delta_info(&before, &after, &params.info_variable, history);
            out.eval += p * delta_eval(&before, &after, &params.eval_variable, params.eval_target);
        }
        Ok(out)
    }

    /// `E_{b^S}[Δ^Info]` and `E_{b^S}[Δ^Eval]` for one utterance.
    pub fn expected_deltas(
        &self,
        speaker_belief: &BeliefState,
        utterance: ActionId,
        params: &SpeakerParams,
    ) -> Result<ExpectedDeltas, ModelError> {
        let mut out = ExpectedDeltas::default();
        for (h, mass) in speaker_belief.histories() {
            let d = self.deltas_in(h, utterance, params)?;
            out.info += mass * d.info;
            out.eval += mass * d.eval;
        }
        Ok(out)
    }

    /// `V^S(u) = E_{b^S}[R^S]` with one-step lookahead.
    pub fn speaker_value(
        &self,
        utterance: ActionId,
        speaker_belief: &BeliefState,
        params: &SpeakerParams,
    ) -> Result<f64, ModelError> {
        let mut value = 0.0;
        for (h, mass) in speaker_belief.histories() {
            let d = self.deltas_in(h, utterance, params)?;
            value += mass * speaker_reward(params, d.info, d.eval);
        }
        Ok(value)
    }

    pub fn speaker_policy(
        &self,
        speaker_belief: &BeliefState,
        params: &SpeakerParams,
        utterances: &[ActionId],
    ) -> Result<Dist<ActionId>, ModelError> {
        if utterances.is_empty() {
            return Err(ModelError::InvalidParameter("speaker has no utterances".into()));
        }
        let values = utterances
            .iter()
            .map(|u| self.speaker_value(*u, speaker_belief, params))
            .collect::<Result<Vec<f64>, _>>()?;
        let probs = luce_choice(&values, params.rationality);
        Ok(Dist::from_weights(utterances.iter().copied().zip(probs))?)
    }

    /// Joint posterior over (history, goal hypothesis) after hearing `heard`.
    /// `listener_prior` should already be conditioned, without the literal
    /// noise term, on everything the listener observed including the
    /// utterance itself.
    pub fn sophisticated_listener(
        &self,
        listener_prior: &BeliefState,
        heard: ActionId,
        hypotheses: &[SpeakerHypothesis],
    ) -> Result<JointPosterior, ModelError> {
        let speaker = RationalSpeaker::new(self, self.utterances());
        sophisticated_posterior(listener_prior, heard, hypotheses, &speaker)
    }
}

/// Probability that a speaker with a given goal hypothesis says `heard` in
/// a given history.
pub trait UtteranceProducer {
    fn probability(
        &self,
        history: &History,
        hypothesis: &SpeakerHypothesis,
        hypothesis_index: usize,
        heard: ActionId,
    ) -> Result<f64, ModelError>;
}

/// The value-maximizing speaker, memoized by speaker observation prefix.
pub struct RationalSpeaker<'a> {
    interaction: &'a Interaction,
    utterances: Vec<ActionId>,
    policies: RefCell<HashMap<(Vec<Observation>, usize), Dist<ActionId>>>,
}

impl<'a> RationalSpeaker<'a> {
    pub fn new(interaction: &'a Interaction, utterances: Vec<ActionId>) -> Self {
        RationalSpeaker {
            interaction,
            utterances,
            policies: RefCell::default(),
        }
    }
}

impl UtteranceProducer for RationalSpeaker<'_> {
    fn probability(
        &self,
        history: &History,
        hypothesis: &SpeakerHypothesis,
        hypothesis_index: usize,
        heard: ActionId,
    ) -> Result<f64, ModelError> {
        let inter = self.interaction;
        let key = (
            history.observation_prefix(inter.speaker, inter.utterance_step),
            hypothesis_index,
        );
        if let Some(policy) = self.policies.borrow().get(&key) {
            return Ok(policy.mass_of(&heard));
        }
        let belief = inter.speaker_belief(&key.0)?;
        let policy = inter.speaker_policy(&belief, &hypothesis.params, &self.utterances)?;
        let p = policy.mass_of(&heard);
        self.policies.borrow_mut().insert(key, policy);
        Ok(p)
    }
}

/// A speaker whose production probability is the literal likelihood.
pub struct LiteralSpeaker<'a> {
    pub semantics: &'a UtteranceSemantics,
}

impl UtteranceProducer for LiteralSpeaker<'_> {
    fn probability(
        &self,
        history: &History,
        _hypothesis: &SpeakerHypothesis,
        _hypothesis_index: usize,
        heard: ActionId,
    ) -> Result<f64, ModelError> {
        literal_utterance_likelihood(heard, self.semantics, history)
    }
}

/// Posterior ∝ prior(h) · prior(θ) · P(heard | h, θ).
pub fn sophisticated_posterior(
    listener_prior: &BeliefState,
    heard: ActionId,
    hypotheses: &[SpeakerHypothesis],
    speaker: &dyn UtteranceProducer,
) -> Result<JointPosterior, ModelError> {
    if hypotheses.is_empty() {
        return Err(ModelError::InvalidParameter("no speaker hypotheses".into()));
    }
    let total_prior: f64 = hypotheses.iter().map(|h| h.prior_mass).sum();
    if hypotheses.iter().any(|h| !(h.prior_mass >= 0.0)) || (total_prior - 1.0).abs() > MASS_TOLERANCE {
        return Err(ModelError::InvalidParameter(format!(
            "hypothesis priors must be non-negative and sum to 1, got {total_prior}"
        )));
    }
    let mut entries = Vec::new();
    for (index, mass) in listener_prior.masses() {
        let history = listener_prior.set().get(index);
        for (k, hyp) in hypotheses.iter().enumerate() {
            let w = mass * hyp.prior_mass * speaker.probability(history, hyp, k, heard)?;
            if w > 0.0 {
                entries.push((index, k, w));
            }
        }
    }
    let total: f64 = entries.iter().map(|e| e.2).sum();
    if entries.is_empty() || !(total > 0.0) {
        return Err(ModelError::ZeroPosterior {
            owner: listener_prior
                .world()
                .agent_label(listener_prior.owner())
                .to_string(),
            steps: listener_prior.time(),
        });
    }
    for e in &mut entries {
        e.2 /= total;
    }
    Ok(JointPosterior {
        owner: listener_prior.owner(),
        set: listener_prior.set().clone(),
        conditioned_on: listener_prior.conditioned_on().to_vec(),
        hypothesis_names: hypotheses.iter().map(|h| h.name.clone()).collect(),
        entries,
    })
}

/// Normalized joint distribution over (history index, hypothesis index).
#[derive(Debug, Clone)]
pub struct JointPosterior {
    owner: AgentId,
    set: Arc<HistorySet>,
    conditioned_on: Vec<Observation>,
    hypothesis_names: Vec<String>,
    entries: Vec<(usize, usize, f64)>,
}

impl JointPosterior {
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn hypothesis_names(&self) -> &[String] {
        &self.hypothesis_names
    }

    /// Posterior over hypotheses, every hypothesis listed in input order.
    pub fn hypothesis_marginal(&self) -> Dist<String> {
        let mut mass = vec![0.0; self.hypothesis_names.len()];
        for &(_, k, m) in &self.entries {
            mass[k] += m;
        }
        Dist::from_distinct_weights(self.hypothesis_names.iter().cloned().zip(mass).collect())
            .expect("posterior is normalized")
    }

    pub fn hypothesis_mass(&self, index: usize) -> f64 {
        self.entries.iter().filter(|e| e.1 == index).map(|e| e.2).sum()
    }

    /// The history marginal as a belief of the listener.
    pub fn history_belief(&self) -> BeliefState {
        let mut by_history: Vec<(usize, f64)> = Vec::new();
        for &(i, _, m) in &self.entries {
            match by_history.last_mut() {
                Some((last, acc)) if *last == i => *acc += m,
                _ => by_history.push((i, m)),
            }
        }
        BeliefState::from_weights(self.owner, self.set.clone(), by_history, self.conditioned_on.clone())
            .expect("posterior has positive mass")
    }
}
