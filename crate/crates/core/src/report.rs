//! Prediction profiles for scenario variants and their contrasts.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{Interaction, SpeakerHypothesis, SpeakerParams};
use crate::belief::{nested_values, BeliefState, ExactMatch};
use crate::dist::expectation;
use crate::error::ModelError;
use crate::history::{enumerate_histories_capped, History, HistorySet, DEFAULT_HISTORY_CAP};
use crate::scenario::{
    build_world, hypotheses_from, script_variant, CompiledScenario, HistoryVariant, HypothesisSpec,
    ScenarioSpec, SpeakerModelSpec, VariantScript, UTTERANCE_STEP,
};
use crate::semantics::LiteralListener;
use crate::Error;

/// Below this magnitude a belief change counts as no change.
pub const SIGNATURE_TOLERANCE: f64 = 1e-6;

/// How each profile field relates to the experiment's questions.
pub const QUESTION_MAP: &[(&str, &str)] = &[
    ("Q1", "delta_eval"),
    ("Q2", "listener_expected_speaker_expected_delta_eval"),
    ("Q3", "listener_belief_speaker_wanted_harm"),
    ("Q4", "listener_expected_speaker_knew_modification"),
    ("Q5", "speaker_knew_modification"),
    ("Q6", "speaker_expected_delta_eval"),
    ("Q7", "listener_belief_speaker_wanted_harm"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signature {
    /// The listener is hurt but the speaker did not expect it.
    FauxPas,
    /// The listener is hurt and the speaker expected it.
    ExpectedInsult,
    /// The listener is hurt and the speaker expected the opposite.
    Unexpected,
    NotOffensive,
}

impl Signature {
    pub fn classify(delta_eval: f64, speaker_expected_delta_eval: f64) -> Signature {
        let tol = SIGNATURE_TOLERANCE;
        if delta_eval >= -tol {
            Signature::NotOffensive
        } else if speaker_expected_delta_eval.abs() < tol {
            Signature::FauxPas
        } else if speaker_expected_delta_eval < -tol {
            Signature::ExpectedInsult
        } else {
            Signature::Unexpected
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Signature::FauxPas => "faux-pas",
            Signature::ExpectedInsult => "expected-insult",
            Signature::Unexpected => "unexpected",
            Signature::NotOffensive => "not-offensive",
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionProfile {
    pub variant: HistoryVariant,
    pub delta_info: f64,
    pub delta_eval: f64,
    pub speaker_expected_delta_info: f64,
    pub speaker_expected_delta_eval: f64,
    pub listener_expected_speaker_expected_delta_eval: f64,
    pub listener_belief_speaker_wanted_harm: f64,
    pub speaker_knew_modification: f64,
    pub listener_expected_speaker_knew_modification: f64,
    /// Sophisticated listener's posterior over speaker goal hypotheses.
    pub hypothesis_posterior: BTreeMap<String, f64>,
    pub signature: Signature,
}

impl PredictionProfile {
    pub const FIELDS: [&'static str; 8] = [
        "delta_info",
        "delta_eval",
        "speaker_expected_delta_info",
        "speaker_expected_delta_eval",
        "listener_expected_speaker_expected_delta_eval",
        "listener_belief_speaker_wanted_harm",
        "speaker_knew_modification",
        "listener_expected_speaker_knew_modification",
    ];

    /// Numeric fields in `FIELDS` order.
    pub fn values(&self) -> [f64; 8] {
        [
            self.delta_info,
            self.delta_eval,
            self.speaker_expected_delta_info,
            self.speaker_expected_delta_eval,
            self.listener_expected_speaker_expected_delta_eval,
            self.listener_belief_speaker_wanted_harm,
            self.speaker_knew_modification,
            self.listener_expected_speaker_knew_modification,
        ]
    }

    pub fn fields(&self) -> Vec<(&'static str, f64)> {
        Self::FIELDS.iter().copied().zip(self.values()).collect()
    }

    pub fn is_faux_pas(&self) -> bool {
        self.signature == Signature::FauxPas
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantComparison {
    pub shared: PredictionProfile,
    pub diverging: PredictionProfile,
    /// Shared minus diverging, per numeric field.
    pub contrasts: BTreeMap<String, f64>,
}

impl VariantComparison {
    pub fn new(shared: PredictionProfile, diverging: PredictionProfile) -> Self {
        let contrasts = PredictionProfile::FIELDS
            .iter()
            .zip(shared.values().iter().zip(diverging.values()))
            .map(|(name, (s, d))| (name.to_string(), s - d))
            .collect();
        VariantComparison {
            shared,
            diverging,
            contrasts,
        }
    }

    pub fn contrast(&self, field: &str) -> Option<f64> {
        self.contrasts.get(field).copied()
    }
}

/// The speaker model and listener hypotheses a profile is computed under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub speaker: SpeakerModelSpec,
    pub hypotheses: Vec<HypothesisSpec>,
    /// Enumeration stops with an explosion-guard error beyond this many
    /// histories.
    pub history_cap: usize,
}

impl ModelSettings {
    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        ModelSettings {
            speaker: spec.speaker_model.clone(),
            hypotheses: spec.hypotheses.clone(),
            history_cap: DEFAULT_HISTORY_CAP,
        }
    }
}

/// Everything computed for one variant, before it is summarized.
pub struct VariantAnalysis {
    pub compiled: CompiledScenario,
    pub script: VariantScript,
    pub interaction: Interaction,
    /// Actual histories consistent with the variant's premise.
    pub actual: HistorySet,
    pub params: SpeakerParams,
    pub hypotheses: Vec<SpeakerHypothesis>,
}

impl VariantAnalysis {
    pub fn new(
        spec: &ScenarioSpec,
        variant: HistoryVariant,
        settings: &ModelSettings,
    ) -> Result<Self, Error> {
        let compiled = build_world(spec)?;
        let script = script_variant(&compiled, variant);
        let horizon = spec.horizon;
        let cap = settings.history_cap;
        let common = Arc::new(enumerate_histories_capped(&compiled.world, horizon, &script.common, cap)?);
        let perception = compiled.perception_variable();
        let perceived = script.perceived;
        let actual = enumerate_histories_capped(&compiled.world, horizon, &script.actual, cap)?
            .filtered(|h| perception.extract(h) == perceived)?;
        let interaction = Interaction::new(
            common,
            compiled.semantics.clone(),
            compiled.ids.speaker,
            compiled.ids.listener,
            UTTERANCE_STEP,
        )?;
        let m = &settings.speaker;
        let params = compiled.speaker_params(m.theta_info, m.theta_eval, m.rationality)?;
        let hypotheses = hypotheses_from(&compiled, &settings.hypotheses, m.rationality)?;
        Ok(VariantAnalysis {
            compiled,
            script,
            interaction,
            actual,
            params,
            hypotheses,
        })
    }

    pub fn variant(&self) -> HistoryVariant {
        self.script.variant
    }

    /// Expectation of `f` over the actual histories.
    fn over_actual<F>(&self, mut f: F) -> Result<f64, ModelError>
    where
        F: FnMut(&History) -> Result<f64, ModelError>,
    {
        let total = self.actual.total_weight();
        let mut acc = 0.0;
        for h in self.actual.histories() {
            acc += h.weight / total * f(h)?;
        }
        Ok(acc)
    }

    fn listener_heard_prior(&self, history: &History) -> Result<BeliefState, ModelError> {
        let inter = &self.interaction;
        BeliefState::prior(inter.set().clone(), inter.listener())
            .condition(&history.observation_prefix(inter.listener(), UTTERANCE_STEP + 1), &ExactMatch)
    }

    fn literal(&self) -> LiteralListener<'_> {
        LiteralListener {
            semantics: &self.compiled.semantics,
        }
    }

    /// The listener's expectation, after hearing the utterance, of `f`
    /// applied to the speaker's pre-utterance belief.
    fn listener_expects<F>(&self, history: &History, mut f: F) -> Result<f64, ModelError>
    where
        F: FnMut(&BeliefState) -> Result<f64, ModelError>,
    {
        let after = self.interaction.listener_after_in(history)?;
        let dist = nested_values(&after, self.interaction.speaker(), UTTERANCE_STEP, &self.literal(), &mut f)?;
        Ok(expectation(&dist))
    }

    pub fn profile(&self) -> Result<PredictionProfile, ModelError> {
        let inter = &self.interaction;
        let params = &self.params;
        let u = self.script.utterance;
        let modified = self.compiled.modified_variable();
        let delta_info = self.over_actual(|h| {
            let before = inter.listener_before_in(h)?;
            let after = inter.listener_after_in(h)?;
            Ok(crate::agents::delta_info(&before, &after, &params.info_variable, h))
        })?;
        let delta_eval = self.over_actual(|h| {
            let before = inter.listener_before_in(h)?;
            let after = inter.listener_after_in(h)?;
            Ok(crate::agents::delta_eval(&before, &after, &params.eval_variable, params.eval_target))
        })?;
        let speaker_expected_delta_info =
            self.over_actual(|h| Ok(inter.expected_deltas(&*inter.speaker_belief_in(h)?, u, params)?.info))?;
        let speaker_expected_delta_eval =
            self.over_actual(|h| Ok(inter.expected_deltas(&*inter.speaker_belief_in(h)?, u, params)?.eval))?;
        let listener_expected_speaker_expected_delta_eval = self.over_actual(|h| {
            self.listener_expects(h, |b| Ok(inter.expected_deltas(b, u, params)?.eval))
        })?;
        let speaker_knew_modification =
            self.over_actual(|h| Ok(inter.speaker_belief_in(h)?.probability(&modified, 1)))?;
        let listener_expected_speaker_knew_modification =
            self.over_actual(|h| self.listener_expects(h, |b| Ok(b.probability(&modified, 1))))?;

        let mut hypothesis_posterior: BTreeMap<String, f64> =
            self.hypotheses.iter().map(|h| (h.name.clone(), 0.0)).collect();
        let mut wanted_harm = 0.0;
        let total = self.actual.total_weight();
        for h in self.actual.histories() {
            let w = h.weight / total;
            let posterior = inter.sophisticated_listener(&self.listener_heard_prior(h)?, u, &self.hypotheses)?;
            for (k, hyp) in self.hypotheses.iter().enumerate() {
                let mass = posterior.hypothesis_mass(k);
                *hypothesis_posterior.get_mut(&hyp.name).expect("listed") += w * mass;
                if hyp.params.theta_eval < 0.0 {
                    wanted_harm += w * mass;
                }
            }
        }
        Ok(PredictionProfile {
            variant: self.variant(),
            delta_info,
            delta_eval,
            speaker_expected_delta_info,
            speaker_expected_delta_eval,
            listener_expected_speaker_expected_delta_eval,
            listener_belief_speaker_wanted_harm: wanted_harm,
            speaker_knew_modification,
            listener_expected_speaker_knew_modification,
            hypothesis_posterior,
            signature: Signature::classify(delta_eval, speaker_expected_delta_eval),
        })
    }

    /// Every intermediate quantity under a stable key, for cross-checking
    /// against an independent enumeration.
    pub fn quantities(&self) -> Result<BTreeMap<String, f64>, ModelError> {
        let inter = &self.interaction;
        let c = &self.compiled;
        let world = &c.world;
        let ability = c.ability_variable();
        let perception = c.perception_variable();
        let initial_perception = c.initial_perception_variable();
        let modified = c.modified_variable();
        let ids = &c.ids;
        let name = |a| world.action_decl(a).name.clone();
        let mut q = BTreeMap::new();

        let prior = BeliefState::prior(inter.set().clone(), inter.listener());
        q.insert("prior.ability_high".into(), prior.probability(&ability, 0));
        q.insert("prior.perception_good".into(), prior.probability(&initial_perception, 0));
        q.insert("prior.modify".into(), prior.probability(&modified, 1));

        let actual = self.actual.histories().first().expect("actual set is non-empty");
        let beliefs = [
            ("listener_before", inter.listener_before_in(actual)?),
            ("listener_after", inter.listener_after_in(actual)?),
            ("speaker", inter.speaker_belief_in(actual)?),
        ];
        for (who, b) in &beliefs {
            q.insert(format!("{who}.ability_high"), b.probability(&ability, 0));
            q.insert(format!("{who}.perception_good"), b.probability(&perception, 0));
            q.insert(format!("{who}.modify"), b.probability(&modified, 1));
        }

        let speaker_belief = &beliefs[2].1;
        let utterances = [ids.looks_good, ids.looks_bad, ids.nothing];
        for &u in &utterances {
            let d = inter.expected_deltas(speaker_belief, u, &self.params)?;
            q.insert(format!("speaker.expected_delta_info.{}", name(u)), d.info);
            q.insert(format!("speaker.expected_delta_eval.{}", name(u)), d.eval);
            q.insert(
                format!("speaker.value.{}", name(u)),
                inter.speaker_value(u, speaker_belief, &self.params)?,
            );
        }
        let policy = inter.speaker_policy(speaker_belief, &self.params, &utterances)?;
        for &u in &utterances {
            q.insert(format!("speaker.policy.{}", name(u)), policy.mass_of(&u));
        }
        for hyp in &self.hypotheses {
            let policy = inter.speaker_policy(speaker_belief, &hyp.params, &utterances)?;
            for &u in &utterances {
                q.insert(format!("hypothesis.{}.policy.{}", hyp.name, name(u)), policy.mass_of(&u));
                q.insert(
                    format!("hypothesis.{}.value.{}", hyp.name, name(u)),
                    inter.speaker_value(u, speaker_belief, &hyp.params)?,
                );
            }
        }

        let posterior = inter.sophisticated_listener(&self.listener_heard_prior(actual)?, self.script.utterance, &self.hypotheses)?;
        for (k, hyp) in self.hypotheses.iter().enumerate() {
            q.insert(format!("sophisticated.{}", hyp.name), posterior.hypothesis_mass(k));
        }
        let history_belief = posterior.history_belief();
        q.insert("sophisticated.ability_high".into(), history_belief.probability(&ability, 0));
        q.insert("sophisticated.perception_good".into(), history_belief.probability(&perception, 0));
        q.insert("sophisticated.modify".into(), history_belief.probability(&modified, 1));

        let p = self.profile()?;
        for (field, value) in p.fields() {
            q.insert(format!("profile.{field}"), value);
        }
        Ok(q)
    }
}

pub fn prediction_profile(
    spec: &ScenarioSpec,
    variant: HistoryVariant,
    settings: &ModelSettings,
) -> Result<PredictionProfile, Error> {
    Ok(VariantAnalysis::new(spec, variant, settings)?.profile()?)
}

pub fn compare_variants(spec: &ScenarioSpec, settings: &ModelSettings) -> Result<VariantComparison, Error> {
    Ok(VariantComparison::new(
        prediction_profile(spec, HistoryVariant::Shared, settings)?,
        prediction_profile(spec, HistoryVariant::Diverging, settings)?,
    ))
}

/// Engine quantities for one variant, keys prefixed with the variant name.
pub fn engine_quantities(
    spec: &ScenarioSpec,
    variant: HistoryVariant,
    settings: &ModelSettings,
) -> Result<BTreeMap<String, f64>, Error> {
    let q = VariantAnalysis::new(spec, variant, settings)?.quantities()?;
    Ok(q.into_iter().map(|(k, v)| (format!("{variant}.{k}"), v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_classification() {
        assert_eq!(Signature::classify(-0.5, 0.0), Signature::FauxPas);
        assert_eq!(Signature::classify(-0.5, -0.4), Signature::ExpectedInsult);
        assert_eq!(Signature::classify(-0.5, 0.4), Signature::Unexpected);
        assert_eq!(Signature::classify(0.0, -0.4), Signature::NotOffensive);
        assert_eq!(Signature::classify(-0.5, 5e-7), Signature::FauxPas);
    }

    #[test]
    fn self_comparison_has_zero_contrasts() {
        let spec = ScenarioSpec::default();
        let settings = ModelSettings::from_spec(&spec);
        let p = prediction_profile(&spec, HistoryVariant::Shared, &settings).unwrap();
        let cmp = VariantComparison::new(p.clone(), p);
        assert!(cmp.contrasts.values().all(|v| *v == 0.0));
    }
}
