use std::sync::Arc;

use fauxpas_core::agents::sophisticated_posterior;
use fauxpas_core::scenario::{build_world, script_variant, UTTERANCE_STEP};
use fauxpas_core::{
    enumerate_histories, luce_choice, speaker_reward, BeliefState, ExactMatch, HistoryVariant,
    Interaction, LiteralSpeaker, ScenarioSpec, SpeakerHypothesis,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn luce_normalizes(values in vec(-5.0f64..5.0, 1..6), rationality in 0.1f64..10.0) {
        let p = luce_choice(&values, rationality);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn luce_shift_invariance(values in vec(-5.0f64..5.0, 1..6), shift in -100.0f64..100.0, rationality in 0.1f64..10.0) {
        let p = luce_choice(&values, rationality);
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let q = luce_choice(&shifted, rationality);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn luce_argmax_under_scaling(values in vec(-5.0f64..5.0, 2..6), scale in 0.01f64..50.0, rationality in 0.1f64..10.0) {
        let p = luce_choice(&values, rationality);
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let q = luce_choice(&scaled, rationality);
        prop_assert_eq!(argmax(&p), argmax(&values));
        prop_assert_eq!(argmax(&q), argmax(&values));
    }

    #[test]
    fn luce_uniform_on_ties(value in -5.0f64..5.0, n in 1usize..8, rationality in 0.1f64..10.0) {
        let p = luce_choice(&vec![value; n], rationality);
        for x in p {
            prop_assert!((x - 1.0 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn reward_is_linear(ti in -3.0f64..3.0, te in -3.0f64..3.0, di in -1.0f64..1.0, de in -1.0f64..1.0, k in -2.0f64..2.0) {
        let compiled = build_world(&ScenarioSpec::default()).unwrap();
        let p = compiled.speaker_params(ti, te, 1.0).unwrap();
        prop_assert_eq!(speaker_reward(&p, di, de), ti * di + te * de);
        let lhs = speaker_reward(&p, di + k, de) - speaker_reward(&p, di, de);
        prop_assert!((lhs - ti * k).abs() < 1e-12);
    }
}

fn interaction(variant: HistoryVariant) -> (fauxpas_core::CompiledScenario, Interaction, fauxpas_core::History) {
    let compiled = build_world(&ScenarioSpec::default()).unwrap();
    let script = script_variant(&compiled, variant);
    let set = Arc::new(enumerate_histories(&compiled.world, 2, &script.common).unwrap());
    let perception = compiled.perception_variable();
    let actual = enumerate_histories(&compiled.world, 2, &script.actual)
        .unwrap()
        .filtered(|h| perception.extract(h) == script.perceived)
        .unwrap()
        .histories()[0]
        .clone();
    let inter = Interaction::new(
        set,
        compiled.semantics.clone(),
        compiled.ids.speaker,
        compiled.ids.listener,
        UTTERANCE_STEP,
    )
    .unwrap();
    (compiled, inter, actual)
}

#[test]
fn sincere_speaker_prefers_the_true_utterance() {
    for variant in HistoryVariant::ALL {
        let (compiled, inter, actual) = interaction(variant);
        let belief = inter.speaker_belief_in(&actual).unwrap();
        let perception = compiled.perception_variable();
        assert!((belief.probability(&perception, 1) - 1.0).abs() < 1e-12);
        let params = compiled.speaker_params(1.0, 0.0, 3.0).unwrap();
        let bad = inter.speaker_value(compiled.ids.looks_bad, &belief, &params).unwrap();
        let good = inter.speaker_value(compiled.ids.looks_good, &belief, &params).unwrap();
        assert!(bad > good, "{variant}: {bad} <= {good}");
        let policy = inter
            .speaker_policy(&belief, &params, &inter.utterances())
            .unwrap();
        assert_eq!(*policy.argmax(), compiled.ids.looks_bad);
    }
}

#[test]
fn literal_speaker_makes_the_sophisticated_listener_literal() {
    let (compiled, inter, actual) = interaction(HistoryVariant::Shared);
    let listener = compiled.ids.listener;
    let prior = BeliefState::prior(inter.set().clone(), listener)
        .condition(&actual.observation_prefix(listener, UTTERANCE_STEP + 1), &ExactMatch)
        .unwrap();
    let only = SpeakerHypothesis {
        name: "literal".into(),
        params: compiled.default_speaker_params().unwrap(),
        prior_mass: 1.0,
    };
    let speaker = LiteralSpeaker {
        semantics: &compiled.semantics,
    };
    let joint = sophisticated_posterior(&prior, compiled.ids.looks_bad, &[only], &speaker).unwrap();
    let literal = inter.listener_after_in(&actual).unwrap();
    let soph = joint.history_belief();
    let a: Vec<(usize, f64)> = soph.masses().collect();
    let b: Vec<(usize, f64)> = literal.masses().collect();
    assert_eq!(a.len(), b.len());
    for ((i, x), (j, y)) in a.iter().zip(&b) {
        assert_eq!(i, j);
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn sophisticated_marginals_are_normalized() {
    let (compiled, inter, actual) = interaction(HistoryVariant::Diverging);
    let listener = compiled.ids.listener;
    let prior = BeliefState::prior(inter.set().clone(), listener)
        .condition(&actual.observation_prefix(listener, UTTERANCE_STEP + 1), &ExactMatch)
        .unwrap();
    let hyps = compiled.hypotheses().unwrap();
    let joint = inter.sophisticated_listener(&prior, compiled.ids.looks_bad, &hyps).unwrap();
    assert!((joint.hypothesis_marginal().total() - 1.0).abs() < 1e-9);
    let hist: f64 = joint.history_belief().masses().map(|m| m.1).sum();
    assert!((hist - 1.0).abs() < 1e-9);
}

#[test]
fn invalid_hypothesis_priors_are_rejected() {
    let (compiled, inter, actual) = interaction(HistoryVariant::Shared);
    let prior = BeliefState::prior(inter.set().clone(), compiled.ids.listener)
        .condition(&actual.observation_prefix(compiled.ids.listener, 2), &ExactMatch)
        .unwrap();
    let mut hyps = compiled.hypotheses().unwrap();
    hyps[0].prior_mass = 0.5;
    assert!(inter.sophisticated_listener(&prior, compiled.ids.looks_bad, &hyps).is_err());
}
