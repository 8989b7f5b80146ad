use std::collections::HashMap;
use std::sync::Arc;

use fauxpas_core::fixtures::random_world;
use fauxpas_core::history::{enumerate_histories_capped, observation_sequence};
use fauxpas_core::scenario::{build_world, script_variant};
use fauxpas_core::world::{JointAction, JointObservation, State};
use fauxpas_core::{enumerate_histories, HistoryVariant, ModelError, ScenarioSpec, Script};
use proptest::prelude::*;

type PathKey = (Vec<State>, Vec<JointAction>, Vec<JointObservation>);

fn key(h: &fauxpas_core::History) -> PathKey {
    (h.states.clone(), h.actions.clone(), h.observations.clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn total_mass_is_one(seed in any::<u64>(), horizon in 0usize..=2) {
        let rw = random_world(seed);
        let set = enumerate_histories(&rw.world, horizon, &Script::new()).unwrap();
        prop_assert!(set.len() <= 200);
        prop_assert!((set.total_weight() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prefix_consistency(seed in any::<u64>()) {
        let rw = random_world(seed);
        let long = enumerate_histories(&rw.world, 2, &Script::new()).unwrap();
        let short = enumerate_histories(&rw.world, 1, &Script::new()).unwrap();
        let mut summed: HashMap<PathKey, f64> = HashMap::new();
        for h in long.histories() {
            *summed.entry(key(&h.truncated(1))).or_default() += h.weight;
        }
        prop_assert_eq!(summed.len(), short.len());
        for h in short.histories() {
            let s = summed[&key(h)];
            prop_assert!((s - h.weight).abs() < 1e-12, "{} vs {}", s, h.weight);
        }
    }

    #[test]
    fn projection_soundness(seed in any::<u64>()) {
        let rw = random_world(seed);
        let set = enumerate_histories(&rw.world, 2, &Script::new()).unwrap();
        for h in set.histories() {
            for agent in rw.world.agents() {
                let seq = observation_sequence(h, agent);
                prop_assert_eq!(seq.len(), h.len());
                for (t, z) in seq.iter().enumerate() {
                    prop_assert_eq!(z, h.observations[t].of(agent));
                }
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic(seed in any::<u64>()) {
        let a = enumerate_histories(&random_world(seed).world, 2, &Script::new()).unwrap();
        let b = enumerate_histories(&random_world(seed).world, 2, &Script::new()).unwrap();
        prop_assert_eq!(a.histories(), b.histories());
    }
}

#[test]
fn curtains_history_counts() {
    let compiled = build_world(&ScenarioSpec::default()).unwrap();
    let world = &compiled.world;
    let full = enumerate_histories(world, 2, &Script::new()).unwrap();
    assert!(full.len() < 1000);
    assert!((full.total_weight() - 1.0).abs() < 1e-9);
    for variant in HistoryVariant::ALL {
        let script = script_variant(&compiled, variant);
        assert_eq!(enumerate_histories(world, 2, &script.common).unwrap().len(), 24);
        // ability x initial look; the modified look is determined by ability
        assert_eq!(enumerate_histories(world, 2, &script.actual).unwrap().len(), 4);
    }
}

#[test]
fn script_beyond_horizon_is_rejected() {
    let compiled = build_world(&ScenarioSpec::default()).unwrap();
    let script = script_variant(&compiled, HistoryVariant::Shared);
    assert!(matches!(
        enumerate_histories(&compiled.world, 1, &script.actual),
        Err(ModelError::InvalidScript(_))
    ));
}

#[test]
fn explosion_guard_trips() {
    let compiled = build_world(&ScenarioSpec::default()).unwrap();
    let world: &Arc<_> = &compiled.world;
    assert!(matches!(
        enumerate_histories_capped(world, 2, &Script::new(), 10),
        Err(ModelError::ExplosionGuard { cap: 10, .. })
    ));
}
