//! Seeded random small worlds for property tests and benchmarks.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::semantics::UtteranceSemantics;
use crate::world::{
    ActionId, ActionKind, AgentId, JointAction, JointObservation, Observation, Outcome, State,
    TransitionRule, VarId, WorldModel,
};

/// A random two-agent world with at most 200 histories at `horizon`.
#[derive(Debug, Clone)]
pub struct RandomWorld {
    pub world: Arc<WorldModel>,
    pub horizon: usize,
    pub semantics: UtteranceSemantics,
    pub observer: AgentId,
    pub speaker: AgentId,
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn all_states(domains: &[usize]) -> Vec<State> {
    let mut out = vec![Vec::new()];
    for &d in domains {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..d).map(move |v| {
                    let mut s = prefix.clone();
                    s.push(v);
                    s
                })
            })
            .collect();
    }
    out.into_iter().map(State::new).collect()
}

/// Builds the world for `seed`; the same seed always yields the same world.
pub fn random_world(seed: u64) -> RandomWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_vars = rng.random_range(1..=2usize);
    let domains: Vec<usize> = (0..n_vars).map(|_| rng.random_range(2..=3usize)).collect();
    let mut b = WorldModel::builder();
    let vars: Vec<VarId> = domains
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let labels: Vec<String> = (0..d).map(|v| format!("v{v}")).collect();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            b.variable(&format!("x{i}"), &refs)
        })
        .collect();
    let observer = b.agent("observer");
    let speaker = b.agent("speaker");
    let o_noop = b.action(observer, "noop", ActionKind::Noop);
    let o_act = b.action(observer, "act", ActionKind::Physical);
    let s_noop = b.action(speaker, "noop", ActionKind::Noop);
    let s_say = b.action(speaker, "say", ActionKind::Utterance);
    let speaker_prior = |rng: &mut ChaCha8Rng| {
        let w = random_weights(rng, 2);
        vec![(s_noop, w[0]), (s_say, w[1])]
    };
    let w = random_weights(&mut rng, 2);
    b.action_prior(observer, vec![vec![(o_noop, w[0]), (o_act, w[1])]]);
    let sp = vec![speaker_prior(&mut rng), speaker_prior(&mut rng)];
    b.action_prior(speaker, sp);

    let states = all_states(&domains);
    let n_initial = rng.random_range(1..=2usize.min(states.len()));
    let initial_weights = random_weights(&mut rng, n_initial);
    let mut used = Vec::new();
    for w in initial_weights {
        let mut s;
        loop {
            s = states[rng.random_range(0..states.len())].clone();
            if !used.contains(&s) {
                break;
            }
        }
        used.push(s.clone());
        b.initial_state(s, w);
    }

    let mut table: HashMap<(State, JointAction), Vec<Outcome>> = HashMap::new();
    for s in &states {
        for &oa in &[o_noop, o_act] {
            for &sa in &[s_noop, s_say] {
                let joint = JointAction::new(vec![oa, sa]);
                let n_out = rng.random_range(1..=2usize);
                let weights = random_weights(&mut rng, n_out);
                let mut outcomes: Vec<Outcome> = Vec::new();
                for p in weights {
                    let next = states[rng.random_range(0..states.len())].clone();
                    let mut per_agent = Vec::new();
                    for (me, mine, theirs, other) in [(observer, oa, sa, speaker), (speaker, sa, oa, observer)] {
                        let mut z = Observation::empty();
                        z.perceive_action(me, mine);
                        if rng.random_bool(0.6) {
                            z.perceive_action(other, theirs);
                        }
                        for &v in &vars {
                            if rng.random_bool(0.5) {
                                z.perceive_variable(v, next.get(v));
                            }
                        }
                        per_agent.push(z);
                    }
                    let observation = JointObservation::new(per_agent);
                    if let Some(o) = outcomes
                        .iter_mut()
                        .find(|o| o.next == next && o.observation == observation)
                    {
                        o.probability += p;
                    } else {
                        outcomes.push(Outcome {
                            next,
                            observation,
                            probability: p,
                        });
                    }
                }
                table.insert((s.clone(), joint), outcomes);
            }
        }
    }
    let table = Arc::new(table);
    b.rule(TransitionRule::new("table", |_, _| true, move |s, a| {
        table[&(s.clone(), a.clone())].clone()
    }));
    let world = b.build().expect("random worlds are well formed");
    let target = rng.random_range(0..domains[0]);
    let first = vars[0];
    let epsilon = rng.random_range(0.01..0.45);
    let semantics = UtteranceSemantics::new(epsilon)
        .expect("epsilon in range")
        .define(s_say, move |h| h.final_state().get(first) == target);
    RandomWorld {
        world: Arc::new(world),
        horizon: 2,
        semantics,
        observer,
        speaker,
    }
}

/// The speaker action used as an utterance in random worlds.
pub fn say_action(world: &RandomWorld) -> ActionId {
    world.world.action(world.speaker, "say").expect("declared")
}
