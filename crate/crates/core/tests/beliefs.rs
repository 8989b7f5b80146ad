use fauxpas_core::belief::other_agent_belief;
use fauxpas_core::fixtures::random_world;
use fauxpas_core::world::{AgentId, Observation, State};
use fauxpas_core::{
    enumerate_histories, BeliefState, ExactMatch, History, LiteralListener, ObservationModel,
    QueryVariable, Script, StepRef, VarId, WorldModel,
};
use proptest::prelude::*;
use std::sync::Arc;

fn prior(seed: u64, owner: usize) -> (fauxpas_core::fixtures::RandomWorld, BeliefState, History) {
    let rw = random_world(seed);
    let set = Arc::new(enumerate_histories(&rw.world, rw.horizon, &Script::new()).unwrap());
    let pick = (seed as usize) % set.len();
    let actual = set.get(pick).clone();
    (rw, BeliefState::prior(set, AgentId(owner)), actual)
}

fn weights(b: &BeliefState) -> Vec<(usize, u64)> {
    b.masses().map(|(i, m)| (i, m.to_bits())).collect()
}

/// Direct forward summation over every path of the world, independent of
/// the enumeration and belief code: returns P(X = each value | observed).
fn direct_marginal(
    world: &WorldModel,
    owner: AgentId,
    observed: &[Observation],
    var: VarId,
    literal: Option<&LiteralListener<'_>>,
) -> Vec<f64> {
    let n = world.variable_decl(var).domain.len();
    let mut acc = vec![0.0; n];
    fn walk(
        world: &WorldModel,
        owner: AgentId,
        observed: &[Observation],
        var: VarId,
        literal: Option<&LiteralListener<'_>>,
        path: &mut History,
        horizon: usize,
        acc: &mut Vec<f64>,
    ) {
        let step = path.len();
        if step == horizon {
            let mut w = path.weight;
            if let Some(model) = literal {
                for (t, z) in observed.iter().enumerate() {
                    w *= model.likelihood(world, path, owner, t, z).unwrap();
                }
            }
            acc[path.final_state().get(var)] += w;
            return;
        }
        let agents: Vec<AgentId> = world.agents().collect();
        let mut joints: Vec<(Vec<fauxpas_core::ActionId>, f64)> = vec![(Vec::new(), 1.0)];
        for &a in &agents {
            let mut next = Vec::new();
            for (acts, p) in &joints {
                for (act, q) in world.action_prior(a).at(step).iter() {
                    let mut v = acts.clone();
                    v.push(*act);
                    next.push((v, p * q));
                }
            }
            joints = next;
        }
        for (acts, p) in joints {
            let action = fauxpas_core::JointAction::new(acts);
            for ((s, z), q) in world.transition(path.final_state(), &action).unwrap().iter() {
                if step < observed.len() && literal.is_none() && z.of(owner) != &observed[step] {
                    continue;
                }
                let saved = path.weight;
                path.states.push(s.clone());
                path.actions.push(action.clone());
                path.observations.push(z.clone());
                path.weight = saved * p * q;
                walk(world, owner, observed, var, literal, path, horizon, acc);
                path.states.pop();
                path.actions.pop();
                path.observations.pop();
                path.weight = saved;
            }
        }
    }
    for (s0, p) in world.initial_state_prior().iter() {
        let mut path = History {
            states: vec![s0.clone()],
            actions: vec![],
            observations: vec![],
            weight: p,
        };
        walk(world, owner, observed, var, literal, &mut path, 2, &mut acc);
    }
    let total: f64 = acc.iter().sum();
    acc.into_iter().map(|x| x / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn sequential_equals_batch_exact_match(seed in any::<u64>(), owner in 0usize..2) {
        let (_, b, actual) = prior(seed, owner);
        let obs = actual.observation_prefix(AgentId(owner), 2);
        let batch = b.condition(&obs, &ExactMatch).unwrap();
        let seq = b.condition(&obs[..1], &ExactMatch).unwrap().condition(&obs[1..], &ExactMatch).unwrap();
        prop_assert_eq!(weights(&batch), weights(&seq));
    }

    #[test]
    fn sequential_equals_batch_literal(seed in any::<u64>(), owner in 0usize..2) {
        let (rw, b, actual) = prior(seed, owner);
        let model = LiteralListener { semantics: &rw.semantics };
        let obs = actual.observation_prefix(AgentId(owner), 2);
        let batch = b.condition(&obs, &model).unwrap();
        let seq = b.condition(&obs[..1], &model).unwrap().condition(&obs[1..], &model).unwrap();
        prop_assert_eq!(weights(&batch), weights(&seq));
        let staged = b.condition(&[], &model).unwrap().condition(&obs, &model).unwrap();
        prop_assert_eq!(weights(&batch), weights(&staged));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn support_never_grows_and_stays_normalized(seed in any::<u64>(), owner in 0usize..2) {
        let (rw, b, actual) = prior(seed, owner);
        let model = LiteralListener { semantics: &rw.semantics };
        let post = b.condition(&actual.observation_prefix(AgentId(owner), 2), &model).unwrap();
        let before: Vec<usize> = b.masses().map(|m| m.0).collect();
        prop_assert!(post.masses().all(|(i, _)| before.contains(&i)));
        let total: f64 = post.masses().map(|m| m.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for (i, var) in rw.world.variables().iter().enumerate() {
            let q = QueryVariable::state(&rw.world, VarId(i), StepRef::Final);
            let m = post.marginal(&q);
            prop_assert_eq!(m.len(), var.domain.len());
            prop_assert!((m.total() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn marginals_match_direct_summation(seed in any::<u64>(), owner in 0usize..2, literal in any::<bool>()) {
        let (rw, b, actual) = prior(seed, owner);
        let model = LiteralListener { semantics: &rw.semantics };
        let obs = actual.observation_prefix(AgentId(owner), 2);
        let post = if literal { b.condition(&obs, &model) } else { b.condition(&obs, &ExactMatch) }.unwrap();
        for i in 0..rw.world.variables().len() {
            let var = VarId(i);
            let q = QueryVariable::state(&rw.world, var, StepRef::Final);
            let direct = direct_marginal(&rw.world, AgentId(owner), &obs, var, literal.then_some(&model));
            for (v, expected) in direct.iter().enumerate() {
                prop_assert!((post.probability(&q, v) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn public_information_collapse(seed in any::<u64>(), owner in 0usize..2, steps in 0usize..=2) {
        let rw = random_world(seed);
        let public = Arc::new(rw.world.with_public_observations());
        let set = Arc::new(enumerate_histories(&public, 2, &Script::new()).unwrap());
        let actual = set.get(seed as usize % set.len()).clone();
        let me = AgentId(owner);
        let other = AgentId(1 - owner);
        let belief = BeliefState::prior(set, me)
            .condition(&actual.observation_prefix(me, steps), &ExactMatch)
            .unwrap();
        for i in 0..public.variables().len() {
            let q = QueryVariable::state(&public, VarId(i), StepRef::Final);
            for v in 0..q.values.len() {
                let nested = other_agent_belief(&belief, other, &q, v, &ExactMatch).unwrap();
                prop_assert_eq!(nested.len(), 1);
                prop_assert!((nested.support()[0].0 - belief.probability(&q, v)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn epsilon_odds_at_default_noise() {
    // A coin world where the speaker's utterance is heard in isolation.
    use fauxpas_core::world::{ActionKind, JointObservation, Outcome, TransitionRule};
    let mut b = WorldModel::builder();
    let coin = b.variable("coin", &["heads", "tails"]);
    let listener = b.agent("listener");
    let speaker = b.agent("speaker");
    let ln = b.action(listener, "noop", ActionKind::Noop);
    let sn = b.action(speaker, "noop", ActionKind::Noop);
    let say = b.action(speaker, "heads", ActionKind::Utterance);
    b.action_prior(listener, vec![vec![(ln, 1.0)]]);
    b.action_prior(speaker, vec![vec![(say, 1.0)]]);
    let _ = sn;
    b.initial_state(State::new(vec![0]), 0.3);
    b.initial_state(State::new(vec![1]), 0.7);
    b.rule(TransitionRule::new("static", |_, _| true, move |s, a| {
        let mut zl = Observation::empty();
        zl.perceive_action(listener, a.of(listener));
        zl.perceive_action(speaker, a.of(speaker));
        let mut zs = Observation::empty();
        zs.perceive_action(speaker, a.of(speaker));
        vec![Outcome {
            next: s.clone(),
            observation: JointObservation::new(vec![zl, zs]),
            probability: 1.0,
        }]
    }));
    let world = Arc::new(b.build().unwrap());
    let semantics = fauxpas_core::UtteranceSemantics::new(0.05)
        .unwrap()
        .define(say, move |h| h.final_state().get(coin) == 0);
    let set = Arc::new(enumerate_histories(&world, 1, &Script::new()).unwrap());
    let prior = BeliefState::prior(set.clone(), listener);
    let observed = set.get(0).observation_prefix(listener, 1);
    let post = prior.condition(&observed, &LiteralListener { semantics: &semantics }).unwrap();
    let q = QueryVariable::state(&world, coin, StepRef::Final);
    let odds = |b: &BeliefState| b.probability(&q, 0) / b.probability(&q, 1);
    let ratio = odds(&post) / odds(&prior);
    assert!((ratio - 19.0).abs() < 1e-9, "{ratio}");
}
