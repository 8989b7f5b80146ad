//! Independent brute-force evaluation of a Curtains-family scenario.
//!
//! Works directly on the joint of (ability, initial look, modify, look at
//! utterance time, utterance) with each agent's information hand-coded,
//! sharing nothing with the history/belief machinery. Produces the same
//! keyed quantities as [`crate::report::engine_quantities`].

use std::collections::BTreeMap;

use crate::report::{ModelSettings, Signature};
use crate::scenario::{Arrival, HistoryVariant, Look, Observability, ScenarioSpec, UtteranceChoice};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Atom {
    high: bool,
    initial_good: bool,
    modify: bool,
    good: bool,
    utterance: usize,
    weight: f64,
}

const UTTERANCES: [&str; 3] = ["looks_good", "looks_bad", "nothing"];

fn utterance_index(choice: UtteranceChoice) -> usize {
    match choice {
        UtteranceChoice::Good => 0,
        UtteranceChoice::Bad => 1,
        UtteranceChoice::Nothing => 2,
    }
}

fn atoms(spec: &ScenarioSpec) -> Vec<Atom> {
    let p = &spec.priors;
    let mut out = Vec::new();
    for high in [true, false] {
        for initial_good in [true, false] {
            for modify in [true, false] {
                for good in [true, false] {
                    for utterance in 0..3 {
                        let pa = if high { p.ability_high } else { 1.0 - p.ability_high };
                        let pp = if initial_good { p.perception_good } else { 1.0 - p.perception_good };
                        let pm = if modify { p.modify } else { 1.0 - p.modify };
                        let pl = if modify {
                            let g = if high {
                                p.modified_looks_good_if_high
                            } else {
                                p.modified_looks_good_if_low
                            };
                            if good { g } else { 1.0 - g }
                        } else if good == initial_good {
                            1.0
                        } else {
                            0.0
                        };
                        let weight = pa * pp * pm * pl / 3.0;
                        if weight > 0.0 {
                            out.push(Atom {
                                high,
                                initial_good,
                                modify,
                                good,
                                utterance,
                                weight,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// What an agent knows before the utterance: whether the listener modified
/// the object (if known) and the current look (if known).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Info {
    modify: Option<bool>,
    good: Option<bool>,
}

struct Oracle<'a> {
    spec: &'a ScenarioSpec,
    settings: &'a ModelSettings,
    atoms: Vec<Atom>,
    early: bool,
}

/// A normalized distribution over atom indices.
type Belief = Vec<(usize, f64)>;

impl<'a> Oracle<'a> {
    fn listener_info(&self, a: &Atom) -> Info {
        match self.spec.observability {
            Observability::CoLocated => Info {
                modify: Some(a.modify),
                good: None,
            },
            Observability::Public => Info {
                modify: Some(a.modify),
                good: Some(a.good),
            },
        }
    }

    fn speaker_info(&self, a: &Atom) -> Info {
        let sees_modify = self.early || self.spec.observability == Observability::Public;
        Info {
            modify: sees_modify.then_some(a.modify),
            good: Some(a.good),
        }
    }

    fn literal(&self, utterance: usize, a: &Atom) -> f64 {
        let eps = self.spec.epsilon;
        let truth = match utterance {
            0 => a.good,
            1 => !a.good,
            _ => true,
        };
        if truth { 1.0 - eps } else { eps }
    }

    fn normalize(weights: Vec<(usize, f64)>) -> Belief {
        let total: f64 = weights.iter().map(|w| w.1).sum();
        assert!(total > 0.0, "oracle reached an impossible information set");
        weights.into_iter().map(|(i, w)| (i, w / total)).collect()
    }

    fn belief<F: Fn(&Atom) -> f64>(&self, weight: F) -> Belief {
        Self::normalize(
            self.atoms
                .iter()
                .enumerate()
                .map(|(i, a)| (i, a.weight * weight(a)))
                .filter(|w| w.1 > 0.0)
                .collect(),
        )
    }

    fn listener_before(&self, info: Info) -> Belief {
        self.belief(|a| (self.listener_info(a) == info) as u8 as f64)
    }

    fn listener_after(&self, info: Info, heard: usize) -> Belief {
        self.belief(|a| {
            if self.listener_info(a) == info && a.utterance == heard {
                self.literal(heard, a)
            } else {
                0.0
            }
        })
    }

    fn speaker_belief(&self, info: Info) -> Belief {
        self.belief(|a| (self.speaker_info(a) == info) as u8 as f64)
    }

    fn prob<F: Fn(&Atom) -> bool>(&self, b: &Belief, f: F) -> f64 {
        b.iter().filter(|(i, _)| f(&self.atoms[*i])).map(|(_, m)| m).sum()
    }

    /// Belief changes in the listener if `utterance` were said in atom `h`.
    fn deltas(&self, h: &Atom, utterance: usize) -> (f64, f64) {
        let info = self.listener_info(h);
        let before = self.listener_before(info);
        let after = self.listener_after(info, utterance);
        let truth = h.good;
        let d_info = self.prob(&after, |a| a.good == truth) - self.prob(&before, |a| a.good == truth);
        let d_eval = self.prob(&after, |a| a.high) - self.prob(&before, |a| a.high);
        (d_info, d_eval)
    }

    fn expected_deltas(&self, b: &Belief, utterance: usize) -> (f64, f64) {
        let mut out = (0.0, 0.0);
        for &(i, m) in b {
            let (di, de) = self.deltas(&self.atoms[i], utterance);
            out.0 += m * di;
            out.1 += m * de;
        }
        out
    }

    fn value(&self, b: &Belief, utterance: usize, theta_info: f64, theta_eval: f64) -> f64 {
        let (di, de) = self.expected_deltas(b, utterance);
        theta_info * di + theta_eval * de
    }

    fn policy(&self, b: &Belief, theta_info: f64, theta_eval: f64) -> [f64; 3] {
        let rationality = self.settings.speaker.rationality;
        let values: Vec<f64> = (0..3).map(|u| self.value(b, u, theta_info, theta_eval)).collect();
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = values.iter().map(|v| (rationality * (v - top)).exp()).collect();
        let z: f64 = e.iter().sum();
        [e[0] / z, e[1] / z, e[2] / z]
    }

    /// Joint posterior over (atom, hypothesis) after hearing `heard` with
    /// listener information `info`.
    fn sophisticated(&self, info: Info, heard: usize) -> Vec<(usize, usize, f64)> {
        let mut entries = Vec::new();
        for (i, a) in self.atoms.iter().enumerate() {
            if self.listener_info(a) != info || a.utterance != heard {
                continue;
            }
            let sb = self.speaker_belief(self.speaker_info(a));
            for (k, hyp) in self.settings.hypotheses.iter().enumerate() {
                let p = self.policy(&sb, hyp.theta_info, hyp.theta_eval)[heard];
                let w = a.weight * hyp.prior * p;
                if w > 0.0 {
                    entries.push((i, k, w));
                }
            }
        }
        let total: f64 = entries.iter().map(|e| e.2).sum();
        assert!(total > 0.0, "oracle sophisticated posterior is empty");
        entries.into_iter().map(|(i, k, w)| (i, k, w / total)).collect()
    }

    fn nested<F: Fn(&Belief) -> f64>(&self, after: &Belief, f: F) -> f64 {
        after
            .iter()
            .map(|&(i, m)| m * f(&self.speaker_belief(self.speaker_info(&self.atoms[i]))))
            .sum()
    }
}

/// Oracle quantities for one variant, keyed like the engine's.
pub fn oracle_quantities(
    spec: &ScenarioSpec,
    variant: HistoryVariant,
    settings: &ModelSettings,
) -> BTreeMap<String, f64> {
    let v = spec.variants.get(variant);
    let oracle = Oracle {
        spec,
        settings,
        atoms: atoms(spec),
        early: v.speaker_arrives == Arrival::Before,
    };
    let heard = utterance_index(v.utterance);
    let perceived_good = v.speaker_perceives == Look::Good;
    let actual: Vec<Atom> = oracle
        .atoms
        .iter()
        .filter(|a| a.modify == v.listener_modifies && a.good == perceived_good && a.utterance == heard)
        .copied()
        .collect();
    assert!(!actual.is_empty(), "oracle found no actual history");
    let actual_total: f64 = actual.iter().map(|a| a.weight).sum();
    let over_actual = |f: &dyn Fn(&Atom) -> f64| -> f64 {
        actual.iter().map(|a| a.weight / actual_total * f(a)).sum()
    };

    let mut q = BTreeMap::new();
    let everything: Belief = Oracle::normalize(oracle.atoms.iter().enumerate().map(|(i, a)| (i, a.weight)).collect());
    q.insert("prior.ability_high".into(), oracle.prob(&everything, |a| a.high));
    q.insert("prior.perception_good".into(), oracle.prob(&everything, |a| a.initial_good));
    q.insert("prior.modify".into(), oracle.prob(&everything, |a| a.modify));

    let h = &actual[0];
    let linfo = oracle.listener_info(h);
    let sinfo = oracle.speaker_info(h);
    let before = oracle.listener_before(linfo);
    let after = oracle.listener_after(linfo, heard);
    let sb = oracle.speaker_belief(sinfo);
    for (who, b) in [("listener_before", &before), ("listener_after", &after), ("speaker", &sb)] {
        q.insert(format!("{who}.ability_high"), oracle.prob(b, |a| a.high));
        q.insert(format!("{who}.perception_good"), oracle.prob(b, |a| a.good));
        q.insert(format!("{who}.modify"), oracle.prob(b, |a| a.modify));
    }

    let m = &settings.speaker;
    for (u, name) in UTTERANCES.iter().enumerate() {
        let (di, de) = oracle.expected_deltas(&sb, u);
        q.insert(format!("speaker.expected_delta_info.{name}"), di);
        q.insert(format!("speaker.expected_delta_eval.{name}"), de);
        q.insert(format!("speaker.value.{name}"), oracle.value(&sb, u, m.theta_info, m.theta_eval));
    }
    let policy = oracle.policy(&sb, m.theta_info, m.theta_eval);
    for (u, name) in UTTERANCES.iter().enumerate() {
        q.insert(format!("speaker.policy.{name}"), policy[u]);
    }
    for hyp in &settings.hypotheses {
        let policy = oracle.policy(&sb, hyp.theta_info, hyp.theta_eval);
        for (u, name) in UTTERANCES.iter().enumerate() {
            q.insert(format!("hypothesis.{}.policy.{name}", hyp.name), policy[u]);
            q.insert(
                format!("hypothesis.{}.value.{name}", hyp.name),
                oracle.value(&sb, u, hyp.theta_info, hyp.theta_eval),
            );
        }
    }

    let joint = oracle.sophisticated(linfo, heard);
    for (k, hyp) in settings.hypotheses.iter().enumerate() {
        q.insert(
            format!("sophisticated.{}", hyp.name),
            joint.iter().filter(|e| e.1 == k).map(|e| e.2).sum(),
        );
    }
    let joint_prob = |f: &dyn Fn(&Atom) -> bool| -> f64 {
        joint.iter().filter(|e| f(&oracle.atoms[e.0])).map(|e| e.2).sum()
    };
    q.insert("sophisticated.ability_high".into(), joint_prob(&|a| a.high));
    q.insert("sophisticated.perception_good".into(), joint_prob(&|a| a.good));
    q.insert("sophisticated.modify".into(), joint_prob(&|a| a.modify));

    let delta_info = over_actual(&|a| oracle.deltas(a, heard).0);
    let delta_eval = over_actual(&|a| oracle.deltas(a, heard).1);
    let speaker_expected =
        |a: &Atom| oracle.expected_deltas(&oracle.speaker_belief(oracle.speaker_info(a)), heard);
    let speaker_expected_delta_info = over_actual(&|a| speaker_expected(a).0);
    let speaker_expected_delta_eval = over_actual(&|a| speaker_expected(a).1);
    let listener_after_of = |a: &Atom| oracle.listener_after(oracle.listener_info(a), heard);
    let nested_eval =
        over_actual(&|a| oracle.nested(&listener_after_of(a), |b| oracle.expected_deltas(b, heard).1));
    let nested_knew =
        over_actual(&|a| oracle.nested(&listener_after_of(a), |b| oracle.prob(b, |x| x.modify)));
    let knew = over_actual(&|a| {
        let b = oracle.speaker_belief(oracle.speaker_info(a));
        oracle.prob(&b, |x| x.modify)
    });
    let harm = over_actual(&|a| {
        oracle
            .sophisticated(oracle.listener_info(a), heard)
            .iter()
            .filter(|e| settings.hypotheses[e.1].theta_eval < 0.0)
            .map(|e| e.2)
            .sum()
    });
    let profile = [
        ("delta_info", delta_info),
        ("delta_eval", delta_eval),
        ("speaker_expected_delta_info", speaker_expected_delta_info),
        ("speaker_expected_delta_eval", speaker_expected_delta_eval),
        ("listener_expected_speaker_expected_delta_eval", nested_eval),
        ("listener_belief_speaker_wanted_harm", harm),
        ("speaker_knew_modification", knew),
        ("listener_expected_speaker_knew_modification", nested_knew),
    ];
    for (field, value) in profile {
        q.insert(format!("profile.{field}"), value);
    }
    q.into_iter().map(|(k, v)| (format!("{variant}.{k}"), v)).collect()
}

/// The oracle's faux-pas classification for a variant.
pub fn oracle_signature(spec: &ScenarioSpec, variant: HistoryVariant, settings: &ModelSettings) -> Signature {
    let q = oracle_quantities(spec, variant, settings);
    Signature::classify(
        q[&format!("{variant}.profile.delta_eval")],
        q[&format!("{variant}.profile.speaker_expected_delta_eval")],
    )
}

/// Largest absolute difference between two keyed quantity maps; a key
/// present in only one map counts as an infinite deviation.
pub fn max_deviation(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for key in a.keys().chain(b.keys()) {
        match (a.get(key), b.get(key)) {
            (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
            _ => return f64::INFINITY,
        }
    }
    worst
}
