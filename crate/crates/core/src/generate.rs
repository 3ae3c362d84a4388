//! Seeded random systems for property tests and desk-scale sweeps.
//!
//! Every generator takes the random source explicitly, so a seed fixes the
//! whole sample. State names are short (`s0`, `q3`, ...) and the initial
//! state is always the first one.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::hybrid::{moves, HybridConfig, HybridSystem, IntegratorConfig};
use crate::lts::{Lts, LtsMorphism, StateId, Transition};
use crate::observations::{Metric, ObsPoint, ObsSpace, ObsSystem};
use crate::probabilistic::{ProbMorphism, ProbSystem};
use crate::rational::{int, ratio, to_f64, Rational};
use crate::timed::{Interval, TimedLabel, TimedWord, Tts, TtsTransition};

pub type GenRng = ChaCha8Rng;

pub fn rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ACTIONS: [&str; 4] = ["a", "b", "c", "d"];

fn names(prefix: &str, n: usize) -> Vec<StateId> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

fn actions(k: usize) -> &'static [&'static str] {
    &ACTIONS[..k.clamp(1, ACTIONS.len())]
}

/// Between 1 and `max_states` states, about 1.5 transitions per state over
/// the first `n_actions` letters.
pub fn lts(rng: &mut GenRng, max_states: usize, n_actions: usize) -> Lts {
    lts_named(rng, "s", max_states, n_actions)
}

fn lts_named(rng: &mut GenRng, prefix: &str, max_states: usize, n_actions: usize) -> Lts {
    let n = rng.gen_range(1..=max_states.max(1));
    let states = names(prefix, n);
    let m = rng.gen_range(0..=(3 * n) / 2 + 1);
    let acts = actions(n_actions);
    let transitions = (0..m)
        .map(|_| {
            let a = acts.choose(rng).expect("nonempty");
            Transition::new(states.choose(rng).expect("nonempty").clone(), a.to_string(), states.choose(rng).expect("nonempty").clone())
        })
        .collect();
    Lts::new(states.iter().cloned().collect(), states[0].clone(), transitions).expect("well-formed")
}

/// A copy of `t` in which every state is split into one or two states;
/// bisimilar to `t` by construction.
pub fn split_copy(rng: &mut GenRng, t: &Lts) -> Lts {
    split_copy_with_map(rng, t).0
}

/// [`split_copy`] together with the projection onto `t`, an open morphism.
pub fn split_copy_with_map(rng: &mut GenRng, t: &Lts) -> (Lts, BTreeMap<StateId, StateId>) {
    let mut copies: BTreeMap<&str, Vec<StateId>> = BTreeMap::new();
    for s in t.states() {
        let k = if s == t.initial() { 1 } else { rng.gen_range(1..=2) };
        copies.insert(s, (0..k).map(|j| format!("u{s}_{j}")).collect());
    }
    let mut transitions = BTreeSet::new();
    for tr in t.transitions() {
        for src in &copies[tr.src.as_str()] {
            let dsts = &copies[tr.dst.as_str()];
            // at least one copy of the target, sometimes all of them
            if rng.gen_bool(0.5) {
                for d in dsts {
                    transitions.insert(Transition::new(src.clone(), tr.label.clone(), d.clone()));
                }
            } else {
                transitions.insert(Transition::new(src.clone(), tr.label.clone(), dsts.choose(rng).expect("nonempty").clone()));
            }
        }
    }
    let states = copies.values().flatten().cloned().collect();
    let map = copies.iter().flat_map(|(s, cs)| cs.iter().map(move |c| (c.clone(), s.to_string()))).collect();
    (Lts::new(states, copies[t.initial()][0].clone(), transitions).expect("well-formed"), map)
}

/// Two systems with disjoint state names; in about a third of the cases the
/// second is a split copy of the first.
pub fn lts_pair(rng: &mut GenRng, max_states: usize, n_actions: usize) -> (Lts, Lts) {
    let t = lts(rng, max_states, n_actions);
    let u = if rng.gen_bool(1.0 / 3.0) {
        let mut u = split_copy(rng, &t);
        while u.states().len() > max_states.max(1) * 2 {
            u = split_copy(rng, &t);
        }
        u
    } else {
        lts_named(rng, "r", max_states, n_actions)
    };
    (t, u)
}

/// A valid morphism into a random target. The source covers the target's
/// transitions with a random probability, so both open and non-open maps
/// come out.
pub fn morphism(rng: &mut GenRng, max_states: usize, n_actions: usize) -> LtsMorphism {
    let target = lts_named(rng, "q", max_states, n_actions);
    let tstates: Vec<StateId> = target.states().iter().cloned().collect();
    let n = rng.gen_range(1..=max_states.max(1));
    let states = names("s", n);
    let mut map = BTreeMap::new();
    map.insert(states[0].clone(), target.initial().to_string());
    for s in &states[1..] {
        map.insert(s.clone(), tstates.choose(rng).expect("nonempty").clone());
    }
    let mut preimage: BTreeMap<&str, Vec<&StateId>> = BTreeMap::new();
    for (s, img) in &map {
        preimage.entry(img.as_str()).or_default().push(s);
    }
    let cover = *[0.5, 0.9, 1.0].choose(rng).expect("nonempty");
    let mut transitions = BTreeSet::new();
    for s in &states {
        for (a, t2) in target.successors(&map[s]) {
            let Some(pre) = preimage.get(t2.as_str()) else { continue };
            if rng.gen_bool(cover) {
                let d = pre.choose(rng).expect("nonempty");
                transitions.insert(Transition::new(s.clone(), a.clone(), (*d).clone()));
            }
        }
    }
    let source = Lts::new(states.into_iter().collect(), "s0".into(), transitions).expect("well-formed");
    LtsMorphism::new(source, target, map).expect("total map into the target")
}

/// `k/4` for `k` in `[-8, 8]`.
pub fn small_rational(rng: &mut GenRng) -> Rational {
    ratio(rng.gen_range(-8..=8), 4)
}

/// Random rational observations in `R^dim` under the sup metric.
pub fn observe<A: crate::lts::Action>(rng: &mut GenRng, t: Lts<A>, dim: usize) -> ObsSystem<A> {
    let omega = t.states().iter().map(|s| (s.clone(), ObsPoint::Vector((0..dim).map(|_| small_rational(rng)).collect()))).collect();
    ObsSystem::new(t, ObsSpace::RealVector { dim, metric: Metric::Sup }, omega).expect("every state observed")
}

/// Random subdistributions on every `(state, action)` group; zero
/// probabilities occur and stay distinct from absent transitions.
pub fn prob_system(rng: &mut GenRng, max_states: usize, n_actions: usize) -> ProbSystem {
    let t = lts(rng, max_states, n_actions);
    with_probabilities(rng, t)
}

pub fn with_probabilities(rng: &mut GenRng, t: Lts) -> ProbSystem {
    let mut groups: BTreeMap<(StateId, String), Vec<Transition>> = BTreeMap::new();
    for tr in t.transitions() {
        groups.entry((tr.src.clone(), tr.label.clone())).or_default().push(tr.clone());
    }
    let mut mu = BTreeMap::new();
    for trs in groups.values() {
        let den: i64 = rng.gen_range(1..=6);
        let mut left = den;
        for tr in trs {
            let k = rng.gen_range(0..=left);
            left -= k;
            mu.insert(tr.clone(), ratio(k, den));
        }
    }
    ProbSystem::new(t, mu).expect("subdistributions")
}

/// A probabilistic morphism onto `target` from a split copy of it: each
/// copy gets an equal share of the target probability, or less.
pub fn prob_cover(rng: &mut GenRng, target: &ProbSystem) -> ProbMorphism {
    let (lts, map) = split_copy_with_map(rng, target.lts());
    let mut mu = BTreeMap::new();
    for tr in lts.transitions() {
        let image = Transition::new(map[&tr.src].clone(), tr.label.clone(), map[&tr.dst].clone());
        let copies = lts.successors(&tr.src).iter().filter(|(a, d)| *a == tr.label && map[d] == image.dst).count();
        let share = &target.mu()[&image] / int(copies as i64);
        let p = if rng.gen_bool(0.25) { share * ratio(1, 2) } else { share };
        mu.insert(tr.clone(), p);
    }
    let source = ProbSystem::new(lts, mu).expect("shares of a subdistribution");
    ProbMorphism::new(source, target.clone(), map).expect("total map")
}

/// A tree with at most `max_transitions` edges; delays are `k/2` with `k` in `[1, 6]`.
pub fn timed_tree(rng: &mut GenRng, max_transitions: usize, n_actions: usize) -> Lts<TimedLabel> {
    let m = rng.gen_range(0..=max_transitions);
    let acts = actions(n_actions);
    let states = names("n", m + 1);
    let transitions = (1..=m)
        .map(|k| {
            let parent = states[rng.gen_range(0..k)].clone();
            let label = TimedLabel::new(*acts.choose(rng).expect("nonempty"), ratio(rng.gen_range(1..=6), 2));
            Transition::new(parent, label, states[k].clone())
        })
        .collect();
    Lts::new(states.iter().cloned().collect(), states[0].clone(), transitions).expect("well-formed")
}

/// A timed tree observed in `R^1` at small integers.
pub fn observed_tree(rng: &mut GenRng, max_transitions: usize, n_actions: usize) -> ObsSystem<TimedLabel> {
    let t = timed_tree(rng, max_transitions, n_actions);
    let omega = t.states().iter().map(|s| (s.clone(), ObsPoint::Vector(vec![int(rng.gen_range(-3..=3))]))).collect();
    ObsSystem::new(t, ObsSpace::RealVector { dim: 1, metric: Metric::Sup }, omega).expect("every state observed")
}

fn interval(rng: &mut GenRng) -> Interval {
    let lo: i64 = rng.gen_range(0..=4);
    match rng.gen_range(0..4) {
        0 => Interval::point(ratio(lo, 2)),
        1 => Interval::new(ratio(lo, 2), rng.gen_bool(0.5), None, false).expect("valid"),
        _ => {
            let hi = lo + rng.gen_range(1..=4);
            Interval::new(ratio(lo, 2), rng.gen_bool(0.5), Some(ratio(hi, 2)), rng.gen_bool(0.5)).expect("nonempty")
        }
    }
}

/// A timed system over clocks `x` (and `y`). With `deterministic`, every
/// state has at most one transition per action.
pub fn tts(rng: &mut GenRng, max_states: usize, n_actions: usize, deterministic: bool) -> Tts {
    tts_named(rng, "q", max_states, n_actions, deterministic)
}

fn tts_named(rng: &mut GenRng, prefix: &str, max_states: usize, n_actions: usize, deterministic: bool) -> Tts {
    let n = rng.gen_range(1..=max_states.max(1));
    let states = names(prefix, n);
    let clocks: Vec<String> = if rng.gen_bool(0.5) { vec!["x".into()] } else { vec!["x".into(), "y".into()] };
    let acts = actions(n_actions);
    let m = rng.gen_range(1..=(3 * n) / 2 + 1);
    let mut used = BTreeSet::new();
    let mut transitions = Vec::new();
    for _ in 0..m {
        let src = states.choose(rng).expect("nonempty").clone();
        let action = acts.choose(rng).expect("nonempty").to_string();
        if deterministic && !used.insert((src.clone(), action.clone())) {
            continue;
        }
        let mut guard = BTreeMap::new();
        for c in &clocks {
            if rng.gen_bool(0.6) {
                guard.insert(c.clone(), interval(rng));
            }
        }
        let reset = clocks.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
        transitions.push(TtsTransition { src, action, reset, guard, dst: states.choose(rng).expect("nonempty").clone() });
    }
    Tts::new(states.iter().cloned().collect(), states[0].clone(), clocks.into_iter().collect(), transitions).expect("well-formed")
}

/// Two timed systems with disjoint state names; the second is sometimes a
/// renamed copy of the first, sometimes with one guard changed.
pub fn tts_pair(rng: &mut GenRng, max_states: usize, n_actions: usize, deterministic: bool) -> (Tts, Tts) {
    let t = tts(rng, max_states, n_actions, deterministic);
    let u = match rng.gen_range(0..3) {
        0 => tts_named(rng, "p", max_states, n_actions, deterministic),
        k => {
            let rename = |s: &str| format!("p{}", &s[1..]);
            let mut trs: Vec<TtsTransition> = t
                .transitions()
                .iter()
                .map(|tr| TtsTransition { src: rename(&tr.src), dst: rename(&tr.dst), ..tr.clone() })
                .collect();
            if k == 2 && !trs.is_empty() {
                let i = rng.gen_range(0..trs.len());
                let c = t.clock_names()[0].clone();
                trs[i].guard.insert(c, interval(rng));
            }
            Tts::new(
                t.states().iter().map(|s| rename(s)).collect(),
                rename(t.initial()),
                t.clock_names().iter().cloned().collect(),
                trs,
            )
            .expect("renamed copy")
        }
    };
    (t, u)
}

fn linear_flow(rng: &mut GenRng, var: &str) -> String {
    let c = rng.gen_range(-2..=2);
    match rng.gen_range(0..3) {
        0 => format!("{c}"),
        1 => format!("{var} + {c}"),
        _ => format!("0 - {var} / 2 + {c}"),
    }
}

/// A hybrid system with one or two one-dimensional subsystems, two or three
/// modes, affine flows, threshold guards and optional resets, together with
/// timed words that each admit a run of length up to `depth`.
pub fn linear_hybrid(rng: &mut GenRng, depth: usize, cfg: &IntegratorConfig) -> (HybridSystem, Vec<TimedWord>) {
    let subs: Vec<(&str, &str)> = if rng.gen_bool(0.5) { vec![("s1", "x")] } else { vec![("s1", "x"), ("s2", "y")] };
    let n_modes = rng.gen_range(2..=3);
    let modes = names("m", n_modes);
    let subsystems: Vec<_> = subs.iter().map(|(s, v)| json!({"name": s, "vars": [v], "init": [rng.gen_range(-2..=2).to_string()]})).collect();
    let observation = if subs.len() == 2 && rng.gen_bool(0.5) { "x - y" } else { "x" };
    let mut mode_json = serde_json::Map::new();
    for m in &modes {
        let flow: serde_json::Map<String, serde_json::Value> = subs.iter().map(|(s, v)| (s.to_string(), json!([linear_flow(rng, v)]))).collect();
        mode_json.insert(m.clone(), json!({"flow": flow, "observation": [observation]}));
    }
    let mut events = Vec::new();
    let mut seen = BTreeSet::new();
    for m in &modes {
        for _ in 0..rng.gen_range(1..=2) {
            let action = *["a", "b"].choose(rng).expect("nonempty");
            let dst = modes.choose(rng).expect("nonempty");
            if !seen.insert((m.clone(), action, dst.clone())) {
                continue;
            }
            let mut e = serde_json::Map::new();
            e.insert("src".into(), json!(m));
            e.insert("action".into(), json!(action));
            e.insert("dst".into(), json!(dst));
            if rng.gen_bool(0.5) {
                let (_, v) = subs.choose(rng).expect("nonempty");
                let op = [">=", "<="].choose(rng).expect("nonempty");
                e.insert("guard".into(), json!(format!("{v} {op} {}", rng.gen_range(-2..=2))));
            }
            if rng.gen_bool(0.4) {
                let (s, v) = subs.choose(rng).expect("nonempty");
                let r = if rng.gen_bool(0.5) { "0".to_string() } else { format!("{v} + 1") };
                e.insert("reset".into(), json!({ *s: [r] }));
            }
            events.push(serde_json::Value::Object(e));
        }
    }
    let sys: HybridSystem = serde_json::from_value(json!({
        "subsystems": subsystems,
        "modes": mode_json,
        "events": events,
        "initial": modes[0],
    }))
    .expect("generated hybrid systems are well-formed");
    let words = feasible_words(rng, &sys, depth, 3, cfg);
    (sys, words)
}

/// Up to `count` distinct words, each extended greedily by a feasible
/// `(action, delay)` with delay in `{1/2, 1, 3/2, 2}`.
pub fn feasible_words(rng: &mut GenRng, sys: &HybridSystem, depth: usize, count: usize, cfg: &IntegratorConfig) -> Vec<TimedWord> {
    let delays = [ratio(1, 2), int(1), ratio(3, 2), int(2)];
    let mut out = BTreeSet::new();
    for _ in 0..count {
        let mut cfg_now = HybridConfig::initial(sys);
        let mut word = Vec::new();
        'extend: for _ in 0..depth {
            for _ in 0..8 {
                let e = sys.events().choose(rng).expect("generated systems have events");
                if e.src != cfg_now.mode {
                    continue;
                }
                let t = delays.choose(rng).expect("nonempty").clone();
                match moves(sys, &cfg_now, &e.action, to_f64(&t), cfg) {
                    Ok(next) if !next.is_empty() => {
                        cfg_now = next[0].config.clone();
                        word.push(TimedLabel::new(e.action.as_str(), t));
                        continue 'extend;
                    }
                    _ => {}
                }
            }
            break;
        }
        if !word.is_empty() {
            out.insert(word);
        }
    }
    out.into_iter().collect()
}
