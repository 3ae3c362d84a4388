use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::adjunction::{check_functoriality, check_naturality, check_triangle_identities, Arrow, LawStatus};
use crate::catalog;
use crate::lts::{Lts, LtsMorphism, Side, Transition};
use crate::rational::{int, ratio};

fn cfg(state: &str, nu: &[Rational]) -> Config {
    Config { state: state.into(), nu: nu.to_vec() }
}

fn one_edge(guard: &str) -> Tts {
    serde_json::from_value(serde_json::json!({
        "states": ["p", "q"], "initial": "p", "clocks": ["x"],
        "transitions": [{"src": "p", "action": "a", "guard": {"x": guard}, "dst": "q"}]
    }))
    .unwrap()
}

fn label(a: &str, t: Rational) -> TimedLabel {
    TimedLabel::new(a, t)
}

/// A linear timed tree reading `word`, states `0, 1, ...`.
fn linear(word: &[(&str, Rational)]) -> Lts<TimedLabel> {
    let states: BTreeSet<String> = (0..=word.len()).map(|k| k.to_string()).collect();
    let ts = word.iter().enumerate().map(|(k, (a, t))| Transition::new(k.to_string(), label(a, t.clone()), (k + 1).to_string()));
    Lts::new(states, "0".into(), ts.collect()).unwrap()
}

#[test]
fn theta_steps_on_the_cycle() {
    let t = catalog::timed_cycle();
    let start = cfg("q1", &[int(0), int(0)]);
    let s1 = theta_step(&t, &start, "a", &ratio(3, 2)).unwrap();
    assert_eq!(s1, vec![cfg("q2", &[ratio(3, 2), int(0)])]);
    let s2 = theta_step(&t, &s1[0], "b", &int(1)).unwrap();
    assert_eq!(s2, vec![cfg("q3", &[ratio(5, 2), int(1)])]);
    assert!(theta_step(&t, &s1[0], "b", &ratio(1, 2)).unwrap().is_empty());
    assert!(theta_step(&t, &start, "a", &int(0)).is_err());
}

#[test]
fn enabled_delay_sets() {
    let t = catalog::timed_cycle();
    let at_q2 = cfg("q2", &[ratio(3, 2), int(0)]);
    let e = enabled_times(&t, &at_q2, "b").unwrap();
    assert_eq!(e[0].times.as_ref().unwrap().to_string(), "[1,1]");
    let at_q3 = cfg("q3", &[ratio(1, 2), int(1)]);
    assert_eq!(enabled_times(&t, &at_q3, "a").unwrap()[0].times.as_ref().unwrap().to_string(), "(0,1/2)");
    let late = cfg("q3", &[int(1), int(1)]);
    assert_eq!(enabled_times(&t, &late, "a").unwrap()[0].times, None);
    let start = cfg("q1", &[int(0), int(0)]);
    assert_eq!(enabled_times(&t, &start, "a").unwrap()[0].times, Some(Interval::positive()));
}

#[test]
fn lazy_run_tree() {
    let t = catalog::timed_cycle();
    let g = GTree::new(&t).unwrap();
    let root = g.root();
    let kids = g.children(&root);
    assert_eq!(kids.len(), 1);
    let r1 = g.instantiate(&root, kids[0].edge, &ratio(3, 2)).unwrap();
    assert_eq!(r1.skeleton(), "q1 -(a,3/2)-> q2");
    let k2 = g.children(&r1);
    assert_eq!(k2[0].times.to_string(), "[1,1]");
    assert!(g.instantiate(&r1, k2[0].edge, &int(2)).is_err());
    let frag = g.materialize(3, &TimePolicy::Canonical);
    assert!(frag.lts.states().contains("q1 -(a,1)-> q2 -(b,1)-> q3"));
    assert!(crate::unfolding::is_tree(&frag.lts));
    // x is never reset and y ≤ x, so the a-step out of q3 is never enabled.
    assert!(frag.frontier.is_empty());
    assert!(!frag.lts.states().iter().any(|s| s.contains("q4")));
    assert!(!g.materialize(1, &TimePolicy::Canonical).frontier.is_empty());
    assert!(g.materialize_exact(2).is_err());
}

#[test]
fn guard_times_on_a_linear_tree() {
    let tree = linear(&[("a", int(1)), ("b", int(2)), ("c", int(3))]);
    let iota = iota_timed(&tree).unwrap();
    let d = |k: usize| iota.edge_index(&tree.transitions().iter().find(|t| t.src == k.to_string()).unwrap().clone()).unwrap();
    let pending = d(2);
    assert_eq!(iota.guard_time(pending, &BTreeSet::new()), int(6));
    assert_eq!(iota.guard_time(pending, &BTreeSet::from([d(0)])), int(5));
    assert_eq!(iota.guard_time(pending, &BTreeSet::from([d(1)])), int(3));
    assert_eq!(iota.guard_time(pending, &BTreeSet::from([d(0), d(1)])), int(3));
    assert_eq!(iota.clocks().unwrap().len(), 8);
}

#[test]
fn clock_cap_is_enforced() {
    let word: Vec<(&str, Rational)> = (0..17).map(|_| ("a", int(1))).collect();
    assert!(matches!(iota_timed(&linear(&word)), Err(crate::ModelError::Resource(_))));
    let not_tree = Lts::new(
        ["0".to_string()].into(),
        "0".into(),
        [Transition::new("0", label("a", int(1)), "0")].into(),
    )
    .unwrap();
    assert!(iota_timed(&not_tree).is_err());
}

#[test]
fn unit_and_its_inverse() {
    let branching = Lts::new(
        ["r", "x", "y", "z"].iter().map(|s| s.to_string()).collect(),
        "r".into(),
        [
            Transition::new("r", label("a", int(1)), "x"),
            Transition::new("r", label("a", int(2)), "y"),
            Transition::new("x", label("b", ratio(1, 2)), "z"),
        ]
        .into(),
    )
    .unwrap();
    for tree in [linear(&[("a", int(1)), ("b", int(2)), ("c", int(3))]), branching] {
        let er = eta_rho(&tree).unwrap();
        er.verify().unwrap();
        assert_eq!(er.g_iota.lts.states().len(), tree.states().len());
    }
}

#[test]
fn counit_on_the_cycle() {
    let t = catalog::timed_cycle();
    let frag = GTree::new(&t).unwrap().materialize(3, &TimePolicy::Canonical);
    let report = timed_counit(&t, &frag).unwrap();
    assert!(report.is_ok(), "{report:?}");
    assert_eq!(report.transitions_checked, frag.lts.transitions().len());
}

#[test]
fn corrupted_counit_is_rejected() {
    let t = catalog::timed_cycle();
    let inst = TimedInstance::new(2, vec![ratio(1, 2), int(1), int(2)]);
    let mut eps = crate::adjunction::AdjunctionInstance::counit_at(&inst, &TimedObject::Tts(t.clone())).unwrap();
    // Swap the clock images of x and y.
    let (x, y) = (Clock::Named("x".into()), Clock::Named("y".into()));
    let (gx, gy) = (eps.g[&x].clone(), eps.g[&y].clone());
    eps.g.insert(x, gy);
    eps.g.insert(y, gx);
    assert!(!crate::adjunction::AdjunctionInstance::rich_mor_valid(&inst, &eps).is_equal());
}

#[test]
fn bounded_bisimulation_witnesses() {
    let (l, r) = (one_edge("[1,1]"), one_edge("[2,2]"));
    match timed_bisim_bounded(&l, &r, 2, &TimePolicy::Canonical).unwrap() {
        TimedBisimVerdict::NotBisimilar { strategy, word } => {
            let word = word.unwrap();
            assert_eq!(word, vec![label("a", int(1))]);
            assert_eq!(strategy.side, Side::Left);
            validate_strategy(&l, &r, &strategy).unwrap();
            assert!(replay_word(&l, &word).unwrap() && !replay_word(&r, &word).unwrap());
        }
        v => panic!("{v:?}"),
    }
    let (l, r) = (one_edge("[0,2]"), one_edge("[0,3]"));
    match timed_bisim_bounded(&l, &r, 1, &TimePolicy::Canonical).unwrap() {
        TimedBisimVerdict::NotBisimilar { word, strategy } => {
            assert_eq!(word, Some(vec![label("a", ratio(5, 2))]));
            assert_eq!(strategy.side, Side::Right);
        }
        v => panic!("{v:?}"),
    }
    let t = catalog::timed_cycle();
    assert_eq!(timed_bisim_bounded(&t, &t, 3, &TimePolicy::Canonical).unwrap(), TimedBisimVerdict::NoCounterexample { depth: 3 });
}

#[test]
fn forged_strategy_fails_replay() {
    let (l, r) = (one_edge("[1,1]"), one_edge("[2,2]"));
    let TimedBisimVerdict::NotBisimilar { mut strategy, .. } = timed_bisim_bounded(&l, &r, 1, &TimePolicy::Canonical).unwrap() else {
        panic!("expected a witness")
    };
    strategy.label = label("a", int(2));
    assert!(validate_strategy(&l, &r, &strategy).is_err());
}

#[test]
fn morphism_conditions() {
    let t = catalog::timed_cycle();
    let id = TtsMorphism::identity(&t);
    assert!(check_tts_morphism(&id).is_empty());
    // Swapping the clocks breaks resets and guards.
    let swap = TtsMorphism::new(
        t.clone(),
        t.clone(),
        id.state_map().clone(),
        BTreeMap::from([("x".to_string(), "y".to_string()), ("y".to_string(), "x".to_string())]),
    )
    .unwrap();
    assert!(!check_tts_morphism(&swap).is_empty());
    // A one-clock system whose only clock follows x and guards nothing.
    let coarse: Tts = serde_json::from_value(serde_json::json!({
        "states": ["s"], "initial": "s", "clocks": ["z"],
        "transitions": [{"src": "s", "action": "a", "dst": "s"}, {"src": "s", "action": "b", "dst": "s"}]
    }))
    .unwrap();
    let collapse = TtsMorphism::new(
        t.clone(),
        coarse,
        t.states().iter().map(|s| (s.clone(), "s".to_string())).collect(),
        BTreeMap::from([("z".to_string(), "x".to_string())]),
    )
    .unwrap();
    assert!(check_tts_morphism(&collapse).is_empty());
    // Its semantics commutes with theta steps.
    let start = cfg("q1", &[int(0), int(0)]);
    let next = theta_step(&t, &start, "a", &int(1)).unwrap();
    let image = collapse.map_config(&next[0]);
    assert!(theta_step(collapse.target(), &collapse.map_config(&start), "a", &int(1)).unwrap().contains(&image));
}

#[test]
fn timed_laws_hold_on_samples() {
    let inst = TimedInstance::new(2, vec![ratio(1, 2), int(1), ratio(3, 2)]);
    let trees = vec![
        linear(&[("a", int(1)), ("b", int(2))]),
        linear(&[("a", ratio(1, 2))]),
    ];
    let rich = vec![TimedObject::Tts(one_edge("[1,1]")), TimedObject::Tts(one_edge("(0,1]"))];
    let report = check_triangle_identities(&inst, &trees, &rich);
    assert_eq!(report.status(), LawStatus::Pass, "{:?}", report.first_failure());

    let t = catalog::timed_cycle();
    let coarse: Tts = serde_json::from_value(serde_json::json!({
        "states": ["s"], "initial": "s", "clocks": ["z"],
        "transitions": [{"src": "s", "action": "a", "dst": "s"}, {"src": "s", "action": "b", "dst": "s"}]
    }))
    .unwrap();
    let collapse = TtsMorphism::new(
        t.clone(),
        coarse.clone(),
        t.states().iter().map(|s| (s.clone(), "s".to_string())).collect(),
        BTreeMap::from([("z".to_string(), "x".to_string())]),
    )
    .unwrap();
    let small = TimedInstance::new(1, vec![int(1)]);
    let arrow = Arrow {
        source: TimedObject::Tts(t.clone()),
        target: TimedObject::Tts(coarse.clone()),
        mor: TimedMorphism::from(&collapse),
    };
    let prefix = linear(&[("a", int(1))]);
    let longer = linear(&[("a", int(1)), ("b", int(2))]);
    let incl = LtsMorphism::new(prefix.clone(), longer.clone(), [("0", "0"), ("1", "1")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()).unwrap();
    let base = Arrow { source: prefix, target: longer, mor: incl.clone() };
    let nat = check_naturality(&small, &[base], &[arrow]);
    assert_eq!(nat.status(), LawStatus::Pass, "{:?}", nat.first_failure());
    let id = TimedMorphism::from(&TtsMorphism::identity(&t));
    let fun = check_functoriality(&small, &[(incl.clone(), LtsMorphism::identity(incl.target()))], &[(id, TimedMorphism::from(&collapse))]);
    assert_eq!(fun.status(), LawStatus::Pass, "{:?}", fun.first_failure());
}
