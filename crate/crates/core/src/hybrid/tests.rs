use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::adjunction::{check_functoriality, check_naturality, check_triangle_identities, Arrow, LawStatus};
use crate::catalog::{hybrid_figure, hybrid_figure_default};
use crate::expr::parse_expr;
use crate::lts::{Lts, Side, Transition};
use crate::observations::{Metric, ObsMorphism, ObsPoint, ObsSpace, ObsSystem};
use crate::rational::{int, ratio, Rational};
use crate::timed::TimedLabel;

fn tol() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn label(a: &str, t: Rational) -> TimedLabel {
    TimedLabel::new(a, t)
}

fn sw(t: Rational) -> TimedLabel {
    label("switch", t)
}

fn sys(v: serde_json::Value) -> HybridSystem {
    serde_json::from_value(v).unwrap()
}

/// Observed timed tree from `(src, action, time, dst)` edges and one
/// observation per state.
fn tree(edges: &[(&str, &str, Rational, &str)], obs: &[(&str, i64)]) -> ObsSystem<TimedLabel> {
    let states: BTreeSet<String> = obs.iter().map(|(s, _)| s.to_string()).collect();
    let ts = edges.iter().map(|(s, a, t, d)| Transition::new(*s, label(a, t.clone()), *d)).collect();
    let lts = Lts::new(states, obs[0].0.to_string(), ts).unwrap();
    let omega = obs.iter().map(|(s, v)| (s.to_string(), ObsPoint::Vector(vec![int(*v)]))).collect();
    ObsSystem::new(lts, ObsSpace::RealVector { dim: 1, metric: Metric::Sup }, omega).unwrap()
}

fn one_dim(name: &str, flow: &str, reset: Option<&str>, init: f64) -> BasisTemplate {
    BasisTemplate {
        name: name.into(),
        vars: vec!["x".into()],
        init: vec![init],
        flow: vec![parse_expr(flow).unwrap()],
        reset: reset.map(|r| vec![parse_expr(r).unwrap()]),
    }
}

#[test]
fn figure_switches_exactly_when_the_guard_is_met() {
    let t = hybrid_figure_default();
    let start = HybridConfig::initial(&t);
    assert_eq!(start.sigma, vec![vec![5.0], vec![10.0]]);
    let out = moves(&t, &start, "switch", 2.5, &tol()).unwrap();
    assert_eq!(out.len(), 1);
    assert!(out[0].config.approx_eq(&HybridConfig::new("M2", vec![vec![7.5], vec![7.5]]), 1e-6));
    assert!(moves(&t, &start, "switch", 2.0, &tol()).unwrap().is_empty());
    assert!(moves(&t, &start, "other", 2.5, &tol()).unwrap().is_empty());
}

#[test]
fn k_translation_observes_configurations() {
    let t = hybrid_figure_default();
    let k = k_translate(&t, tol());
    assert_eq!(k.observe(&k.initial()).unwrap(), vec![5.0]);
    let next = k.successors(&k.initial(), &sw(ratio(5, 2))).unwrap();
    assert_eq!(next.len(), 1);
    assert!(k.observe(&next[0]).unwrap()[0].abs() <= 1e-9);
    assert!(k.successors(&k.initial(), &sw(int(-1))).is_err());
}

#[test]
fn rk4_matches_closed_forms() {
    let f = [parse_expr("x").unwrap()];
    let vars = ["x".to_string()];
    let err = |h: f64| {
        let xs = integrate(&f, &vars, &[1.0], &sample_times(1.0, h)).unwrap();
        (xs.last().unwrap()[0] - 1f64.exp()).abs()
    };
    assert!(err(1e-3) <= 1e-8);
    assert!(err(0.1) / err(0.05) >= 8.0);

    let t = hybrid_figure_default();
    let tr = flow(&t, "M1", &vec![vec![5.0], vec![10.0]], 2.5, &tol()).unwrap();
    for (s, v) in tr.times.iter().zip(&tr.samples) {
        assert!((v[0][0] - (5.0 + s)).abs() <= 1e-8 && (v[1][0] - (10.0 - s)).abs() <= 1e-8);
    }
    assert_eq!(tr.invariant_failure, None);
}

#[test]
fn zero_flow_tau_loops_and_discrete_steps() {
    let t = sys(serde_json::json!({
        "subsystems": [{"name": "s", "vars": ["x"], "init": ["3"]}],
        "modes": {"a": {"observation": ["x"]}, "b": {"observation": ["x"]}},
        "events": [{"src": "a", "action": "go", "dst": "b"}],
        "initial": "a"
    }));
    let tr = flow(&t, "a", &vec![vec![3.0]], 7.0, &tol()).unwrap();
    assert_eq!(tr.end(), &vec![vec![3.0]]);
    let step = moves(&t, &HybridConfig::initial(&t), "go", 0.0, &tol()).unwrap();
    assert_eq!(step[0].config, HybridConfig::new("b", vec![vec![3.0]]));

    let with_tau = t.add_tau_selfloops("tau").unwrap();
    assert_eq!(with_tau.events().len(), t.events().len() + t.modes().len());
    assert!(t.add_tau_selfloops("go").is_err());
    let idle = moves(&with_tau, &HybridConfig::initial(&t), "tau", 0.0, &tol()).unwrap();
    assert_eq!(idle[0].config, HybridConfig::initial(&t));

    let fig = hybrid_figure_default().add_tau_selfloops("tau").unwrap();
    let idle = moves(&fig, &HybridConfig::initial(&fig), "tau", 1.0, &tol()).unwrap();
    assert!(idle[0].config.approx_eq(&HybridConfig::new("M1", vec![vec![6.0], vec![9.0]]), 1e-9));
}

#[test]
fn h_unfold_follows_words() {
    let word = vec![sw(ratio(5, 2)), sw(ratio(5, 2))];
    // From (7.5, 7.5) in M2 the invariant x >= y - beta needs beta >= 5.
    let wide = hybrid_figure(1.0, 1.0, 1.0, 1.0, 0.0, 5.0);
    let f = h_unfold(&wide, 2, std::slice::from_ref(&word), &tol()).unwrap();
    assert_eq!(f.tree().states().len(), 3);
    let obs: Vec<f64> = f.tree().bfs_order().iter().map(|s| f.observations[s][0]).collect();
    for (got, want) in obs.iter().zip([5.0, 0.0, 5.0]) {
        assert!((got - want).abs() <= 1e-8, "{obs:?}");
    }
    for (id, run) in &f.runs {
        run.validate(&wide, &tol()).unwrap();
        assert_eq!(f.observations[id], observe(&wide, run.last()).unwrap());
    }

    let f = h_unfold(&hybrid_figure_default(), 2, &[word], &tol()).unwrap();
    assert_eq!(f.tree().states().len(), 2);
    assert_eq!(h_unfold(&wide, 2, &[], &tol()).unwrap().tree().states().len(), 1);
}

#[test]
fn identity_morphism_and_a_wrong_reset() {
    let t = hybrid_figure_default();
    let runs: Vec<HybridRun> = h_unfold(&t, 1, &[vec![sw(ratio(5, 2))]], &tol()).unwrap().runs.into_values().collect();
    let report = check_hybrid_morphism(&HybridMorphism::identity(&t), &runs, 16, 7, &tol());
    assert!(report.is_ok(), "{report:?}");

    let mut v = serde_json::to_value(&t).unwrap();
    v["events"][0]["reset"] = serde_json::json!({"s1": ["x + 1"]});
    let other = sys(v);
    let m = HybridMorphism { source: t.clone(), target: other, ..HybridMorphism::identity(&t) };
    let report = check_hybrid_morphism(&m, &runs, 16, 7, &tol());
    assert!(matches!(report.status_of("resets"), Some(ConditionStatus::Fail { .. })), "{report:?}");
}

#[test]
fn iota_pins_guards_to_the_tree() {
    let t = tree(&[("r", "a", int(2), "s")], &[("r", 0), ("s", 1)]);
    let basis = vec![one_dim("u", "1", None, 0.0).on(t.lts())];
    let i = iota_hybrid(&t, &basis, &tol()).unwrap();
    let Guard::Ball { center } = &i.events()[0].guard else { panic!("procedural guard expected") };
    assert!((center[0] - 2.0).abs() <= 1e-9);
    let Invariant::Trajectory { samples } = &i.mode("r").unwrap().invariant else { panic!() };
    assert!(samples.iter().all(|s| s[0] >= -1e-12 && s[0] <= 2.0 + 1e-12));
    assert_eq!(i.initial_valuation(), vec![vec![0.0]]);
    let start = HybridConfig::initial(&i);
    assert_eq!(moves(&i, &start, "a", 2.0, &tol()).unwrap().len(), 1);
    assert!(moves(&i, &start, "a", 1.5, &tol()).unwrap().is_empty());
    assert!(iota_hybrid(&t, &[], &tol()).is_err());
}

#[test]
fn counit_on_the_figure() {
    let words = vec![vec![sw(ratio(5, 2)), sw(ratio(5, 2))], vec![sw(int(3))]];
    for t in [hybrid_figure_default(), hybrid_figure(1.0, 1.0, 1.0, 1.0, 0.0, 5.0)] {
        let c = hybrid_counit(&t, 2, &words, &tol()).unwrap();
        assert!(c.report.is_ok(), "{:?}", c.report);
        assert_eq!(c.morphism.epsilon, 0.0);
        assert_eq!(c.morphism.subsystem_map["s1"], "s1");
    }
}

#[test]
fn counit_with_a_wrong_start_value_fails() {
    let t = hybrid_figure_default();
    let fragment = h_unfold(&t, 1, &[vec![sw(ratio(5, 2))]], &tol()).unwrap();
    let mut basis = counit_entries(&t, &fragment);
    basis[0].init = vec![5.25];
    let names: BTreeMap<String, String> = [("s1", "s1"), ("s2", "s2")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let c = counit_with_basis(&t, fragment.clone(), &basis, &names, &tol()).unwrap();
    assert!(matches!(c.report.morphism.status_of("initial-valuation"), Some(ConditionStatus::Fail { .. })));

    let err = counit_with_basis(&t, fragment, &basis[1..], &names, &tol()).err().unwrap();
    assert!(err.to_string().contains("α_s1"), "{err}");
}

#[test]
fn eta_and_rho_are_inverse() {
    let basis_for = |t: &ObsSystem<TimedLabel>| vec![BasisTemplate::clock().on(t.lts()), one_dim("v", "2", None, 1.0).on(t.lts())];
    let linear = tree(&[("0", "a", int(1), "1"), ("1", "b", ratio(1, 2), "2")], &[("0", 0), ("1", 1), ("2", 2)]);
    let branching = tree(&[("0", "a", int(1), "1"), ("0", "a", int(2), "2")], &[("0", 0), ("1", 3), ("2", -1)]);
    let single = tree(&[], &[("0", 4)]);
    for t in [linear, branching, single] {
        let er = hybrid_eta_rho(&t, &basis_for(&t), 3, &tol()).unwrap();
        er.verify().unwrap();
        assert_eq!(er.eta.len(), t.lts().states().len());
    }
}

#[test]
fn approximate_bisimulation_game() {
    let t = hybrid_figure_default();
    let shifted = t.with_initial_valuation(&[vec![5.0], vec![10.5]]).unwrap();
    let words = vec![vec![sw(ratio(5, 2))]];
    match approx_bisim_hybrid(&t, &shifted, 0.4, 1, &words, &tol()).unwrap() {
        HybridBisimVerdict::NotBisimilar { strategy, .. } => {
            let HybridStrategy::Gap { distance, .. } = &strategy else { panic!("root gap expected") };
            assert!((distance - 0.5).abs() <= 1e-12);
            validate_hybrid_strategy(&t, &shifted, 0.4, &strategy, &tol()).unwrap();
            assert!(validate_hybrid_strategy(&t, &shifted, 0.6, &strategy, &tol()).is_err());
        }
        v => panic!("{v:?}"),
    }
    let (a, b) = (t.add_tau_selfloops("tau").unwrap(), shifted.add_tau_selfloops("tau").unwrap());
    let idle = vec![vec![label("tau", int(1))]];
    assert_eq!(approx_bisim_hybrid(&a, &b, 0.6, 1, &idle, &tol()).unwrap(), HybridBisimVerdict::NoCounterexample { depth: 1 });
    assert_eq!(approx_bisim_hybrid(&t, &t, 0.0, 2, &words, &tol()).unwrap(), HybridBisimVerdict::NoCounterexample { depth: 2 });
    // Switching tells them apart: the shifted copy meets y <= x only at 2.75.
    let v = approx_bisim_hybrid(&a, &b, 0.6, 1, &words, &tol()).unwrap();
    let HybridBisimVerdict::NotBisimilar { strategy, .. } = v else { panic!() };
    assert!(matches!(&strategy, HybridStrategy::Move { side: Side::Left, responses, .. } if responses.is_empty()));
    validate_hybrid_strategy(&a, &b, 0.6, &strategy, &tol()).unwrap();
}

/// Two modes, one clock reset on every event: every subsystem is the clock
/// template read along any run.
fn clocked() -> HybridSystem {
    sys(serde_json::json!({
        "subsystems": [{"name": "c", "vars": ["c"], "init": ["0"]}],
        "modes": {
            "p": {"flow": {"c": ["1"]}, "invariant": "c <= 2", "observation": ["c"]},
            "q": {"flow": {"c": ["1"]}, "observation": ["0 - c"]}
        },
        "events": [
            {"src": "p", "action": "a", "dst": "q", "guard": "c >= 1", "reset": {"c": ["0"]}},
            {"src": "q", "action": "b", "dst": "p", "reset": {"c": ["0"]}}
        ],
        "initial": "p"
    }))
}

#[test]
fn coreflection_laws_on_uniform_systems() {
    let words = vec![vec![label("a", int(1)), label("b", ratio(1, 2))], vec![label("a", ratio(3, 2))], vec![label("a", int(3))]];
    let inst = HybridInstance::new(2, words, vec![BasisTemplate::clock()], tol());
    let trees = vec![
        tree(&[("0", "a", int(1), "1"), ("1", "b", int(2), "2")], &[("0", 0), ("1", 1), ("2", 2)]),
        tree(&[("0", "a", int(1), "1"), ("0", "a", int(2), "2")], &[("0", 0), ("1", 5), ("2", 5)]),
    ];
    let report = check_triangle_identities(&inst, &trees, &[clocked()]);
    assert_eq!(report.status(), LawStatus::Pass, "{:?}", report.first_failure());

    // Folding the two branches is a morphism of observed trees.
    let fold = tree(&[("0", "a", int(1), "1")], &[("0", 0), ("1", 5)]);
    let small = tree(&[("0", "a", int(1), "1"), ("0", "a", int(2), "2")], &[("0", 0), ("1", 5), ("2", 5)]);
    let f = ObsMorphism::new(fold.clone(), small.clone(), [("0", "0"), ("1", "1")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect())
        .unwrap();
    let arrows = vec![Arrow { source: fold.clone(), target: small.clone(), mor: f.clone() }];
    let id = HybridMorphism::identity(&clocked());
    let rich = vec![Arrow { source: clocked(), target: clocked(), mor: id.clone() }];
    let report = check_naturality(&inst, &arrows, &rich);
    assert_eq!(report.status(), LawStatus::Pass, "{:?}", report.first_failure());
    let g = ObsMorphism::identity(&small);
    let report = check_functoriality(&inst, &[(f, g)], &[(id.clone(), id)]);
    assert_eq!(report.status(), LawStatus::Pass, "{:?}", report.first_failure());
}

#[test]
fn non_uniform_counits_are_inconclusive() {
    let inst = HybridInstance::new(1, vec![vec![sw(ratio(5, 2))]], vec![BasisTemplate::clock()], tol());
    let report = check_triangle_identities(&inst, &[], &[hybrid_figure_default()]);
    assert_ne!(report.status(), LawStatus::Fail, "{:?}", report.first_failure());
}
