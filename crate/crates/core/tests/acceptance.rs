//! Desk-scale acceptance run: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use openmaps::adjunction::{check_bisim_transfer, check_functoriality, check_naturality, check_triangle_identities, Arrow, LawStatus, Verdict};
use openmaps::catalog::{figure_morphism, hybrid_figure_default, t_d, t_u, timed_cycle};
use openmaps::expr::parse_expr;
use openmaps::frontend::Model;
use openmaps::generate::{self, GenRng};
use openmaps::hybrid::{
    flow, hybrid_counit, hybrid_eta_rho, integrate, moves, sample_times, BasisTemplate, HybridConfig, IntegratorConfig,
};
use openmaps::lts::{
    greatest_bisimulation, is_open, strong_bisimilarity_with, BisimEngine, BisimRelation, Lts, LtsMorphism, OpenMode, OpenVerdict,
    StateId, Transition,
};
use openmaps::observations::{
    approx_bisimilarity, relation_from_approx_span, span_from_approx, tightest_bound, ApproxBisim, BoundedMorphism, ObsMorphism,
    ObsPoint, ObsSystem,
};
use openmaps::probabilistic::{f_forget, prob_bisimilarity, ProbInstance, ProbMorphism};
use openmaps::rational::{int, ratio, Rational};
use openmaps::timed::{
    eta_rho, iota_timed, replay_word, theta_step, timed_bisim_bounded, timed_counit, validate_strategy, Config, GTree, TimePolicy,
    TimedBisimVerdict, TimedLabel, Tts,
};
use rand::Rng;
use serde_json::Value;

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line { pass, detail: detail.into() }
}

type Criterion = (&'static str, Box<dyn Fn() -> Line>);

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Criterion> = vec![
        ("open-map characterization", Box::new(c1_open_maps)),
        ("bisimulation engines", Box::new(c2_engines)),
        ("relation/span equivalence", Box::new(c3_spans)),
        ("probabilistic coreflection laws", Box::new(c4_prob)),
        ("timed constructions", Box::new(c5_timed)),
        ("timed refutation soundness", Box::new(c6_timed_words)),
        ("hybrid numerics", Box::new(c7_numerics)),
        ("hybrid coreflection fragment laws", Box::new(c8_hybrid_laws)),
        ("witness feedback", Box::new({
            let d = dir.path().to_path_buf();
            move || c9_witnesses(&d)
        })),
        ("determinism", Box::new({
            let d = dir.path().to_path_buf();
            move || c10_determinism(&d)
        })),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let l = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            line(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !l.pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {} ({:.2}s)",
            if l.pass { "PASS" } else { "FAIL" },
            k + 1,
            l.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// 1 ------------------------------------------------------------------------

fn c1_open_maps() -> Line {
    let start = Instant::now();
    let mut rng = generate::rng(1);
    let (mut agree, mut open, mut cx_ok) = (0, 0, 0);
    for _ in 0..200 {
        let f = generate::morphism(&mut rng, 8, 3);
        let graph = is_open(&f, OpenMode::GraphBisim).unwrap();
        let lift = is_open(&f, OpenMode::LiftingOracle { max_len: 64 }).unwrap();
        if graph.is_open() == lift.is_open() {
            agree += 1;
        }
        if lift.is_open() {
            open += 1;
        }
        match (&graph, &lift) {
            (OpenVerdict::NotOpen(a), OpenVerdict::NotOpen(b)) if a.confirm(&f).is_ok() && b.confirm(&f).is_ok() => cx_ok += 1,
            (OpenVerdict::Open, OpenVerdict::Open) => cx_ok += 1,
            _ => {}
        }
    }
    let fig = figure_morphism();
    let fig_ok = match is_open(&fig, OpenMode::LiftingOracle { max_len: 64 }).unwrap() {
        OpenVerdict::NotOpen(cx) => cx.confirm(&fig).is_ok() && !is_open(&fig, OpenMode::GraphBisim).unwrap().is_open(),
        OpenVerdict::Open => false,
    };
    let secs = start.elapsed().as_secs_f64();
    line(
        agree == 200 && cx_ok == 200 && fig_ok && secs < 10.0 && open > 0 && open < 200,
        format!(
            "{agree}/200 agree ({open} open, {} not), {cx_ok}/200 counterexamples confirmed, figure not open with confirmed square: {fig_ok}, {secs:.2}s < 10s",
            200 - open
        ),
    )
}

// 2 ------------------------------------------------------------------------

fn c2_engines() -> Line {
    let start = Instant::now();
    let mut rng = generate::rng(2);
    let (mut equal, mut bisimilar) = (0, 0);
    for _ in 0..500 {
        let (t, u) = generate::lts_pair(&mut rng, 20, 2);
        let a = greatest_bisimulation(&t, &u, BisimEngine::PartitionRefinement);
        let b = greatest_bisimulation(&t, &u, BisimEngine::NaiveFixpoint);
        if a == b {
            equal += 1;
        }
        if a.contains(t.initial(), u.initial()) {
            bisimilar += 1;
        }
    }
    let figure = [BisimEngine::PartitionRefinement, BisimEngine::NaiveFixpoint]
        .into_iter()
        .all(|e| strong_bisimilarity_with(&t_u(), &t_d(), e).is_none());
    let secs = start.elapsed().as_secs_f64();
    line(
        equal == 500 && figure && secs < 30.0,
        format!("{equal}/500 greatest relations identical ({bisimilar} bisimilar pairs), T_u/T_d not bisimilar: {figure}, {secs:.2}s < 30s"),
    )
}

// 3 ------------------------------------------------------------------------

fn renamed<A: openmaps::lts::Action>(t: &Lts<A>, prefix: &str) -> (Lts<A>, BTreeMap<StateId, StateId>) {
    let map: BTreeMap<StateId, StateId> = t.states().iter().map(|s| (s.clone(), format!("{prefix}{s}"))).collect();
    let lts = Lts::new(
        map.values().cloned().collect(),
        map[t.initial()].clone(),
        t.transitions().iter().map(|tr| Transition::new(map[&tr.src].clone(), tr.label.clone(), map[&tr.dst].clone())).collect(),
    )
    .unwrap();
    (lts, map)
}

fn nudge(rng: &mut GenRng, p: &ObsPoint) -> ObsPoint {
    match p {
        ObsPoint::Vector(v) => ObsPoint::Vector(v.iter().map(|x| x + ratio(rng.gen_range(-2..=2), 4)).collect()),
        ObsPoint::Label(l) => ObsPoint::Label(l.clone()),
    }
}

/// Transfer conditions and the observation bound, checked pair by pair.
fn is_approx_bisim(t: &ObsSystem, u: &ObsSystem, r: &BisimRelation, eps: &Rational) -> bool {
    let inside = |s: &str, q: &str| r.pairs.contains(&(s.to_string(), q.to_string()));
    r.pairs.contains(&(t.lts().initial().to_string(), u.lts().initial().to_string()))
        && r.pairs.iter().all(|(s, q)| {
            t.space().distance(t.observe(s), u.observe(q)).within(eps)
                && t.lts().successors(s).iter().all(|(a, s2)| u.lts().successors(q).iter().any(|(b, q2)| a == b && inside(s2, q2)))
                && u.lts().successors(q).iter().all(|(b, q2)| t.lts().successors(s).iter().any(|(a, s2)| a == b && inside(s2, q2)))
        })
}

fn c3_spans() -> Line {
    let mut rng = generate::rng(3);
    let (mut sum_ok, mut round_ok) = (0, 0);
    for k in 0..100 {
        let base = generate::lts(&mut rng, 6, 2);
        let apex = generate::observe(&mut rng, base, 1 + k % 2);
        // Left leg: a relabelled copy with observations moved by at most 1/2.
        let (tl, rename) = renamed(apex.lts(), "t");
        let t_omega = apex.omega().iter().map(|(s, p)| (rename[s].clone(), nudge(&mut rng, p))).collect();
        let t = ObsSystem::new(tl, apex.space().clone(), t_omega).unwrap();
        let left = ObsMorphism::new(apex.clone(), t.clone(), rename).unwrap();
        // Right leg: the quotient of the apex by its greatest self-bisimulation.
        let g = greatest_bisimulation(apex.lts(), apex.lts(), BisimEngine::NaiveFixpoint);
        let rep: BTreeMap<StateId, StateId> = apex
            .lts()
            .states()
            .iter()
            .map(|s| (s.clone(), format!("u{}", g.pairs.iter().filter(|(a, _)| a == s).map(|(_, b)| b).min().unwrap_or(s))))
            .collect();
        let ul = Lts::new(
            rep.values().cloned().collect(),
            rep[apex.lts().initial()].clone(),
            apex.lts().transitions().iter().map(|tr| Transition::new(rep[&tr.src].clone(), tr.label.clone(), rep[&tr.dst].clone())).collect(),
        )
        .unwrap();
        let u_omega = ul
            .states()
            .iter()
            .map(|c| {
                let member = rep.iter().find(|(_, r)| *r == c).unwrap().0;
                (c.clone(), nudge(&mut rng, apex.observe(member)))
            })
            .collect();
        let u = ObsSystem::new(ul, apex.space().clone(), u_omega).unwrap();
        let right = ObsMorphism::new(apex.clone(), u.clone(), rep).unwrap();
        let (e1, e2) = (tightest_bound(&left).exact().unwrap(), tightest_bound(&right).exact().unwrap());
        let (l, r) = (BoundedMorphism { morphism: left, bound: e1.clone() }, BoundedMorphism { morphism: right, bound: e2.clone() });
        let Ok(rel) = relation_from_approx_span(&l, &r) else { continue };
        let eps = &e1 + &e2;
        if rel.epsilon == eps && is_approx_bisim(&t, &u, &rel.relation, &eps) {
            sum_ok += 1;
        }
        // relation -> span -> relation at the greatest relation for eps.
        let Ok(Some(greatest)) = approx_bisimilarity(&t, &u, &eps) else { continue };
        // The greatest relation ranges over reachable states only.
        let (rt, ru) = (t.lts().reachable(), u.lts().reachable());
        let contains = rel.relation.pairs.iter().filter(|(s, q)| rt.contains(s) && ru.contains(q)).all(|(s, q)| greatest.relation.contains(s, q));
        let Ok(span) = span_from_approx(&t, &u, &greatest) else { continue };
        let back: Result<ApproxBisim, _> = relation_from_approx_span(&span.left, &span.right);
        if contains && span.verify().is_ok() && span.left.bound == int(0) && back.is_ok_and(|b| b == greatest) {
            round_ok += 1;
        }
    }
    line(
        sum_ok == 100 && round_ok == 100,
        format!("{sum_ok}/100 spans give an (e1+e2)-approximate bisimulation with exact bound, {round_ok}/100 relation->span->relation round trips"),
    )
}

// 4 ------------------------------------------------------------------------

fn c4_prob() -> Line {
    let mut rng = generate::rng(4);
    let inst = ProbInstance;
    let rich: Vec<_> = (0..100).map(|_| generate::prob_system(&mut rng, 6, 2)).collect();
    let base: Vec<_> = rich.iter().map(f_forget).collect();
    let mut report = check_triangle_identities(&inst, &base, &rich);
    let covers: Vec<ProbMorphism> = rich.iter().map(|p| generate::prob_cover(&mut rng, p)).collect();
    let rich_arrows: Vec<Arrow<_, ProbMorphism>> =
        covers.iter().map(|g| Arrow { source: g.source().clone(), target: g.target().clone(), mor: g.clone() }).collect();
    let lts_mors: Vec<LtsMorphism> = (0..100).map(|_| generate::morphism(&mut rng, 6, 2)).collect();
    let base_arrows: Vec<Arrow<_, LtsMorphism>> =
        lts_mors.iter().map(|f| Arrow { source: f.source().clone(), target: f.target().clone(), mor: f.clone() }).collect();
    report.merge(check_naturality(&inst, &base_arrows, &rich_arrows));
    let rich_pairs: Vec<_> = covers.iter().map(|g| (g.clone(), ProbMorphism::identity(g.target()))).collect();
    let base_pairs: Vec<_> = lts_mors.iter().map(|f| (f.clone(), LtsMorphism::identity(f.target()))).collect();
    report.merge(check_functoriality(&inst, &base_pairs, &rich_pairs));
    let laws = report.status() == LawStatus::Pass;
    let (mut transfer, mut both_yes) = (0, 0);
    for _ in 0..100 {
        let (t, u) = generate::lts_pair(&mut rng, 6, 2);
        let (x, y) = (generate::with_probabilities(&mut rng, t), generate::with_probabilities(&mut rng, u));
        let r = check_bisim_transfer(
            &inst,
            &x,
            &y,
            |a, b| if strong_bisimilarity_with(a, b, BisimEngine::NaiveFixpoint).is_some() { Verdict::Bisimilar } else { Verdict::NotBisimilar },
            |a, b| match prob_bisimilarity(a, b) {
                Some(span) if span.verify().is_ok() => Verdict::Bisimilar,
                Some(_) => Verdict::Inconclusive { reason: "span failed verification".into() },
                None => Verdict::NotBisimilar,
            },
        );
        if r.outcome.is_equal() {
            transfer += 1;
            if r.base == Verdict::Bisimilar {
                both_yes += 1;
            }
        }
    }
    line(
        laws && transfer == 100,
        format!(
            "{} law checks {} on 100 systems, 100 rich and 100 base arrows; transfer {transfer}/100 ({both_yes} bisimilar on both sides)",
            report.checks.len(),
            if laws { "all equal" } else { "NOT all equal" }
        ),
    )
}

// 5 ------------------------------------------------------------------------

fn cfg(state: &str, nu: &[Rational]) -> Config {
    Config { state: state.into(), nu: nu.to_vec() }
}

/// Clock `U` after each step of the run to `edge`, by the forward recursion
/// `ν_0 = 0`, `ν_j = 0` if step `j` is in `U`, else `ν_{j-1} + t_j`; the guard
/// of the next step is `ν_n + t_{n+1}`.
fn guard_by_recursion(run: &[(usize, Rational)], next_time: &Rational, u: &BTreeSet<usize>) -> Rational {
    let mut nu = int(0);
    for (e, t) in run {
        nu = if u.contains(e) { int(0) } else { &nu + t };
    }
    &nu + next_time
}

fn c5_timed() -> Line {
    let mut rng = generate::rng(5);
    // (a) theta steps on the figure system.
    let t = timed_cycle();
    let s1 = theta_step(&t, &cfg("q1", &[int(0), int(0)]), "a", &ratio(3, 2)).unwrap();
    let s2 = theta_step(&t, &cfg("q2", &[ratio(3, 2), int(0)]), "b", &int(1)).unwrap();
    let s3 = theta_step(&t, &cfg("q2", &[ratio(3, 2), int(0)]), "b", &ratio(1, 2)).unwrap();
    let a_ok = s1 == vec![cfg("q2", &[ratio(3, 2), int(0)])] && s2 == vec![cfg("q3", &[ratio(5, 2), int(1)])] && s3.is_empty();
    // (b) guard times against the recursion.
    let (mut b_ok, mut b_checks) = (0, 0);
    for _ in 0..100 {
        let tree = generate::timed_tree(&mut rng, 10, 2);
        let iota = iota_timed(&tree).unwrap();
        let edges = iota.tree_edges().to_vec();
        let n = edges.len();
        let mut subsets: Vec<BTreeSet<usize>> = if n <= 6 {
            (0..1u32 << n).map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect()
        } else {
            (0..128).map(|_| (0..n).filter(|_| rng.gen_bool(0.5)).collect()).collect()
        };
        subsets.push((0..n).collect());
        let mut all = true;
        for (i, e) in edges.iter().enumerate() {
            let path: Vec<(usize, Rational)> = iota.run_to(i)[..iota.run_to(i).len() - 1].iter().map(|&j| (j, edges[j].label.time.clone())).collect();
            for u in &subsets {
                b_checks += 1;
                all &= iota.guard_time(i, u) == guard_by_recursion(&path, &e.label.time, u);
            }
        }
        if all {
            b_ok += 1;
        }
    }
    // (c) eta and rho inverse on 50 trees.
    let c_ok = (0..50).filter(|_| eta_rho(&generate::timed_tree(&mut rng, 8, 2)).map(|er| er.verify().is_ok()).unwrap_or(false)).count();
    // (d) counit conditions to depth 3 on 20 systems.
    let mut d_ok = 0;
    let mut d_edges = 0;
    for _ in 0..20 {
        let sys: Tts = generate::tts(&mut rng, 4, 2, false);
        let frag = GTree::new(&sys).unwrap().materialize(3, &TimePolicy::Canonical);
        let rep = timed_counit(&sys, &frag).unwrap();
        d_edges += rep.transitions_checked;
        if rep.is_ok() {
            d_ok += 1;
        }
    }
    line(
        a_ok && b_ok == 100 && c_ok == 50 && d_ok == 20,
        format!(
            "(a) figure theta steps exact: {a_ok}; (b) {b_ok}/100 trees, {b_checks} guard times equal the recursion; (c) {c_ok}/50 eta/rho inverse; (d) {d_ok}/20 counits valid over {d_edges} fragment transitions"
        ),
    )
}

// 6 ------------------------------------------------------------------------

fn c6_timed_words() -> Line {
    let mut rng = generate::rng(6);
    let mut pairs: Vec<(Tts, Tts, bool)> = Vec::new();
    for (a, b) in [("timed_point1", "timed_point2"), ("timed_upto2", "timed_upto3"), ("timed_branch_joined", "timed_branch_split")] {
        pairs.push((fixture_tts(a), fixture_tts(b), false));
    }
    for k in 0..250 {
        let det = k < 150;
        let (t, u) = generate::tts_pair(&mut rng, 4, 2, det);
        pairs.push((t, u, det));
    }
    let (mut verdicts, mut words, mut words_ok, mut branching, mut branching_ok, mut det_missing) = (0, 0, 0, 0, 0, 0);
    for (t, u, det) in &pairs {
        let TimedBisimVerdict::NotBisimilar { strategy, word } = timed_bisim_bounded(t, u, 3, &TimePolicy::Canonical).unwrap() else { continue };
        verdicts += 1;
        match word {
            Some(w) => {
                words += 1;
                let (l, r) = (replay_word(t, &w).unwrap(), replay_word(u, &w).unwrap());
                if l != r {
                    words_ok += 1;
                }
            }
            None => {
                branching += 1;
                if *det {
                    det_missing += 1;
                }
                if validate_strategy(t, u, &strategy).is_ok() {
                    branching_ok += 1;
                }
            }
        }
    }
    line(
        words_ok == words && det_missing == 0 && branching_ok == branching && words > 0,
        format!(
            "{verdicts} not-bisimilar verdicts on {} pairs; {words_ok}/{words} emitted words accepted by exactly one side; \
             {branching} branching-only verdicts (nondeterministic pairs, no separating word within depth 3) carry strategies, {branching_ok} re-validated",
            pairs.len()
        ),
    )
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fixture_tts(name: &str) -> Tts {
    match openmaps::frontend::load_model(&fixtures().join(format!("{name}.json"))).unwrap() {
        Model::Tts(t) => t,
        m => panic!("{name} is {:?}", m.kind()),
    }
}

// 7 ------------------------------------------------------------------------

fn c7_numerics() -> Line {
    let fig = hybrid_figure_default();
    let tr = flow(&fig, "M1", &vec![vec![5.0], vec![10.0]], 2.5, &IntegratorConfig::default()).unwrap();
    let end = tr.end();
    let fig_err = (end[0][0] - 7.5).abs().max((end[1][0] - 7.5).abs());
    let f = [parse_expr("x").unwrap()];
    let vars = ["x".to_string()];
    let err = |h: f64| {
        let xs = integrate(&f, &vars, &[1.0], &sample_times(1.0, h)).unwrap();
        (xs.last().unwrap()[0] - 1f64.exp()).abs()
    };
    let ratio = err(0.1) / err(0.05);
    let step = moves(&fig, &HybridConfig::initial(&fig), "switch", 2.5, &IntegratorConfig::default()).unwrap();
    let run_ok = step.len() == 1 && step[0].config.approx_eq(&HybridConfig::new("M2", vec![vec![7.5], vec![7.5]]), 1e-6);
    line(
        fig_err <= 1e-8 && ratio >= 8.0 && run_ok,
        format!("figure endpoint error {fig_err:.2e} <= 1e-8; error ratio on x' = x {ratio:.2} >= 8; (M1,(5,10)) -(switch,2.5)-> (M2,(7.5,7.5)): {run_ok}"),
    )
}

// 8 ------------------------------------------------------------------------

fn c8_hybrid_laws() -> Line {
    let cfg = IntegratorConfig::default();
    let sw = |t: Rational| TimedLabel::new("switch", t);
    let words = vec![vec![sw(ratio(5, 2)), sw(ratio(5, 2))], vec![sw(int(3))]];
    let fig = hybrid_counit(&hybrid_figure_default(), 2, &words, &cfg).unwrap();
    let fig_ok = fig.report.is_ok() && fig.morphism.epsilon == 0.0;
    let mut rng = generate::rng(8);
    let (mut gen_ok, mut runs) = (0, 0);
    for _ in 0..10 {
        let (sys, words) = generate::linear_hybrid(&mut rng, 2, &cfg);
        let c = hybrid_counit(&sys, 2, &words, &cfg).unwrap();
        runs += c.report.runs_checked;
        if c.report.is_ok() && c.morphism.epsilon == 0.0 {
            gen_ok += 1;
        }
    }
    let rate = BasisTemplate { name: "v".into(), vars: vec!["x".into()], init: vec![1.0], flow: vec![parse_expr("2").unwrap()], reset: None };
    let mut er_ok = 0;
    for _ in 0..20 {
        let tree = generate::observed_tree(&mut rng, 5, 2);
        let basis = vec![BasisTemplate::clock().on(tree.lts()), rate.on(tree.lts())];
        if hybrid_eta_rho(&tree, &basis, 3, &cfg).is_ok_and(|er| er.verify().is_ok()) {
            er_ok += 1;
        }
    }
    line(
        fig_ok && gen_ok == 10 && er_ok == 20,
        format!("figure counit valid at eps = 0: {fig_ok}; {gen_ok}/10 generated affine systems ({runs} runs checked); {er_ok}/20 eta/rho composites identities within 1e-6"),
    )
}

// 9 and 10 -------------------------------------------------------------------

fn write(dir: &Path, name: &str, m: &Model) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(&m.to_file()).unwrap()).unwrap();
    p.display().to_string()
}

fn fx(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

/// Commands paired with the inputs their witness is checked against.
fn corpus(dir: &Path) -> Vec<(Vec<String>, Vec<String>)> {
    let mut out: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    let mut push = |args: Vec<String>, inputs: Vec<String>| out.push((args, inputs));
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    for (a, b, extra) in [
        ("tu.json", "td.json", vec![]),
        ("cycle.json", "loop.json", vec![]),
        ("prob_a.json", "prob_b.json", vec![]),
        ("prob_a.json", "prob_c.json", vec![]),
        ("obs_a.json", "obs_b.json", vec!["--epsilon", "1/4"]),
        ("obs_a.json", "obs_b.json", vec!["--epsilon", "1/2"]),
        ("tree_a.json", "tree_b.json", vec!["--epsilon", "1/2"]),
        ("timed_point1.json", "timed_point2.json", vec![]),
        ("timed_upto2.json", "timed_upto3.json", vec![]),
        ("timed_branch_joined.json", "timed_branch_split.json", vec![]),
        ("hybrid_figure.json", "hybrid_shifted.json", vec!["--epsilon", "0.4"]),
    ] {
        let mut args = vec!["bisim".to_string(), fx(a), fx(b)];
        args.extend(s(&extra));
        push(args, vec![fx(a), fx(b)]);
    }
    let mut args = s(&["bisim"]);
    args.extend([fx("hybrid_figure.json"), fx("hybrid_shifted.json"), "--epsilon".into(), "0.6".into(), "--words".into(), fx("switch_words.json")]);
    push(args, vec![fx("hybrid_figure.json"), fx("hybrid_shifted.json")]);
    for (f, a, b) in [("figure_map.json", "tu.json", "td.json"), ("fold_map.json", "cycle.json", "loop.json")] {
        push(vec!["open-check".into(), fx(f), fx(a), fx(b)], vec![fx(f), fx(a), fx(b)]);
    }
    for (f, a, b) in [
        ("not_a_map.json", "tu.json", "td.json"),
        ("hybrid_identity_map.json", "hybrid_figure.json", "hybrid_shifted.json"),
        ("hybrid_swapped_map.json", "hybrid_figure.json", "hybrid_figure.json"),
    ] {
        push(vec!["morphism-check".into(), fx(f), fx(a), fx(b), "--words".into(), fx("switch_words.json")], vec![fx(f), fx(a), fx(b)]);
    }
    for (i, sm) in [("prob", "samples_prob.json"), ("timed", "samples_timed.json"), ("hybrid", "samples_hybrid.json")] {
        push(vec!["laws-check".into(), "--instance".into(), i.into(), "--samples".into(), fx(sm)], vec![fx(sm)]);
    }
    push(s(&["validate"]).into_iter().chain([fx("prob_bad_sum.json")]).collect(), vec![]);

    let mut rng = generate::rng(9);
    for k in 0..25 {
        let (t, u) = generate::lts_pair(&mut rng, 6, 2);
        let (a, b) = (write(dir, &format!("lts{k}a.json"), &Model::Lts(t)), write(dir, &format!("lts{k}b.json"), &Model::Lts(u)));
        push(vec!["bisim".into(), a.clone(), b.clone()], vec![a, b]);
    }
    for k in 0..15 {
        let (t, u) = generate::lts_pair(&mut rng, 5, 2);
        let (t, u) = (generate::observe(&mut rng, t, 1), generate::observe(&mut rng, u, 1));
        let (a, b) = (write(dir, &format!("obs{k}a.json"), &Model::Obs(t)), write(dir, &format!("obs{k}b.json"), &Model::Obs(u)));
        push(vec!["bisim".into(), a.clone(), b.clone(), "--epsilon".into(), "1".into()], vec![a, b]);
    }
    for k in 0..15 {
        let (t, u) = generate::lts_pair(&mut rng, 5, 2);
        let (t, u) = (generate::with_probabilities(&mut rng, t), generate::with_probabilities(&mut rng, u));
        let (a, b) = (write(dir, &format!("prob{k}a.json"), &Model::Prob(t)), write(dir, &format!("prob{k}b.json"), &Model::Prob(u)));
        push(vec!["bisim".into(), a.clone(), b.clone()], vec![a, b]);
    }
    for k in 0..25 {
        let f = generate::morphism(&mut rng, 6, 2);
        let mapping = openmaps::frontend::MorphismFile { map: f.map().clone(), ..Default::default() };
        let a = write(dir, &format!("mor{k}src.json"), &Model::Lts(f.source().clone()));
        let b = write(dir, &format!("mor{k}dst.json"), &Model::Lts(f.target().clone()));
        let m = write(dir, &format!("mor{k}.json"), &Model::Morphism(mapping.clone()));
        push(vec!["open-check".into(), m.clone(), a.clone(), b.clone()], vec![m.clone(), a.clone(), b.clone()]);
        // Send one state somewhere else; usually no longer a morphism.
        let mut bent = mapping;
        if let Some((s, _)) = bent.map.iter().nth(rng.gen_range(0..f.map().len())).map(|(s, t)| (s.clone(), t.clone())) {
            let targets: Vec<&StateId> = f.target().states().iter().collect();
            bent.map.insert(s, targets[rng.gen_range(0..targets.len())].clone());
        }
        let m2 = write(dir, &format!("mor{k}bent.json"), &Model::Morphism(bent));
        push(vec!["morphism-check".into(), m2.clone(), a.clone(), b.clone()], vec![m2, a, b]);
    }
    for k in 0..30 {
        let (t, u) = generate::tts_pair(&mut rng, 3, 2, k % 2 == 0);
        let (a, b) = (write(dir, &format!("tts{k}a.json"), &Model::Tts(t)), write(dir, &format!("tts{k}b.json"), &Model::Tts(u)));
        push(vec!["bisim".into(), a.clone(), b.clone()], vec![a, b]);
    }
    let cfg = IntegratorConfig::default();
    for k in 0..5 {
        let (sys, words) = generate::linear_hybrid(&mut rng, 2, &cfg);
        let shifted = sys.with_initial_valuation(&sys.initial_valuation().iter().map(|v| v.iter().map(|x| x + 0.25).collect()).collect::<Vec<_>>()).unwrap();
        let a = write(dir, &format!("hyb{k}a.json"), &Model::Hybrid(sys));
        let b = write(dir, &format!("hyb{k}b.json"), &Model::Hybrid(shifted));
        let w = write(dir, &format!("hyb{k}w.json"), &Model::Words(words));
        for eps in ["0.1", "0.3"] {
            push(vec!["bisim".into(), a.clone(), b.clone(), "--epsilon".into(), eps.into(), "--words".into(), w.clone()], vec![a.clone(), b.clone()]);
        }
    }
    out
}

fn run(args: &[String], seed: &str) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_openmaps")).args(args).env("OPENMAPS_SEED", seed).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("utf-8"))
}

fn c9_witnesses(dir: &Path) -> Line {
    let sub = dir.join("c9");
    std::fs::create_dir_all(&sub).unwrap();
    let mut kinds: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut commands = 0;
    let mut failures = Vec::new();
    for (k, (args, inputs)) in corpus(&sub).iter().enumerate() {
        commands += 1;
        let (_, out) = run(args, "0");
        let v: Value = serde_json::from_str(&out).unwrap_or(Value::Null);
        let Some(w) = v.get("witness") else { continue };
        let kind = w["kind"].as_str().unwrap_or("?").to_string();
        let path = sub.join(format!("out{k}.json"));
        std::fs::write(&path, &out).unwrap();
        let mut check = vec!["check-witness".to_string(), path.display().to_string()];
        check.extend(inputs.iter().cloned());
        let (code, res) = run(&check, "0");
        let confirmed = code == 0 && serde_json::from_str::<Value>(&res).is_ok_and(|r| r["verdict"] == "confirmed");
        let e = kinds.entry(kind).or_default();
        e.1 += 1;
        if confirmed {
            e.0 += 1;
        } else {
            failures.push(format!("{} -> {}", args.join(" "), res.trim()));
        }
    }
    let (ok, total) = kinds.values().fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    let by_kind: Vec<String> = kinds.iter().map(|(k, (c, t))| format!("{k} {c}/{t}")).collect();
    let mut detail = format!("{ok}/{total} witnesses from {commands} commands confirmed by check-witness ({})", by_kind.join(", "));
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first failure: {f}"));
    }
    line(ok == total && total > 0, detail)
}

fn c10_determinism(dir: &Path) -> Line {
    let sub = dir.join("c10");
    std::fs::create_dir_all(&sub).unwrap();
    let suite = corpus(&sub);
    let transcript = |seed: &str| -> String {
        suite
            .iter()
            .map(|(args, _)| {
                let (code, out) = run(args, seed);
                format!("$ {}\n[{code}]\n{out}", args.join(" "))
            })
            .collect()
    };
    let (a, b) = (transcript("42"), transcript("42"));
    line(a == b, format!("{} commands run twice with OPENMAPS_SEED=42: {} bytes each, identical: {}", suite.len(), a.len(), a == b))
}
