//! Subcommands as pure functions from inputs to an exit code and a JSON body.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::model::{load_model, ArrowEntry, LoadError, Model, ModelKind, MorphismFile, Samples, TemplateEntry};
use super::witness::Witness;
use crate::adjunction::{
    check_bisim_transfer, check_functoriality, check_naturality, check_triangle_identities, AdjunctionInstance, Arrow,
    Comparison, LawCheck, LawReport, LawStatus, Verdict,
};
use crate::error::ModelError;
use crate::expr::parse_expr_in;
use crate::game::{distinguishing_strategy, obs_apart};
use crate::hybrid::{
    approx_bisim_hybrid, check_hybrid_morphism, h_unfold, k_translate, BasisTemplate, HybridBisimVerdict, HybridInstance, HybridMorphism, HybridSystem, IntegratorConfig,
};
use crate::lts::{check_morphism, is_open, strong_bisimilarity, Action, Lts, LtsMorphism, OpenMode, OpenVerdict, StateId};
use crate::observations::{approx_bisimilarity, is_open_obs, tightest_bound, v_unfold, BoundedMorphism, ObsMorphism, ObsSystem};
use crate::probabilistic::{check_prob_morphism, f_forget, prob_bisimilarity, ProbInstance, ProbMorphism, ProbSystem};
use crate::rational::{format_rational, parse_rational, to_f64, Rational};
use crate::timed::{
    check_tts_morphism, timed_bisim_bounded, GTree, Semantics, TimePolicy, TimedBisimVerdict, TimedInstance,
    TimedLabel, TimedMorphism, TimedObject, TimedWord, Tts, TtsMorphism,
};
use crate::unfolding::{check_unf, is_tree, unfold as unfold_lts, UnfOpenness};

pub const EXIT_VERDICT: u8 = 0;
pub const EXIT_INCONCLUSIVE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

pub const DEFAULT_TIMED_DEPTH: usize = 3;
pub const DEFAULT_HYBRID_DEPTH: usize = 2;
pub const DEFAULT_MAX_LEN: usize = 64;
/// Points sampled per condition when checking hybrid morphisms.
pub const HYBRID_SAMPLE_POINTS: usize = 8;

/// Bounded timed checks are refutation-sound only.
pub const TIMED_NOTE: &str =
    "bounded game: a not-bisimilar verdict is a proof, no-counterexample-found within the depth is not";

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub body: Value,
}

impl Outcome {
    fn new(code: u8, verdict: &str, fields: Value) -> Self {
        let mut body = match fields {
            Value::Object(m) => Value::Object(m),
            Value::Null => json!({}),
            other => json!({ "result": other }),
        };
        body["verdict"] = Value::from(verdict);
        Outcome { code, body }
    }

    fn verdict(verdict: &str, fields: Value) -> Self {
        Outcome::new(EXIT_VERDICT, verdict, fields)
    }

    fn inconclusive(verdict: &str, fields: Value) -> Self {
        Outcome::new(EXIT_INCONCLUSIVE, verdict, fields)
    }

    pub fn verdict_name(&self) -> &str {
        self.body["verdict"].as_str().unwrap_or_default()
    }

    pub fn witness(&self) -> Option<&Value> {
        self.body.get("witness")
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.body).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl CommandError {
    pub fn outcome(&self) -> Outcome {
        let error = match self {
            CommandError::Load(LoadError::Io { path, .. }) => json!({ "category": "io", "path": path, "message": self.to_string() }),
            CommandError::Load(LoadError::Parse { path, source }) => json!({
                "category": source.kind,
                "path": path,
                "line": source.line,
                "column": source.column,
                "message": source.message,
            }),
            CommandError::Usage(m) => json!({ "category": "usage", "message": m }),
            CommandError::Model(e) => json!({ "category": "invariant", "message": e.to_string() }),
        };
        Outcome::new(EXIT_INPUT, "input-error", json!({ "error": error }))
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CommandError {
    CommandError::Usage(msg.into())
}

fn finish(r: Result<Outcome, CommandError>) -> Outcome {
    r.unwrap_or_else(|e| e.outcome())
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("domain values serialize")
}

pub(crate) fn load(path: &Path) -> Result<Model, CommandError> {
    Ok(load_model(path)?)
}

fn load_words(path: Option<&Path>) -> Result<Vec<TimedWord>, CommandError> {
    match path {
        None => Ok(Vec::new()),
        Some(p) => match load(p)? {
            Model::Words(w) => Ok(w),
            m => Err(usage(format!("{} holds a {} model, expected words", p.display(), m.kind()))),
        },
    }
}

fn load_morphism(path: &Path) -> Result<MorphismFile, CommandError> {
    match load(path)? {
        Model::Morphism(m) => Ok(m),
        m => Err(usage(format!("{} holds a {} model, expected a morphism", path.display(), m.kind()))),
    }
}

pub fn parse_rational_arg(what: &str, text: &str) -> Result<Rational, CommandError> {
    parse_rational(text).map_err(|e| usage(format!("{what}: {e}")))
}

/// A decimal, or a rational `num/den`.
pub fn parse_real_arg(what: &str, text: &str) -> Result<f64, CommandError> {
    match text.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Ok(to_f64(&parse_rational_arg(what, text)?)),
    }
}

/// `canonical`, or `grid:t1,t2,...` with rational delays.
pub fn parse_policy(text: &str) -> Result<TimePolicy, CommandError> {
    if text == "canonical" {
        return Ok(TimePolicy::Canonical);
    }
    let Some(list) = text.strip_prefix("grid:") else {
        return Err(usage(format!("unknown time policy `{text}`; use `canonical` or `grid:t1,t2,...`")));
    };
    let times = list.split(',').map(|t| parse_rational_arg("grid delay", t.trim())).collect::<Result<Vec<_>, _>>()?;
    if times.is_empty() {
        return Err(usage("the grid is empty"));
    }
    Ok(TimePolicy::Grid { times })
}

fn summary(m: &Model) -> Value {
    match m {
        Model::Lts(t) => json!({ "states": t.states().len(), "transitions": t.transitions().len(), "initial": t.initial() }),
        Model::Obs(t) => json!({ "states": t.lts().states().len(), "transitions": t.lts().transitions().len(), "initial": t.lts().initial() }),
        Model::Tree(t) => json!({ "states": t.lts().states().len(), "transitions": t.lts().transitions().len(), "initial": t.lts().initial() }),
        Model::Prob(t) => json!({ "states": t.lts().states().len(), "transitions": t.lts().transitions().len(), "initial": t.lts().initial() }),
        Model::Tts(t) => json!({
            "states": t.states().len(),
            "clocks": t.clock_names(),
            "transitions": t.transitions().len(),
            "initial": t.initial(),
        }),
        Model::Hybrid(h) => json!({
            "modes": h.modes().len(),
            "subsystems": h.subsystems().iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
            "events": h.events().len(),
            "initial": h.initial_mode(),
        }),
        Model::Morphism(f) => json!({ "mapped": f.map.len() }),
        Model::Words(w) => json!({ "words": w.len() }),
        Model::Samples(s) => json!({ "objects": s.objects.len(), "rich": s.rich.len(), "arrows": s.arrows.len() }),
    }
}

pub fn validate(path: &Path) -> Outcome {
    finish(load(path).map(|m| validate_model(&m)))
}

pub fn validate_model(m: &Model) -> Outcome {
    Outcome::verdict("valid", json!({ "kind": m.kind(), "summary": summary(m) }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Translation {
    /// A probabilistic system to its underlying system.
    ForgetProb,
    /// The `(action, time)`-successors of a configuration of a timed system.
    ThetaStep { action: String, time: String, state: Option<String>, valuation: Option<String> },
    /// The `(action, time)`-successors of a configuration of a hybrid system.
    KStep { action: String, time: String, mode: Option<String>, valuation: Option<String> },
}

pub fn translate(path: &Path, how: &Translation) -> Outcome {
    finish(translate_inner(path, how))
}

fn translate_inner(path: &Path, how: &Translation) -> Result<Outcome, CommandError> {
    let model = load(path)?;
    match (how, model) {
        (Translation::ForgetProb, Model::Prob(p)) => {
            Ok(Outcome::verdict("translated", json!({ "result": Model::Lts(f_forget(&p)).to_file() })))
        }
        (Translation::ThetaStep { action, time, state, valuation }, Model::Tts(t)) => {
            let sem = Semantics::new(&t)?;
            let mut cfg = sem.initial();
            if let Some(s) = state {
                if !t.states().contains(s) {
                    return Err(usage(format!("`{s}` is not a state")));
                }
                cfg.state = s.clone();
            }
            if let Some(v) = valuation {
                let nu = v
                    .split(',')
                    .filter(|x| !x.trim().is_empty())
                    .map(|x| parse_rational_arg("clock value", x.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                if nu.len() != cfg.nu.len() {
                    return Err(usage(format!("expected {} clock values, in the order {:?}", cfg.nu.len(), t.clock_names())));
                }
                cfg.nu = nu;
            }
            let t_val = parse_rational_arg("time", time)?;
            let succ = sem.theta_step(&cfg, action, &t_val)?;
            Ok(Outcome::verdict(
                "translated",
                json!({
                    "clocks": t.clock_names(),
                    "from": cfg,
                    "label": TimedLabel::new(action.clone(), t_val),
                    "successors": succ,
                }),
            ))
        }
        (Translation::KStep { action, time, mode, valuation }, Model::Hybrid(h)) => {
            let k = k_translate(&h, IntegratorConfig::default());
            let mut from = k.initial();
            if let Some(m) = mode {
                if h.mode(m).is_none() {
                    return Err(usage(format!("`{m}` is not a mode")));
                }
                from.mode = m.clone();
            }
            if let Some(v) = valuation {
                from.sigma = parse_valuation(v, &h)?;
            }
            let label = TimedLabel::new(action.clone(), parse_rational_arg("time", time)?);
            let succ = k.successors(&from, &label)?;
            let observed = succ.iter().map(|c| k.observe(c).map(|o| o.iter().map(|x| crate::hybrid::format_f64(*x)).collect::<Vec<_>>())).collect::<Result<Vec<_>, _>>()?;
            Ok(Outcome::verdict(
                "translated",
                json!({ "from": from, "label": label, "successors": succ, "observations": observed }),
            ))
        }
        (how, m) => Err(usage(format!("{how:?} does not apply to a {} model", m.kind()))),
    }
}

/// `"5,10;0"`: subsystems separated by `;`, components by `,`.
fn parse_valuation(text: &str, h: &HybridSystem) -> Result<Vec<Vec<f64>>, CommandError> {
    let parts: Vec<&str> = text.split(';').collect();
    if parts.len() != h.subsystems().len() {
        return Err(usage(format!("expected {} subsystem valuations separated by `;`", h.subsystems().len())));
    }
    parts
        .iter()
        .zip(h.subsystems())
        .map(|(p, s)| {
            let v = p.split(',').filter(|x| !x.trim().is_empty()).map(|x| parse_real_arg("value", x)).collect::<Result<Vec<_>, _>>()?;
            if v.len() != s.dim() {
                return Err(usage(format!("subsystem `{}` has {} variables", s.name, s.dim())));
            }
            Ok(v)
        })
        .collect()
}

fn unfold_fields<A: Action + Serialize>(
    tree: Value,
    depth_bound: Option<usize>,
    frontier: &BTreeSet<StateId>,
    unf: &LtsMorphism<A>,
    open: Value,
) -> Value {
    json!({ "result": tree, "depth_bound": depth_bound, "frontier": frontier, "unf": unf.map(), "unf_open": open })
}

fn openness_json<A: Action + Serialize>(o: &UnfOpenness<A>) -> Value {
    match o {
        UnfOpenness::Open { exact } => json!({ "open": true, "exact": exact }),
        UnfOpenness::NotOpen(cx) => json!({ "open": false, "counterexample": cx }),
        UnfOpenness::NotAMorphism(r) => json!({ "open": false, "violations": r.violations }),
    }
}

pub fn unfold(path: &Path, depth: usize, words: Option<&Path>) -> Outcome {
    finish(unfold_inner(path, depth, words))
}

fn unfold_inner(path: &Path, depth: usize, words: Option<&Path>) -> Result<Outcome, CommandError> {
    let words = load_words(words)?;
    let fields = match load(path)? {
        Model::Lts(t) => {
            let (tree, unf) = unfold_lts(&t, depth);
            let open = openness_json(&check_unf(&tree, &unf));
            unfold_fields(Model::Lts(tree.lts.clone()).to_file(), tree.depth_bound, &tree.frontier, &unf, open)
        }
        Model::Obs(t) => {
            let (tree, unf) = v_unfold(&t, depth);
            let open = match crate::observations::check_v_unf(&tree, &unf) {
                Ok(OpenVerdict::Open) => json!({ "open": true }),
                Ok(OpenVerdict::NotOpen(cx)) => json!({ "open": false, "counterexample": cx }),
                Err(e) => json!({ "open": false, "error": e }),
            };
            let mut f = unfold_fields(
                Model::Obs(tree.system.clone()).to_file(),
                tree.depth_bound,
                &tree.frontier,
                &unf.morphism.underlying().clone(),
                open,
            );
            f["bound"] = Value::from(format_rational(&unf.bound));
            f
        }
        Model::Tts(t) => {
            let g = GTree::new(&t)?;
            let frag = if words.is_empty() { g.materialize(depth, &TimePolicy::Canonical) } else { g.materialize_words(&words)? };
            json!({
                "result": frag.lts,
                "frontier": frag.frontier,
                "runs": frag.runs.iter().map(|(id, r)| (id.clone(), r.last().clone())).collect::<BTreeMap<_, _>>(),
            })
        }
        Model::Hybrid(h) => {
            let frag = h_unfold(&h, depth, &words, &IntegratorConfig::default())?;
            json!({
                "result": Model::Tree(frag.obs.clone()).to_file(),
                "runs": frag.runs.iter().map(|(id, r)| (id.clone(), r.last().clone())).collect::<BTreeMap<_, _>>(),
                "integrator": IntegratorConfig::default(),
            })
        }
        m => return Err(usage(format!("unfold applies to lts, obs, tts and hybrid models, not {}", m.kind()))),
    };
    Ok(Outcome::verdict("unfolded", fields))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BisimArgs {
    pub epsilon: Option<String>,
    pub depth: Option<usize>,
    pub policy: Option<String>,
    pub words: Option<PathBuf>,
}

pub fn bisim(a: &Path, b: &Path, args: &BisimArgs) -> Outcome {
    finish((|| bisim_inner(load(a)?, load(b)?, args, load_words(args.words.as_deref())?))())
}

/// `bisim` on models already in memory; `args.words` is ignored in favour of `words`.
pub fn bisim_models(a: Model, b: Model, args: &BisimArgs, words: Vec<TimedWord>) -> Outcome {
    finish(bisim_inner(a, b, args, words))
}

fn strategy_witness<A: Action + Serialize>(system: ModelKind, strategy: &crate::game::Strategy<A>, epsilon: Option<&Rational>) -> Witness {
    Witness::DistinguishingWord {
        system,
        word: Some(to_json(&strategy.spine())),
        strategy: to_json(strategy),
        epsilon: epsilon.map(format_rational),
        integrator: None,
    }
}

fn observed_bisim<A: Action + Serialize>(
    system: ModelKind,
    t: &ObsSystem<A>,
    u: &ObsSystem<A>,
    eps: &Rational,
) -> Result<Outcome, CommandError> {
    if t.space() != u.space() {
        return Err(usage("the systems observe different spaces"));
    }
    let e = format_rational(eps);
    Ok(match approx_bisimilarity(t, u, eps)? {
        Some(r) => Outcome::verdict(
            "bisimilar",
            json!({
                "epsilon": e,
                "witness": Witness::BisimulationRelation { system, pairs: r.relation.pairs, epsilon: Some(e.clone()) },
            }),
        ),
        None => {
            let s = distinguishing_strategy(t.lts(), u.lts(), obs_apart(t, u, eps)).expect("no ε-bisimulation implies a winning Spoiler");
            Outcome::verdict("not-bisimilar", json!({ "epsilon": e, "rounds": s.rounds(), "witness": strategy_witness(system, &s, Some(eps)) }))
        }
    })
}

fn plain_bisim(system: ModelKind, t: &Lts, u: &Lts) -> Outcome {
    match strong_bisimilarity(t, u) {
        Some(r) => Outcome::verdict("bisimilar", json!({ "witness": Witness::BisimulationRelation { system, pairs: r.pairs, epsilon: None } })),
        None => {
            let s = distinguishing_strategy(t, u, |_, _| false).expect("non-bisimilar systems have a winning Spoiler");
            Outcome::verdict("not-bisimilar", json!({ "rounds": s.rounds(), "witness": strategy_witness(system, &s, None) }))
        }
    }
}

fn bisim_inner(ma: Model, mb: Model, args: &BisimArgs, words: Vec<TimedWord>) -> Result<Outcome, CommandError> {
    let eps_text = args.epsilon.as_deref().unwrap_or("0");
    match (ma, mb) {
        (Model::Lts(t), Model::Lts(u)) => Ok(plain_bisim(ModelKind::Lts, &t, &u)),
        (Model::Prob(t), Model::Prob(u)) => Ok(match prob_bisimilarity(&t, &u) {
            Some(span) => {
                let pairs = crate::lts::relation_from_span(&crate::lts::Span {
                    apex: span.apex.lts().clone(),
                    left: span.left.underlying().clone(),
                    right: span.right.underlying().clone(),
                })
                .pairs;
                Outcome::verdict("bisimilar", json!({ "witness": Witness::BisimulationRelation { system: ModelKind::Prob, pairs, epsilon: None } }))
            }
            None => {
                let mut o = plain_bisim(ModelKind::Prob, t.lts(), u.lts());
                o.body["note"] = Value::from("probabilistic bisimilarity coincides with bisimilarity of the underlying systems");
                o
            }
        }),
        (Model::Obs(t), Model::Obs(u)) => observed_bisim(ModelKind::Obs, &t, &u, &parse_rational_arg("epsilon", eps_text)?),
        (Model::Tree(t), Model::Tree(u)) => observed_bisim(ModelKind::Tree, &t, &u, &parse_rational_arg("epsilon", eps_text)?),
        (Model::Tts(t), Model::Tts(u)) => {
            let depth = args.depth.unwrap_or(DEFAULT_TIMED_DEPTH);
            let policy = parse_policy(args.policy.as_deref().unwrap_or("canonical"))?;
            Ok(match timed_bisim_bounded(&t, &u, depth, &policy)? {
                TimedBisimVerdict::NotBisimilar { strategy, word } => Outcome::verdict(
                    "not-bisimilar",
                    json!({
                        "depth": depth,
                        "note": TIMED_NOTE,
                        "rounds": strategy.rounds(),
                        "witness": Witness::DistinguishingWord {
                            system: ModelKind::Tts,
                            word: word.as_ref().map(to_json),
                            strategy: to_json(&strategy),
                            epsilon: None,
                            integrator: None,
                        },
                    }),
                ),
                TimedBisimVerdict::NoCounterexample { depth } => {
                    Outcome::inconclusive("no-counterexample-found", json!({ "depth": depth, "note": TIMED_NOTE }))
                }
            })
        }
        (Model::Hybrid(t), Model::Hybrid(u)) => {
            let depth = args.depth.unwrap_or(DEFAULT_HYBRID_DEPTH);
            let eps = parse_real_arg("epsilon", eps_text)?;
            let cfg = IntegratorConfig::default();
            Ok(match approx_bisim_hybrid(&t, &u, eps, depth, &words, &cfg)? {
                HybridBisimVerdict::NotBisimilar { strategy, tolerance } => Outcome::verdict(
                    "not-bisimilar",
                    json!({
                        "epsilon": eps,
                        "tolerance": tolerance,
                        "rounds": strategy.rounds(),
                        "witness": Witness::DistinguishingWord {
                            system: ModelKind::Hybrid,
                            word: None,
                            strategy: to_json(&strategy),
                            epsilon: Some(crate::hybrid::format_f64(eps)),
                            integrator: Some(cfg),
                        },
                    }),
                ),
                HybridBisimVerdict::NoCounterexample { depth } => Outcome::inconclusive(
                    "no-counterexample-found",
                    json!({ "epsilon": eps, "depth": depth, "words": words.len(), "note": "Spoiler was restricted to prefixes of the given words" }),
                ),
            })
        }
        (x, y) => Err(usage(format!("cannot compare a {} model with a {} model", x.kind(), y.kind()))),
    }
}

/// Options for hybrid morphism checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleArgs {
    pub seed: u64,
    pub depth: usize,
    pub words: Option<PathBuf>,
}

impl Default for SampleArgs {
    fn default() -> Self {
        SampleArgs { seed: 0, depth: DEFAULT_HYBRID_DEPTH, words: None }
    }
}

/// Violations of a state map between two models, as JSON values.
pub(crate) struct MorphismFindings {
    pub violations: Vec<Value>,
    pub conclusive: bool,
    pub details: Value,
}

fn observed_morphism<A: Action + Serialize>(
    mapping: &MorphismFile,
    a: ObsSystem<A>,
    b: ObsSystem<A>,
) -> Result<MorphismFindings, CommandError> {
    let f = ObsMorphism::new(a, b, mapping.map.clone())?;
    let mut violations: Vec<Value> = check_morphism(f.underlying()).violations.iter().map(to_json).collect();
    let tight = tightest_bound(&f);
    if let Some(e) = &mapping.epsilon {
        let bound = parse_rational_arg("epsilon", e)?;
        if violations.is_empty() {
            let bm = BoundedMorphism { morphism: f.clone(), bound };
            if let Err(detail) = bm.check() {
                violations.push(json!({ "violation": "bound-exceeded", "detail": detail }));
            }
        }
    }
    Ok(MorphismFindings { violations, conclusive: true, details: json!({ "tightest_bound": tight.to_string() }) })
}

pub(crate) fn morphism_findings(
    mapping: &MorphismFile,
    a: Model,
    b: Model,
    seed: u64,
    depth: usize,
    words: &[TimedWord],
) -> Result<MorphismFindings, CommandError> {
    let plain = |violations: Vec<Value>| MorphismFindings { violations, conclusive: true, details: json!({}) };
    match (a, b) {
        (Model::Lts(a), Model::Lts(b)) => {
            let f = LtsMorphism::new(a, b, mapping.map.clone())?;
            Ok(plain(check_morphism(&f).violations.iter().map(to_json).collect()))
        }
        (Model::Obs(a), Model::Obs(b)) => observed_morphism(mapping, a, b),
        (Model::Tree(a), Model::Tree(b)) => observed_morphism(mapping, a, b),
        (Model::Prob(a), Model::Prob(b)) => {
            let f = ProbMorphism::new(a, b, mapping.map.clone())?;
            let r = check_prob_morphism(&f);
            let mut v: Vec<Value> = r.underlying.violations.iter().map(to_json).collect();
            v.extend(r.sums.iter().map(|s| {
                let mut x = to_json(s);
                x["violation"] = Value::from("probability-sum");
                x
            }));
            Ok(plain(v))
        }
        (Model::Tts(a), Model::Tts(b)) => {
            let f = TtsMorphism::new(a, b, mapping.map.clone(), mapping.clock_map.clone())?;
            Ok(plain(check_tts_morphism(&f).iter().map(to_json).collect()))
        }
        (Model::Hybrid(a), Model::Hybrid(b)) => {
            let epsilon = match &mapping.epsilon {
                Some(e) => parse_real_arg("epsilon", e)?,
                None => 0.0,
            };
            let cfg = IntegratorConfig::default();
            let frag = h_unfold(&a, depth, words, &cfg)?;
            let runs: Vec<_> = frag.runs.values().cloned().collect();
            let m = HybridMorphism { source: a, target: b, mode_map: mapping.map.clone(), subsystem_map: mapping.subsystem_map.clone(), epsilon };
            let report = check_hybrid_morphism(&m, &runs, HYBRID_SAMPLE_POINTS, seed, &cfg);
            let violations = report
                .conditions
                .iter()
                .filter(|c| matches!(c.status, crate::hybrid::ConditionStatus::Fail { .. }))
                .map(to_json)
                .collect();
            let conclusive = report.conditions.iter().all(|c| !matches!(c.status, crate::hybrid::ConditionStatus::Skipped { .. }));
            Ok(MorphismFindings {
                violations,
                conclusive,
                details: json!({ "conditions": report.conditions, "sample_runs": runs.len(), "seed": seed, "integrator": cfg }),
            })
        }
        (x, y) => Err(usage(format!("a morphism from a {} model to a {} model is not supported", x.kind(), y.kind()))),
    }
}

pub fn morphism_check(f: &Path, a: &Path, b: &Path, opts: &SampleArgs) -> Outcome {
    finish((|| morphism_check_inner(load_morphism(f)?, load(a)?, load(b)?, opts, load_words(opts.words.as_deref())?))())
}

/// `morphism_check` on models in memory; `opts.words` is ignored in favour of `words`.
pub fn morphism_check_models(mapping: MorphismFile, a: Model, b: Model, opts: &SampleArgs, words: Vec<TimedWord>) -> Outcome {
    finish(morphism_check_inner(mapping, a, b, opts, words))
}

fn morphism_check_inner(mapping: MorphismFile, ma: Model, mb: Model, opts: &SampleArgs, words: Vec<TimedWord>) -> Result<Outcome, CommandError> {
    let system = ma.kind();
    let hybrid = system == ModelKind::Hybrid;
    let found = morphism_findings(&mapping, ma, mb, opts.seed, opts.depth, &words)?;
    let mut fields = found.details;
    if !found.violations.is_empty() {
        fields["witness"] = to_json(&Witness::MorphismViolation {
            system,
            violations: found.violations,
            seed: hybrid.then_some(opts.seed),
            depth: hybrid.then_some(opts.depth),
            words: hybrid.then_some(words),
        });
        return Ok(Outcome::verdict("not-a-morphism", fields));
    }
    if hybrid {
        fields["note"] = Value::from("dynamics and predicates are checked at sample points, observations and run transfer along sample runs");
    }
    Ok(if found.conclusive { Outcome::verdict("morphism", fields) } else { Outcome::inconclusive("inconclusive", fields) })
}

pub fn open_check(f: &Path, a: &Path, b: &Path, max_len: Option<usize>) -> Outcome {
    finish((|| open_check_inner(load_morphism(f)?, load(a)?, load(b)?, max_len))())
}

pub fn open_check_models(mapping: MorphismFile, a: Model, b: Model, max_len: Option<usize>) -> Outcome {
    finish(open_check_inner(mapping, a, b, max_len))
}

pub(crate) fn plain_morphism(mapping: &MorphismFile, a: Model, b: Model) -> Result<(ModelKind, LtsMorphism), CommandError> {
    match (a, b) {
        (Model::Lts(a), Model::Lts(b)) => Ok((ModelKind::Lts, LtsMorphism::new(a, b, mapping.map.clone())?)),
        (Model::Obs(a), Model::Obs(b)) => Ok((ModelKind::Obs, ObsMorphism::new(a, b, mapping.map.clone())?.underlying().clone())),
        (x, y) => Err(usage(format!("openness is checked between lts or obs models, not {} and {}", x.kind(), y.kind()))),
    }
}

fn open_check_inner(mapping: MorphismFile, a: Model, b: Model, max_len: Option<usize>) -> Result<Outcome, CommandError> {
    let obs = match (&a, &b) {
        (Model::Obs(x), Model::Obs(y)) => Some((x.clone(), y.clone())),
        _ => None,
    };
    let (system, m) = plain_morphism(&mapping, a, b)?;
    let max_len = max_len.unwrap_or(DEFAULT_MAX_LEN);
    let graph = is_open(&m, OpenMode::GraphBisim)?;
    let lifting = match obs {
        Some((x, y)) => is_open_obs(&ObsMorphism::new(x, y, mapping.map.clone())?, OpenMode::LiftingOracle { max_len })?,
        None => is_open(&m, OpenMode::LiftingOracle { max_len })?,
    };
    let fields = json!({ "graph_bisim": graph.is_open(), "lifting_oracle": lifting.is_open(), "max_len": max_len });
    match (graph, lifting) {
        (OpenVerdict::Open, OpenVerdict::Open) => Ok(Outcome::verdict("open", fields)),
        (_, OpenVerdict::NotOpen(cx)) | (OpenVerdict::NotOpen(cx), OpenVerdict::Open) => {
            let mut fields = fields;
            fields["witness"] = to_json(&Witness::LiftingCounterexample { system, counterexample: cx });
            Ok(if fields["graph_bisim"] == fields["lifting_oracle"] {
                Outcome::verdict("not-open", fields)
            } else {
                Outcome::inconclusive("inconclusive", fields)
            })
        }
    }
}

fn decode<T: serde::de::DeserializeOwned>(what: String, v: &Value) -> Result<T, CommandError> {
    serde_json::from_value(v.clone()).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.strip_prefix(crate::error::INVARIANT_PREFIX).unwrap_or(&msg).to_string();
        usage(format!("{what}: {msg}"))
    })
}

fn valid_lts<A: Action + Serialize>(m: LtsMorphism<A>) -> Result<LtsMorphism<A>, CommandError> {
    let r = check_morphism(&m);
    if r.is_valid() {
        Ok(m)
    } else {
        Err(usage(format!("arrow is not a morphism: {}", to_json(&r))))
    }
}

fn arrows<O: Clone, M>(
    objects: &[O],
    entries: &[&ArrowEntry],
    what: &str,
    make: impl Fn(&O, &O, &ArrowEntry) -> Result<M, CommandError>,
) -> Result<Vec<Arrow<O, M>>, CommandError> {
    entries
        .iter()
        .map(|a| {
            let get = |i: usize| objects.get(i).ok_or_else(|| usage(format!("arrow refers to {what} object {i}, which does not exist")));
            let (s, t) = (get(a.source)?, get(a.target)?);
            Ok(Arrow { source: s.clone(), target: t.clone(), mor: make(s, t, a)? })
        })
        .collect()
}

/// Composable pairs `(first, second)` with `first.target == second.source`.
fn composable<M: Clone>(entries: &[&ArrowEntry], mors: &[M]) -> Vec<(M, M)> {
    let mut out = Vec::new();
    for (i, a) in entries.iter().enumerate() {
        for (j, b) in entries.iter().enumerate() {
            if a.target == b.source {
                out.push((mors[i].clone(), mors[j].clone()));
            }
        }
    }
    out
}

fn run_laws<I: AdjunctionInstance>(
    inst: &I,
    objects: &[I::Obj],
    rich: &[I::RichObj],
    base: &[Arrow<I::Obj, I::Mor>],
    rich_arrows: &[Arrow<I::RichObj, I::RichMor>],
    base_entries: &[&ArrowEntry],
    rich_entries: &[&ArrowEntry],
) -> LawReport
where
    I::Mor: Clone,
    I::RichMor: Clone,
{
    let mut report = check_triangle_identities(inst, objects, rich);
    report.merge(check_naturality(inst, base, rich_arrows));
    let bm: Vec<I::Mor> = base.iter().map(|a| a.mor.clone()).collect();
    let rm: Vec<I::RichMor> = rich_arrows.iter().map(|a| a.mor.clone()).collect();
    report.merge(check_functoriality(inst, &composable(base_entries, &bm), &composable(rich_entries, &rm)));
    report
}

fn verdict_of(found: bool) -> Verdict {
    if found {
        Verdict::Bisimilar
    } else {
        Verdict::NotBisimilar
    }
}

fn basis_templates(entries: &[TemplateEntry]) -> Result<Vec<BasisTemplate>, CommandError> {
    let mut out: Vec<BasisTemplate> = entries
        .iter()
        .map(|t| {
            let vars: BTreeSet<String> = t.vars.iter().cloned().collect();
            let parse = |src: &String| parse_expr_in(src, &vars).map_err(|e| usage(format!("template `{}`: `{src}`: {}", t.name, e.message)));
            let flow = t.flow.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
            let reset = t.reset.as_ref().map(|r| r.iter().map(parse).collect::<Result<Vec<_>, _>>()).transpose()?;
            let init = t.init.iter().map(|v| crate::hybrid::number_from_json(v).map_err(usage)).collect::<Result<Vec<_>, _>>()?;
            if flow.len() != t.vars.len() || init.len() != t.vars.len() || reset.as_ref().is_some_and(|r| r.len() != t.vars.len()) {
                return Err(usage(format!("template `{}`: init, flow and reset need one entry per variable", t.name)));
            }
            Ok(BasisTemplate { name: t.name.clone(), vars: t.vars.clone(), init, flow, reset })
        })
        .collect::<Result<_, _>>()?;
    if !out.iter().any(|t| t.name == BasisTemplate::clock().name) {
        out.push(BasisTemplate::clock());
    }
    Ok(out)
}

/// The law report of `instance` on `samples`.
pub fn laws_report(instance: &str, samples: &Samples, depth: usize) -> Result<LawReport, CommandError> {
    let base_entries: Vec<&ArrowEntry> = samples.arrows.iter().filter(|a| !a.rich).collect();
    let rich_entries: Vec<&ArrowEntry> = samples.arrows.iter().filter(|a| a.rich).collect();
    match instance {
        "prob" => {
            let objects: Vec<Lts> = samples.objects.iter().enumerate().map(|(k, v)| decode(format!("objects[{k}]"), v)).collect::<Result<_, _>>()?;
            let rich: Vec<ProbSystem> = samples.rich.iter().enumerate().map(|(k, v)| decode(format!("rich[{k}]"), v)).collect::<Result<_, _>>()?;
            let base = arrows(&objects, &base_entries, "base", |s, t, a| valid_lts(LtsMorphism::new(s.clone(), t.clone(), a.map.clone())?))?;
            let ra = arrows(&rich, &rich_entries, "rich", |s, t, a| {
                let m = ProbMorphism::new(s.clone(), t.clone(), a.map.clone())?;
                let r = check_prob_morphism(&m);
                if r.is_valid() {
                    Ok(m)
                } else {
                    Err(usage(format!("rich arrow {}->{} is not a morphism: {}", a.source, a.target, to_json(&r))))
                }
            })?;
            let inst = ProbInstance;
            let mut report = run_laws(&inst, &objects, &rich, &base, &ra, &base_entries, &rich_entries);
            for i in 0..rich.len() {
                for j in i + 1..rich.len() {
                    let t = check_bisim_transfer(
                        &inst,
                        &rich[i],
                        &rich[j],
                        |x, y| verdict_of(strong_bisimilarity(x, y).is_some()),
                        |x, y| verdict_of(prob_bisimilarity(x, y).is_some()),
                    );
                    report.checks.push(LawCheck { law: "bisim-transfer".into(), sample: format!("M'[{i}],M'[{j}]"), outcome: t.outcome });
                }
            }
            Ok(report)
        }
        "timed" => {
            let objects: Vec<Lts<TimedLabel>> =
                samples.objects.iter().enumerate().map(|(k, v)| decode(format!("objects[{k}]"), v)).collect::<Result<_, _>>()?;
            if let Some(k) = objects.iter().position(|t| !is_tree(t)) {
                return Err(usage(format!("objects[{k}] is not a tree")));
            }
            let rich: Vec<TimedObject> = samples
                .rich
                .iter()
                .enumerate()
                .map(|(k, v)| decode::<Tts>(format!("rich[{k}]"), v).map(TimedObject::Tts))
                .collect::<Result<_, _>>()?;
            let grid = if samples.grid.is_empty() {
                vec![crate::rational::int(1), crate::rational::int(2)]
            } else {
                samples
                    .grid
                    .iter()
                    .map(|v| crate::rational::serde_text::from_value(v).map_err(|e| usage(format!("grid: {e}"))))
                    .collect::<Result<_, _>>()?
            };
            let base = arrows(&objects, &base_entries, "base", |s, t, a| valid_lts(LtsMorphism::new(s.clone(), t.clone(), a.map.clone())?))?;
            let ra = arrows(&rich, &rich_entries, "rich", |s, t, a| match (s, t) {
                (TimedObject::Tts(s), TimedObject::Tts(t)) => {
                    let m = TtsMorphism::new(s.clone(), t.clone(), a.map.clone(), a.clock_map.clone())?;
                    let v = check_tts_morphism(&m);
                    if !v.is_empty() {
                        return Err(usage(format!("rich arrow {}->{} is not a morphism: {}", a.source, a.target, to_json(&v))));
                    }
                    Ok(TimedMorphism::from(&m))
                }
                _ => Err(usage("rich timed samples are timed systems")),
            })?;
            let inst = TimedInstance::new(depth, grid);
            Ok(run_laws(&inst, &objects, &rich, &base, &ra, &base_entries, &rich_entries))
        }
        "hybrid" => {
            let objects: Vec<ObsSystem<TimedLabel>> =
                samples.objects.iter().enumerate().map(|(k, v)| decode(format!("objects[{k}]"), v)).collect::<Result<_, _>>()?;
            if let Some(k) = objects.iter().position(|t| !is_tree(t.lts())) {
                return Err(usage(format!("objects[{k}] is not a tree")));
            }
            let rich: Vec<HybridSystem> = samples.rich.iter().enumerate().map(|(k, v)| decode(format!("rich[{k}]"), v)).collect::<Result<_, _>>()?;
            let base = arrows(&objects, &base_entries, "base", |s, t, a| {
                let m = ObsMorphism::new(s.clone(), t.clone(), a.map.clone())?;
                valid_lts(m.underlying().clone())?;
                Ok(m)
            })?;
            let ra = arrows(&rich, &rich_entries, "rich", |s, t, a| {
                let epsilon = match &a.epsilon {
                    Some(e) => parse_real_arg("epsilon", e)?,
                    None => 0.0,
                };
                Ok(HybridMorphism {
                    source: s.clone(),
                    target: t.clone(),
                    mode_map: a.map.clone(),
                    subsystem_map: a.subsystem_map.clone(),
                    epsilon,
                })
            })?;
            let inst = HybridInstance::new(depth, samples.words.clone(), basis_templates(&samples.templates)?, IntegratorConfig::default());
            Ok(run_laws(&inst, &objects, &rich, &base, &ra, &base_entries, &rich_entries))
        }
        other => Err(usage(format!("unknown instance `{other}`; use prob, timed or hybrid"))),
    }
}

fn load_samples(path: &Path) -> Result<Samples, CommandError> {
    match load(path)? {
        Model::Samples(s) => Ok(s),
        m => Err(usage(format!("{} holds a {} model, expected samples", path.display(), m.kind()))),
    }
}

pub fn laws_check(instance: &str, samples: &Path, depth: usize) -> Outcome {
    finish(load_samples(samples).and_then(|s| laws_check_inner(instance, &s, depth)))
}

pub fn laws_check_samples(instance: &str, samples: &Samples, depth: usize) -> Outcome {
    finish(laws_check_inner(instance, samples, depth))
}

fn laws_check_inner(instance: &str, samples: &Samples, depth: usize) -> Result<Outcome, CommandError> {
    let report = laws_report(instance, samples, depth)?;
    let status = report.status();
    let mut fields = json!({ "report": report, "depth": depth, "checks": report.checks.len() });
    if let Some(c) = report.checks.iter().find(|c| matches!(c.outcome, Comparison::Differs { .. })) {
        fields["witness"] = to_json(&Witness::LawViolation { instance: instance.to_string(), depth, check: to_json(c) });
    }
    Ok(match status {
        LawStatus::Pass => Outcome::verdict("pass", fields),
        LawStatus::Fail => Outcome::verdict("fail", fields),
        LawStatus::Inconclusive => Outcome::inconclusive("inconclusive", fields),
    })
}

pub fn check_witness(witness: &Path, files: &[PathBuf]) -> Outcome {
    finish(check_witness_inner(witness, files))
}

fn check_witness_inner(witness: &Path, files: &[PathBuf]) -> Result<Outcome, CommandError> {
    let text = std::fs::read_to_string(witness).map_err(|source| LoadError::Io { path: witness.display().to_string(), source })?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", witness.display())))?;
    let w = witness_of(v).map_err(|e| usage(format!("{}: {e}", witness.display())))?;
    let models = files.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    confirm(&w, models)
}

/// Re-validates a witness, or a whole command output carrying one, against models in memory.
pub fn check_witness_models(witness: Value, models: Vec<Model>) -> Outcome {
    finish(witness_of(witness).map_err(usage).and_then(|w| confirm(&w, models)))
}

fn witness_of(v: Value) -> Result<Witness, String> {
    let w = v.get("witness").cloned().unwrap_or(v);
    serde_json::from_value(w).map_err(|e| format!("not a witness: {e}"))
}

fn confirm(w: &Witness, models: Vec<Model>) -> Result<Outcome, CommandError> {
    let kind = w.kind_name();
    Ok(match super::witness::recheck(w, models)? {
        Ok(()) => Outcome::verdict("confirmed", json!({ "kind": kind })),
        Err(reason) => Outcome::verdict("refuted", json!({ "kind": kind, "reason": reason })),
    })
}
