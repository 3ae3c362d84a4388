//! Evidence attached to verdicts, and its re-validation from the inputs.

use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::commands::{laws_report, morphism_findings, parse_rational_arg, parse_real_arg, plain_morphism, usage, CommandError};
use super::model::{Model, ModelKind};
use crate::adjunction::Comparison;
use crate::game::{obs_apart, validate_strategy_lts, Strategy};
use crate::hybrid::{validate_hybrid_strategy, HybridStrategy, IntegratorConfig};
use crate::lts::{check_bisimulation, span_from_relation, Action, BisimRelation, LiftingCounterexample, Lts, StateId, Symbol};
use crate::observations::{check_approx_bisim, ApproxBisim, ObsSystem};
use crate::probabilistic::{iota_zero, ProbMorphism, ProbSpan, ProbSystem};
use crate::rational::Rational;
use crate::timed::{replay_word, validate_strategy, SpoilerMove, TimedLabel, TimedWord, Tts};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Witness {
    /// A bisimulation (an ε-bisimulation when `epsilon` is set) containing the initial pair.
    BisimulationRelation {
        system: ModelKind,
        pairs: BTreeSet<(StateId, StateId)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<String>,
    },
    /// A winning Spoiler strategy. For timed systems `word` is read by exactly
    /// one side; elsewhere it is the strategy's first play.
    DistinguishingWord {
        system: ModelKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        word: Option<Value>,
        strategy: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        integrator: Option<IntegratorConfig>,
    },
    /// A commuting square with no diagonal.
    LiftingCounterexample { system: ModelKind, counterexample: LiftingCounterexample },
    /// A law check whose two sides differ.
    LawViolation { instance: String, depth: usize, check: Value },
    /// Conditions the map breaks. Hybrid checks record the sampling inputs.
    MorphismViolation {
        system: ModelKind,
        violations: Vec<Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        words: Option<Vec<TimedWord>>,
    },
}

impl Witness {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Witness::BisimulationRelation { .. } => "bisimulation-relation",
            Witness::DistinguishingWord { .. } => "distinguishing-word",
            Witness::LiftingCounterexample { .. } => "lifting-counterexample",
            Witness::LawViolation { .. } => "law-violation",
            Witness::MorphismViolation { .. } => "morphism-violation",
        }
    }

    /// Files `check-witness` expects after the witness.
    pub fn inputs(&self) -> &'static str {
        match self {
            Witness::BisimulationRelation { .. } | Witness::DistinguishingWord { .. } => "A B",
            Witness::LiftingCounterexample { .. } | Witness::MorphismViolation { .. } => "F A B",
            Witness::LawViolation { .. } => "SAMPLES",
        }
    }
}

type Check = Result<(), String>;

fn decode<T: DeserializeOwned>(what: &str, v: &Value) -> Result<T, CommandError> {
    serde_json::from_value(v.clone()).map_err(|e| usage(format!("malformed {what}: {e}")))
}

fn files<const N: usize>(w: &Witness, models: Vec<Model>) -> Result<[Model; N], CommandError> {
    models.try_into().map_err(|_| usage(format!("a {} witness is checked against {}", w.kind_name(), w.inputs())))
}

fn kind_matches(system: ModelKind, models: &[&Model]) -> Check {
    match models.iter().find(|m| m.kind() != system) {
        Some(m) => Err(format!("the witness is about {system} models, the input is {}", m.kind())),
        None => Ok(()),
    }
}

fn epsilon_of(e: &Option<String>) -> Result<Rational, CommandError> {
    parse_rational_arg("epsilon", e.as_deref().unwrap_or("0"))
}

/// Re-validates `w` against the models it was produced from. The outer
/// error is an input problem; the inner one says why the witness fails.
pub fn recheck(w: &Witness, models: Vec<Model>) -> Result<Check, CommandError> {
    match w {
        Witness::BisimulationRelation { system, pairs, epsilon } => {
            let [a, b] = files::<2>(w, models)?;
            kind_matches(*system, &[&a, &b]).map_or_else(|e| Ok(Err(e)), |()| relation(a, b, pairs, epsilon))
        }
        Witness::DistinguishingWord { system, word, strategy, epsilon, integrator } => {
            let [a, b] = files::<2>(w, models)?;
            if let Err(e) = kind_matches(*system, &[&a, &b]) {
                return Ok(Err(e));
            }
            game(a, b, word.as_ref(), strategy, epsilon, integrator)
        }
        Witness::LiftingCounterexample { system, counterexample } => {
            let [f, a, b] = files::<3>(w, models)?;
            let Model::Morphism(mapping) = f else { return Err(usage("the first input must be a morphism")) };
            if let Err(e) = kind_matches(*system, &[&a, &b]) {
                return Ok(Err(e));
            }
            let (_, m) = plain_morphism(&mapping, a, b)?;
            Ok(counterexample.confirm(&m))
        }
        Witness::LawViolation { instance, depth, check } => {
            let [Model::Samples(samples)] = files::<1>(w, models)? else { return Err(usage("a law violation is checked against a samples file")) };
            let report = laws_report(instance, &samples, *depth)?;
            let law = check.get("law").and_then(Value::as_str).unwrap_or_default();
            let sample = check.get("sample").and_then(Value::as_str).unwrap_or_default();
            Ok(match report.checks.iter().find(|c| c.law == law && c.sample == sample) {
                None => Err(format!("no {law} check on {sample}")),
                Some(c) if !matches!(c.outcome, Comparison::Differs { .. }) => Err(format!("{law} on {sample} does not fail")),
                Some(c) if serde_json::to_value(c).ok().as_ref() != Some(check) => Err(format!("{law} on {sample} fails differently")),
                Some(_) => Ok(()),
            })
        }
        Witness::MorphismViolation { system, violations, seed, depth, words } => {
            let [f, a, b] = files::<3>(w, models)?;
            let Model::Morphism(mapping) = f else { return Err(usage("the first input must be a morphism")) };
            if let Err(e) = kind_matches(*system, &[&a, &b]) {
                return Ok(Err(e));
            }
            if violations.is_empty() {
                return Ok(Err("no violation is listed".into()));
            }
            let found = morphism_findings(
                &mapping,
                a,
                b,
                seed.unwrap_or(0),
                depth.unwrap_or(super::commands::DEFAULT_HYBRID_DEPTH),
                words.as_deref().unwrap_or_default(),
            )?;
            Ok(match violations.iter().find(|v| !found.violations.contains(v)) {
                Some(v) => Err(format!("not a violation of this map: {v}")),
                None => Ok(()),
            })
        }
    }
}

fn relation(a: Model, b: Model, pairs: &BTreeSet<(StateId, StateId)>, epsilon: &Option<String>) -> Result<Check, CommandError> {
    let r = BisimRelation { pairs: pairs.clone() };
    Ok(match (a, b) {
        (Model::Lts(t), Model::Lts(u)) => check_bisimulation(&t, &u, &r).map_err(|e| e.to_string()),
        (Model::Obs(t), Model::Obs(u)) => approx::<Symbol>(&t, &u, r, epsilon_of(epsilon)?),
        (Model::Tree(t), Model::Tree(u)) => approx::<TimedLabel>(&t, &u, r, epsilon_of(epsilon)?),
        (Model::Prob(t), Model::Prob(u)) => prob_span(&t, &u, &r),
        (x, _) => Err(format!("bisimulation relations are not checked for {} models", x.kind())),
    })
}

fn approx<A: Action>(t: &ObsSystem<A>, u: &ObsSystem<A>, relation: BisimRelation, epsilon: Rational) -> Check {
    check_approx_bisim(t, u, &ApproxBisim { relation, epsilon }).map_err(|e| e.to_string())
}

/// Rebuilds the span of probabilistic morphisms from the relation.
fn prob_span(t: &ProbSystem, u: &ProbSystem, r: &BisimRelation) -> Check {
    let span = span_from_relation(t.lts(), u.lts(), r).map_err(|e| e.to_string())?;
    let apex = iota_zero(&span.apex);
    let left = ProbMorphism::new(apex.clone(), t.clone(), span.left.map().clone()).map_err(|e| e.to_string())?;
    let right = ProbMorphism::new(apex.clone(), u.clone(), span.right.map().clone()).map_err(|e| e.to_string())?;
    ProbSpan { apex, left, right }.verify()
}

fn plain_game<A: Action + DeserializeOwned>(t: &Lts<A>, u: &Lts<A>, word: Option<&Value>, strategy: &Value) -> Result<Check, CommandError> {
    let s: Strategy<A> = decode("strategy", strategy)?;
    Ok(validate_strategy_lts(t, u, &s, |_, _| false).and_then(|()| spine_matches(&s, word)))
}

fn spine_matches<A: Action + DeserializeOwned>(s: &Strategy<A>, word: Option<&Value>) -> Check {
    match word {
        Some(w) if serde_json::from_value::<Vec<A>>(w.clone()).ok() != Some(s.spine()) => {
            Err("the word is not the strategy's first play".into())
        }
        _ => Ok(()),
    }
}

fn observed_game<A: Action + DeserializeOwned>(
    t: &ObsSystem<A>,
    u: &ObsSystem<A>,
    word: Option<&Value>,
    strategy: &Value,
    eps: Rational,
) -> Result<Check, CommandError> {
    let s: Strategy<A> = decode("strategy", strategy)?;
    Ok(validate_strategy_lts(t.lts(), u.lts(), &s, obs_apart(t, u, &eps)).and_then(|()| spine_matches(&s, word)))
}

fn timed_game(t: &Tts, u: &Tts, word: Option<&Value>, strategy: &Value) -> Result<Check, CommandError> {
    let s: SpoilerMove = decode("strategy", strategy)?;
    if let Err(e) = validate_strategy(t, u, &s) {
        return Ok(Err(e));
    }
    let Some(w) = word else { return Ok(Ok(())) };
    let w: TimedWord = decode("word", w)?;
    if !s.plays().iter().any(|p| p.starts_with(&w)) {
        return Ok(Err("the word is not a play of the strategy".into()));
    }
    let (l, r) = (replay_word(t, &w)?, replay_word(u, &w)?);
    Ok(if l != r { Ok(()) } else { Err(format!("both systems {} the word", if l { "accept" } else { "reject" })) })
}

fn game(
    a: Model,
    b: Model,
    word: Option<&Value>,
    strategy: &Value,
    epsilon: &Option<String>,
    integrator: &Option<IntegratorConfig>,
) -> Result<Check, CommandError> {
    match (a, b) {
        (Model::Lts(t), Model::Lts(u)) => plain_game(&t, &u, word, strategy),
        (Model::Prob(t), Model::Prob(u)) => plain_game(t.lts(), u.lts(), word, strategy),
        (Model::Obs(t), Model::Obs(u)) => observed_game(&t, &u, word, strategy, epsilon_of(epsilon)?),
        (Model::Tree(t), Model::Tree(u)) => observed_game(&t, &u, word, strategy, epsilon_of(epsilon)?),
        (Model::Tts(t), Model::Tts(u)) => timed_game(&t, &u, word, strategy),
        (Model::Hybrid(t), Model::Hybrid(u)) => {
            let s: HybridStrategy = decode("strategy", strategy)?;
            let eps = parse_real_arg("epsilon", epsilon.as_deref().unwrap_or("0"))?;
            let cfg = integrator.unwrap_or_default();
            IntegratorConfig::new(cfg.step, cfg.tolerance)?;
            Ok(validate_hybrid_strategy(&t, &u, eps, &s, &cfg))
        }
        (x, _) => Ok(Err(format!("strategies are not checked for {} models", x.kind()))),
    }
}
