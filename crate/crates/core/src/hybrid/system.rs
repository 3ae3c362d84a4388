use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ModelError;
use crate::expr::{is_identifier, parse_expr, parse_pred, Expr, Pred, TIME_VAR};
use crate::lts::Symbol;
use crate::observations::Metric;
use crate::timed::TimedWord;

/// A subsystem `i` with dimension `vars.len()` and initial value `init`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subsystem {
    pub name: String,
    pub vars: Vec<String>,
    pub init: Vec<f64>,
}

impl Subsystem {
    pub fn dim(&self) -> usize {
        self.vars.len()
    }
}

/// Guards are predicates, or (for embedded trees) a ball in the sup norm
/// around one point of the concatenated state vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Guard {
    Pred(Pred),
    Ball { center: Vec<f64> },
}

/// Invariants are predicates, or (for embedded trees) membership up to the
/// tolerance in a stored set of trajectory samples.
#[derive(Clone, Debug, PartialEq)]
pub enum Invariant {
    Pred(Pred),
    Trajectory { samples: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub src: String,
    pub action: Symbol,
    pub dst: String,
    pub guard: Guard,
    /// Per subsystem; a missing entry is the identity.
    pub resets: BTreeMap<String, Vec<Expr>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    /// Per subsystem, over its variables and `t`; a missing entry is the zero flow.
    pub flows: BTreeMap<String, Vec<Expr>>,
    pub invariant: Invariant,
    pub observation: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridSystem {
    modes: BTreeMap<String, Mode>,
    subsystems: Vec<Subsystem>,
    events: Vec<Event>,
    initial: String,
    metric: Metric,
    /// Timed words of the tree this system embeds, if any.
    tree_words: Vec<TimedWord>,
}

impl HybridSystem {
    pub fn new(
        modes: BTreeMap<String, Mode>,
        subsystems: Vec<Subsystem>,
        mut events: Vec<Event>,
        initial: impl Into<String>,
        metric: Metric,
    ) -> Result<Self, ModelError> {
        let initial = initial.into();
        if !modes.contains_key(&initial) {
            return Err(ModelError::UnknownInitial(initial));
        }
        let mut names = BTreeSet::new();
        for s in &subsystems {
            if !names.insert(&s.name) {
                return Err(ModelError::invariant(format!("subsystem `{}` is declared twice", s.name)));
            }
            if s.vars.len() != s.init.len() {
                return Err(ModelError::invariant(format!(
                    "subsystem `{}` has {} variables but {} initial values",
                    s.name,
                    s.vars.len(),
                    s.init.len()
                )));
            }
            let mut seen = BTreeSet::new();
            for v in &s.vars {
                if !is_identifier(v) || v == TIME_VAR {
                    return Err(ModelError::invariant(format!("`{v}` cannot name a variable")));
                }
                if !seen.insert(v) {
                    return Err(ModelError::invariant(format!("variable `{v}` repeated in subsystem `{}`", s.name)));
                }
            }
            if let Some(x) = s.init.iter().find(|x| !x.is_finite()) {
                return Err(ModelError::invariant(format!("initial value {x} of `{}` is not finite", s.name)));
            }
        }
        let sys_dim: usize = subsystems.iter().map(Subsystem::dim).sum();
        let by_name: BTreeMap<&str, &Subsystem> = subsystems.iter().map(|s| (s.name.as_str(), s)).collect();
        let mut owners: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &subsystems {
            for v in &s.vars {
                *owners.entry(v).or_default() += 1;
            }
        }
        let check_global = |what: &str, vars: BTreeSet<String>| -> Result<(), ModelError> {
            for v in vars {
                match owners.get(v.as_str()) {
                    None => return Err(ModelError::invariant(format!("{what} uses undeclared variable `{v}`"))),
                    Some(n) if *n > 1 => {
                        return Err(ModelError::invariant(format!("{what} uses `{v}`, which several subsystems declare")))
                    }
                    _ => {}
                }
            }
            Ok(())
        };
        let check_local = |what: &str, sub: &str, exprs: &[Expr], allow_time: bool| -> Result<(), ModelError> {
            let s = by_name.get(sub).ok_or_else(|| ModelError::invariant(format!("{what} names unknown subsystem `{sub}`")))?;
            if exprs.len() != s.dim() {
                return Err(ModelError::invariant(format!(
                    "{what} for `{sub}` has {} components, expected {}",
                    exprs.len(),
                    s.dim()
                )));
            }
            for e in exprs {
                for v in e.vars() {
                    if !(s.vars.contains(&v) || allow_time && v == TIME_VAR) {
                        return Err(ModelError::invariant(format!("{what} for `{sub}` uses `{v}`, not a variable of `{sub}`")));
                    }
                }
            }
            Ok(())
        };
        let mut obs_dim = None;
        for (name, m) in &modes {
            for (sub, f) in &m.flows {
                check_local(&format!("flow of mode `{name}`"), sub, f, true)?;
            }
            match &m.invariant {
                Invariant::Pred(p) => check_global(&format!("invariant of `{name}`"), p.vars())?,
                Invariant::Trajectory { samples } => {
                    if samples.iter().any(|x| x.len() != sys_dim) {
                        return Err(ModelError::invariant(format!("trajectory of `{name}` has a sample of the wrong size")));
                    }
                }
            }
            for e in &m.observation {
                check_global(&format!("observation of `{name}`"), e.vars())?;
            }
            match obs_dim {
                None => obs_dim = Some(m.observation.len()),
                Some(d) if d != m.observation.len() => {
                    return Err(ModelError::invariant(format!(
                        "observation of `{name}` has {} components, others have {d}",
                        m.observation.len()
                    )))
                }
                _ => {}
            }
        }
        events.sort_by(|a, b| (&a.src, &a.action, &a.dst).cmp(&(&b.src, &b.action, &b.dst)));
        for w in events.windows(2) {
            if (&w[0].src, &w[0].action, &w[0].dst) == (&w[1].src, &w[1].action, &w[1].dst) {
                return Err(ModelError::invariant(format!("event ({}, {}, {}) is declared twice", w[0].src, w[0].action, w[0].dst)));
            }
        }
        for e in &events {
            let what = format!("event ({}, {}, {})", e.src, e.action, e.dst);
            for s in [&e.src, &e.dst] {
                if !modes.contains_key(s) {
                    return Err(ModelError::UnknownState { transition: what.clone(), state: s.clone() });
                }
            }
            match &e.guard {
                Guard::Pred(p) => check_global(&format!("guard of {what}"), p.vars())?,
                Guard::Ball { center } if center.len() != sys_dim => {
                    return Err(ModelError::invariant(format!("guard of {what} has the wrong size")))
                }
                Guard::Ball { .. } => {}
            }
            for (sub, r) in &e.resets {
                check_local(&format!("reset of {what}"), sub, r, false)?;
            }
        }
        Ok(HybridSystem { modes, subsystems, events, initial, metric, tree_words: Vec::new() })
    }

    pub(crate) fn with_tree_words(mut self, words: Vec<TimedWord>) -> Self {
        self.tree_words = words;
        self
    }

    pub fn modes(&self) -> &BTreeMap<String, Mode> {
        &self.modes
    }

    pub fn mode(&self, m: &str) -> Option<&Mode> {
        self.modes.get(m)
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn subsystem(&self, name: &str) -> Option<(usize, &Subsystem)> {
        self.subsystems.iter().enumerate().find(|(_, s)| s.name == name)
    }

    /// Sorted by `(src, action, dst)`.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event_index(&self, src: &str, action: &str, dst: &str) -> Option<usize> {
        self.events.iter().position(|e| e.src == src && e.action == action && e.dst == dst)
    }

    pub fn events_from<'a>(&'a self, m: &'a str, action: &'a str) -> impl Iterator<Item = (usize, &'a Event)> + 'a {
        self.events.iter().enumerate().filter(move |(_, e)| e.src == m && e.action == action)
    }

    pub fn actions(&self) -> BTreeSet<Symbol> {
        self.events.iter().map(|e| e.action.clone()).collect()
    }

    pub fn initial_mode(&self) -> &str {
        &self.initial
    }

    pub fn initial_valuation(&self) -> Vec<Vec<f64>> {
        self.subsystems.iter().map(|s| s.init.clone()).collect()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn tree_words(&self) -> &[TimedWord] {
        &self.tree_words
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(Subsystem::dim).sum()
    }

    pub fn obs_dim(&self) -> usize {
        self.modes.values().next().map(|m| m.observation.len()).unwrap_or(0)
    }

    /// All variable names in subsystem order.
    pub fn flat_vars(&self) -> Vec<String> {
        self.subsystems.iter().flat_map(|s| s.vars.iter().cloned()).collect()
    }

    /// Flow expressions of `mode` that divide; they may fail to be Lipschitz.
    pub fn flagged_flows(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (m, mode) in &self.modes {
            for (s, f) in &mode.flows {
                for (k, e) in f.iter().enumerate() {
                    if e.has_division() {
                        out.push(format!("flow of `{m}` for `{s}`[{k}]: {e}"));
                    }
                }
            }
        }
        out
    }

    /// Adds `(m, tau, m)` with guard `true` and identity resets for every mode.
    pub fn add_tau_selfloops(&self, tau: &str) -> Result<HybridSystem, ModelError> {
        if self.events.iter().any(|e| e.action == tau) {
            return Err(ModelError::invariant(format!("action `{tau}` is already used")));
        }
        let mut events = self.events.clone();
        for m in self.modes.keys() {
            events.push(Event {
                src: m.clone(),
                action: tau.to_string(),
                dst: m.clone(),
                guard: Guard::Pred(Pred::True),
                resets: BTreeMap::new(),
            });
        }
        let mut out = HybridSystem::new(self.modes.clone(), self.subsystems.clone(), events, self.initial.clone(), self.metric)?;
        out.tree_words = self.tree_words.clone();
        Ok(out)
    }

    /// A copy with other initial values.
    pub fn with_initial_valuation(&self, sigma: &[Vec<f64>]) -> Result<HybridSystem, ModelError> {
        if sigma.len() != self.subsystems.len() {
            return Err(ModelError::invariant("valuation has the wrong number of subsystems"));
        }
        let mut subs = self.subsystems.clone();
        for (s, v) in subs.iter_mut().zip(sigma) {
            s.init = v.clone();
        }
        HybridSystem::new(self.modes.clone(), subs, self.events.clone(), self.initial.clone(), self.metric)
    }
}

/// Decimal, rational (`3/2`) or any constant expression; JSON numbers too.
pub fn number_from_json(v: &Value) -> Result<f64, String> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| format!("{n} is not representable")),
        Value::String(s) => {
            let e = parse_expr(s).map_err(|e| format!("`{s}`: {e}"))?;
            let env = |_: &str| None;
            e.eval(&env).map_err(|e| format!("`{s}`: {e}"))
        }
        other => Err(format!("expected a number, found {other}")),
    }
}

/// Shortest text that parses back to `x`.
pub fn format_f64(x: f64) -> String {
    format!("{x}")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsystemRepr {
    name: String,
    vars: Vec<String>,
    init: Vec<Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeRepr {
    #[serde(default)]
    flow: BTreeMap<String, Vec<String>>,
    #[serde(default = "true_text")]
    invariant: Value,
    observation: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRepr {
    src: String,
    action: String,
    dst: String,
    #[serde(default = "true_text")]
    guard: Value,
    #[serde(default)]
    reset: BTreeMap<String, Vec<String>>,
}

fn true_text() -> Value {
    Value::String("true".into())
}

fn default_metric() -> Metric {
    Metric::Sup
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HybridRepr {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, Value>,
    subsystems: Vec<SubsystemRepr>,
    modes: BTreeMap<String, ModeRepr>,
    #[serde(default)]
    events: Vec<EventRepr>,
    initial: String,
    #[serde(default = "default_metric")]
    metric: Metric,
}

fn procedural_to_value(center_or_samples: &str, data: Value) -> Value {
    serde_json::json!({ center_or_samples: data })
}

impl Serialize for HybridSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let nums = |v: &[f64]| Value::Array(v.iter().map(|x| Value::String(format_f64(*x))).collect());
        let strs = |v: &[Expr]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        let repr = HybridRepr {
            params: BTreeMap::new(),
            subsystems: self
                .subsystems
                .iter()
                .map(|x| SubsystemRepr {
                    name: x.name.clone(),
                    vars: x.vars.clone(),
                    init: x.init.iter().map(|v| Value::String(format_f64(*v))).collect(),
                })
                .collect(),
            modes: self
                .modes
                .iter()
                .map(|(k, m)| {
                    let invariant = match &m.invariant {
                        Invariant::Pred(p) => Value::String(p.to_string()),
                        Invariant::Trajectory { samples } => {
                            procedural_to_value("samples", Value::Array(samples.iter().map(|x| nums(x)).collect()))
                        }
                    };
                    let flow = m.flows.iter().map(|(n, f)| (n.clone(), strs(f))).collect();
                    (k.clone(), ModeRepr { flow, invariant, observation: strs(&m.observation) })
                })
                .collect(),
            events: self
                .events
                .iter()
                .map(|e| EventRepr {
                    src: e.src.clone(),
                    action: e.action.clone(),
                    dst: e.dst.clone(),
                    guard: match &e.guard {
                        Guard::Pred(p) => Value::String(p.to_string()),
                        Guard::Ball { center } => procedural_to_value("center", nums(center)),
                    },
                    reset: e.resets.iter().map(|(n, r)| (n.clone(), strs(r))).collect(),
                })
                .collect(),
            initial: self.initial.clone(),
            metric: self.metric,
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HybridSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = HybridRepr::deserialize(d)?;
        from_repr(repr).map_err(crate::error::invalid)
    }
}

fn from_repr(repr: HybridRepr) -> Result<HybridSystem, String> {
    let mut params = BTreeMap::new();
    for (k, v) in &repr.params {
        if !is_identifier(k) || k == TIME_VAR {
            return Err(format!("`{k}` cannot name a parameter"));
        }
        params.insert(k.clone(), Expr::Num(number_from_json(v).map_err(|e| format!("parameter `{k}`: {e}"))?));
    }
    let declared: BTreeSet<&String> = repr.subsystems.iter().flat_map(|s| &s.vars).collect();
    if let Some(k) = params.keys().find(|k| declared.contains(k)) {
        return Err(format!("parameter `{k}` shadows a variable"));
    }
    let expr = |what: &str, s: &str| parse_expr(s).map(|e| e.substitute(&params)).map_err(|e| format!("{what} `{s}`: {e}"));
    let exprs = |what: &str, v: &[String]| v.iter().map(|s| expr(what, s)).collect::<Result<Vec<_>, _>>();
    let pred = |what: &str, v: &Value| match v {
        Value::String(s) => parse_pred(s).map(|p| p.substitute(&params)).map_err(|e| format!("{what} `{s}`: {e}")),
        Value::Bool(true) => Ok(crate::expr::Pred::True),
        Value::Bool(false) => Ok(crate::expr::Pred::False),
        other => Err(format!("{what}: expected a predicate string, found {other}")),
    };
    let subsystems = repr
        .subsystems
        .into_iter()
        .map(|s| {
            let init = s
                .init
                .iter()
                .map(|v| number_from_json(v).map_err(|e| format!("initial value of `{}`: {e}", s.name)))
                .collect::<Result<_, _>>()?;
            Ok(Subsystem { name: s.name, vars: s.vars, init })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let mut modes = BTreeMap::new();
    for (name, m) in repr.modes {
        let flows = m
            .flow
            .iter()
            .map(|(k, v)| Ok((k.clone(), exprs(&format!("flow of `{name}`"), v)?)))
            .collect::<Result<_, String>>()?;
        let invariant = Invariant::Pred(pred(&format!("invariant of `{name}`"), &m.invariant)?);
        let observation = exprs(&format!("observation of `{name}`"), &m.observation)?;
        modes.insert(name, Mode { flows, invariant, observation });
    }
    let events = repr
        .events
        .into_iter()
        .map(|e| {
            let what = format!("event ({}, {}, {})", e.src, e.action, e.dst);
            let guard = Guard::Pred(pred(&format!("guard of {what}"), &e.guard)?);
            let resets =
                e.reset.iter().map(|(k, v)| Ok((k.clone(), exprs(&format!("reset of {what}"), v)?))).collect::<Result<_, String>>()?;
            Ok(Event { src: e.src, action: e.action, dst: e.dst, guard, resets })
        })
        .collect::<Result<Vec<_>, String>>()?;
    HybridSystem::new(modes, subsystems, events, repr.initial, repr.metric).map_err(|e| e.to_string())
}
