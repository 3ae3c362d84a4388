use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Clock, Config, Edge, Interval, Semantics, TimedSystem};
use crate::error::ModelError;
use crate::lts::{StateId, Symbol};

/// `(s, a, R, I, s')`: reset set `R ⊆ C`, guard `I : C → intervals`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtsTransition {
    pub src: StateId,
    pub action: Symbol,
    #[serde(default)]
    pub reset: BTreeSet<String>,
    /// Clocks left out are unconstrained, `[0,inf)`.
    #[serde(default)]
    pub guard: BTreeMap<String, Interval>,
    pub dst: StateId,
}

impl fmt::Display for TtsTransition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let guard: Vec<String> = self.guard.iter().map(|(c, i)| format!("{c}∈{i}")).collect();
        let reset: Vec<&str> = self.reset.iter().map(String::as_str).collect();
        write!(f, "{} -{} [{}] reset{{{}}}-> {}", self.src, self.action, guard.join(","), reset.join(","), self.dst)
    }
}

/// A timed transition system `(S, i, C, Δ)` with finitely many named clocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tts {
    states: BTreeSet<StateId>,
    initial: StateId,
    clocks: Vec<String>,
    transitions: Vec<TtsTransition>,
    out: BTreeMap<StateId, Vec<usize>>,
}

impl Tts {
    /// Guards are completed with `[0,inf)` on clocks they leave out.
    pub fn new(
        states: BTreeSet<StateId>,
        initial: StateId,
        clocks: BTreeSet<String>,
        transitions: impl IntoIterator<Item = TtsTransition>,
    ) -> Result<Self, ModelError> {
        if !states.contains(&initial) {
            return Err(ModelError::UnknownInitial(initial));
        }
        let mut list = BTreeSet::new();
        for mut t in transitions {
            for s in [&t.src, &t.dst] {
                if !states.contains(s) {
                    return Err(ModelError::UnknownState { transition: t.to_string(), state: s.clone() });
                }
            }
            if let Some(c) = t.reset.iter().chain(t.guard.keys()).find(|c| !clocks.contains(*c)) {
                return Err(ModelError::invariant(format!("transition {t} mentions unknown clock `{c}`")));
            }
            for c in &clocks {
                t.guard.entry(c.clone()).or_insert_with(Interval::unbounded);
            }
            list.insert(t);
        }
        let transitions: Vec<TtsTransition> = list.into_iter().collect();
        let mut out: BTreeMap<StateId, Vec<usize>> = BTreeMap::new();
        for (i, t) in transitions.iter().enumerate() {
            out.entry(t.src.clone()).or_default().push(i);
        }
        Ok(Tts { states, initial, clocks: clocks.into_iter().collect(), transitions, out })
    }

    pub fn states(&self) -> &BTreeSet<StateId> {
        &self.states
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn clock_names(&self) -> &[String] {
        &self.clocks
    }

    pub fn transitions(&self) -> &[TtsTransition] {
        &self.transitions
    }

    pub fn actions(&self) -> BTreeSet<Symbol> {
        self.transitions.iter().map(|t| t.action.clone()).collect()
    }

    /// Whether every guard interval is a single point.
    pub fn has_point_guards(&self) -> bool {
        self.transitions.iter().all(|t| t.guard.values().all(|i| i.as_point().is_some()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TtsRepr {
    states: BTreeSet<StateId>,
    initial: StateId,
    #[serde(default)]
    clocks: BTreeSet<String>,
    #[serde(default)]
    transitions: Vec<TtsTransition>,
}

impl Serialize for Tts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TtsRepr {
            states: self.states.clone(),
            initial: self.initial.clone(),
            clocks: self.clocks.iter().cloned().collect(),
            transitions: self.transitions.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = TtsRepr::deserialize(d)?;
        Tts::new(r.states, r.initial, r.clocks, r.transitions).map_err(crate::error::invalid)
    }
}

impl TimedSystem for Tts {
    fn initial_state(&self) -> &str {
        &self.initial
    }

    fn clocks(&self) -> Result<Vec<Clock>, ModelError> {
        Ok(self.clocks.iter().map(|c| Clock::Named(c.clone())).collect())
    }

    fn edges_from(&self, s: &str) -> Vec<Edge> {
        self.out.get(s).map(|ids| ids.iter().map(|&i| self.edge(i)).collect()).unwrap_or_default()
    }

    fn edge(&self, id: usize) -> Edge {
        let t = &self.transitions[id];
        Edge { id, action: t.action.clone(), dst: t.dst.clone() }
    }

    fn edge_count(&self) -> usize {
        self.transitions.len()
    }

    fn edge_src(&self, id: usize) -> &str {
        &self.transitions[id].src
    }

    fn guard(&self, edge: usize, c: &Clock) -> Interval {
        match c {
            Clock::Named(n) => self.transitions[edge].guard.get(n).cloned().unwrap_or_else(Interval::unbounded),
            Clock::Set(_) => Interval::unbounded(),
        }
    }

    fn resets(&self, edge: usize, c: &Clock) -> bool {
        matches!(c, Clock::Named(n) if self.transitions[edge].reset.contains(n))
    }
}

/// Why a state and clock map is not a morphism of timed systems.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimedViolation {
    InitialNotPreserved { image: StateId, expected: StateId },
    /// No target transition matches the image of this source transition.
    Unmatched { transition: String, reason: String },
}

impl fmt::Display for TimedViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimedViolation::InitialNotPreserved { image, expected } => {
                write!(f, "initial state goes to `{image}`, expected `{expected}`")
            }
            TimedViolation::Unmatched { transition, reason } => write!(f, "{transition}: {reason}"),
        }
    }
}

/// Checks `(f, g)` between two timed systems, with `g` sending target clocks
/// to source clocks: each source transition `(s, a, R, I, s')` needs a target
/// transition `(f s, a, R', I', f s')` with `R' = g⁻¹(R)` and `I(g c') ⊆ I'(c')`.
pub(crate) fn timed_map_violations<S: TimedSystem + ?Sized, T: TimedSystem + ?Sized>(
    source: &S,
    target: &T,
    f: &BTreeMap<StateId, StateId>,
    g: &BTreeMap<Clock, Clock>,
) -> Result<Vec<TimedViolation>, ModelError> {
    let image = |s: &str| f.get(s).cloned().ok_or_else(|| ModelError::MissingImage(s.to_string()));
    let target_clocks = target.clocks()?;
    if let Some(c) = target_clocks.iter().find(|c| !g.contains_key(*c)) {
        return Err(ModelError::invariant(format!("clock map has no image for target clock {c}")));
    }
    let mut out = Vec::new();
    let init = image(source.initial_state())?;
    if init != target.initial_state() {
        out.push(TimedViolation::InitialNotPreserved { image: init, expected: target.initial_state().to_string() });
    }
    for id in 0..source.edge_count() {
        let e = source.edge(id);
        let (fs, fd) = (image(source.edge_src(id))?, image(&e.dst)?);
        let mut reason = format!("no `{}` transition from `{fs}` to `{fd}`", e.action);
        let matched = target.edges_from(&fs).into_iter().filter(|t| t.action == e.action && t.dst == fd).any(|t| {
            for c in &target_clocks {
                let gc = &g[c];
                if target.resets(t.id, c) != source.resets(id, gc) {
                    reason = format!("reset of {c} disagrees with reset of {gc}");
                    return false;
                }
                let (inner, outer) = (source.guard(id, gc), target.guard(t.id, c));
                if !inner.is_subset_of(&outer) {
                    reason = format!("guard {inner} on {gc} is not within {outer} on {c}");
                    return false;
                }
            }
            true
        });
        if !matched {
            out.push(TimedViolation::Unmatched { transition: describe_edge(source, id), reason });
        }
    }
    Ok(out)
}

pub(crate) fn describe_edge<S: TimedSystem + ?Sized>(sys: &S, id: usize) -> String {
    let e = sys.edge(id);
    format!("{} -{}-> {}", sys.edge_src(id), e.action, e.dst)
}

/// A morphism `(f, g)` of timed systems; `g` maps target clocks to source clocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TtsMorphism {
    source: Tts,
    target: Tts,
    state_map: BTreeMap<StateId, StateId>,
    clock_map: BTreeMap<String, String>,
}

impl TtsMorphism {
    /// Both maps must be total and land in the right sets; the morphism
    /// conditions are checked separately by [`check_tts_morphism`].
    pub fn new(
        source: Tts,
        target: Tts,
        state_map: BTreeMap<StateId, StateId>,
        clock_map: BTreeMap<String, String>,
    ) -> Result<Self, ModelError> {
        for s in &source.states {
            let img = state_map.get(s).ok_or_else(|| ModelError::MissingImage(s.clone()))?;
            if !target.states.contains(img) {
                return Err(ModelError::UnknownImage { state: s.clone(), image: img.clone() });
            }
        }
        if let Some(s) = state_map.keys().find(|s| !source.states.contains(*s)) {
            return Err(ModelError::ExtraneousState(s.clone()));
        }
        for c in &target.clocks {
            let img = clock_map.get(c).ok_or_else(|| ModelError::invariant(format!("clock map has no image for `{c}`")))?;
            if !source.clocks.contains(img) {
                return Err(ModelError::invariant(format!("clock `{c}` maps to unknown source clock `{img}`")));
            }
        }
        if let Some(c) = clock_map.keys().find(|c| !target.clocks.contains(*c)) {
            return Err(ModelError::invariant(format!("clock map mentions unknown target clock `{c}`")));
        }
        Ok(TtsMorphism { source, target, state_map, clock_map })
    }

    pub fn identity(t: &Tts) -> Self {
        TtsMorphism {
            source: t.clone(),
            target: t.clone(),
            state_map: t.states.iter().map(|s| (s.clone(), s.clone())).collect(),
            clock_map: t.clocks.iter().map(|c| (c.clone(), c.clone())).collect(),
        }
    }

    pub fn source(&self) -> &Tts {
        &self.source
    }

    pub fn target(&self) -> &Tts {
        &self.target
    }

    pub fn state_map(&self) -> &BTreeMap<StateId, StateId> {
        &self.state_map
    }

    pub fn clock_map(&self) -> &BTreeMap<String, String> {
        &self.clock_map
    }

    pub(crate) fn clock_map_as_clocks(&self) -> BTreeMap<Clock, Clock> {
        self.clock_map.iter().map(|(a, b)| (Clock::Named(a.clone()), Clock::Named(b.clone()))).collect()
    }

    /// `(s, ν) ↦ (f s, ν ∘ g)`.
    pub fn map_config(&self, cfg: &Config) -> Config {
        let src = Semantics::new(&self.source).expect("named clocks are listable");
        let nu = self
            .target
            .clocks
            .iter()
            .map(|c| {
                let i = src.clock_index(&Clock::Named(self.clock_map[c].clone())).expect("checked at construction");
                cfg.nu[i].clone()
            })
            .collect();
        Config { state: self.state_map[&cfg.state].clone(), nu }
    }
}

pub fn check_tts_morphism(m: &TtsMorphism) -> Vec<TimedViolation> {
    timed_map_violations(&m.source, &m.target, &m.state_map, &m.clock_map_as_clocks())
        .expect("maps are total by construction")
}
