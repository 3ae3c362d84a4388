//! Finite labelled transition systems, their morphisms, linear paths, path
//! lifting, and strong bisimilarity.
//!
//! Everything is generic over the label type so the same machinery runs on
//! plain symbols and on timed labels `(a, t)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

pub type StateId = String;

/// Plain alphabet symbol.
pub type Symbol = String;

/// Anything usable as a transition label.
pub trait Action: Clone + Ord + Hash + fmt::Debug + fmt::Display {}

impl<T: Clone + Ord + Hash + fmt::Debug + fmt::Display> Action for T {}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition<A = Symbol> {
    pub src: StateId,
    pub label: A,
    pub dst: StateId,
}

impl<A> Transition<A> {
    pub fn new(src: impl Into<StateId>, label: A, dst: impl Into<StateId>) -> Self {
        Transition { src: src.into(), label, dst: dst.into() }
    }
}

impl<A: fmt::Display> fmt::Display for Transition<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.src, self.label, self.dst)
    }
}

/// A finite labelled transition system `(S, i, Δ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts<A: Action = Symbol> {
    states: BTreeSet<StateId>,
    initial: StateId,
    transitions: BTreeSet<Transition<A>>,
    out: BTreeMap<StateId, Vec<(A, StateId)>>,
}

impl<A: Action> Lts<A> {
    pub fn new(
        states: BTreeSet<StateId>,
        initial: StateId,
        transitions: BTreeSet<Transition<A>>,
    ) -> Result<Self, ModelError> {
        if !states.contains(&initial) {
            return Err(ModelError::UnknownInitial(initial));
        }
        let mut out: BTreeMap<StateId, Vec<(A, StateId)>> = BTreeMap::new();
        for t in &transitions {
            for s in [&t.src, &t.dst] {
                if !states.contains(s) {
                    return Err(ModelError::UnknownState { transition: t.to_string(), state: s.clone() });
                }
            }
            out.entry(t.src.clone()).or_default().push((t.label.clone(), t.dst.clone()));
        }
        Ok(Lts { states, initial, transitions, out })
    }

    pub fn states(&self) -> &BTreeSet<StateId> {
        &self.states
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn transitions(&self) -> &BTreeSet<Transition<A>> {
        &self.transitions
    }

    pub fn contains_state(&self, s: &str) -> bool {
        self.states.contains(s)
    }

    /// Outgoing `(label, dst)` pairs of `s`, sorted.
    pub fn successors(&self, s: &str) -> &[(A, StateId)] {
        self.out.get(s).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_transition(&self, src: &str, label: &A, dst: &str) -> bool {
        self.successors(src).iter().any(|(a, t)| a == label && t == dst)
    }

    pub fn alphabet(&self) -> BTreeSet<A> {
        self.transitions.iter().map(|t| t.label.clone()).collect()
    }

    pub fn reachable(&self) -> BTreeSet<StateId> {
        let mut seen = BTreeSet::from([self.initial.clone()]);
        let mut queue = VecDeque::from([self.initial.clone()]);
        while let Some(s) = queue.pop_front() {
            for (_, t) in self.successors(&s) {
                if seen.insert(t.clone()) {
                    queue.push_back(t.clone());
                }
            }
        }
        seen
    }

    /// Shortest run to every reachable state; ties broken by sorted successor order.
    pub fn shortest_runs(&self) -> BTreeMap<StateId, Run<A>> {
        let mut runs = BTreeMap::from([(self.initial.clone(), Run::empty(self.initial.clone()))]);
        let mut queue = VecDeque::from([self.initial.clone()]);
        while let Some(s) = queue.pop_front() {
            let run = runs[&s].clone();
            for (a, t) in self.successors(&s) {
                if !runs.contains_key(t) {
                    runs.insert(t.clone(), run.extended(a.clone(), t.clone()));
                    queue.push_back(t.clone());
                }
            }
        }
        runs
    }

    /// Reachable states in breadth-first discovery order.
    pub fn bfs_order(&self) -> Vec<StateId> {
        let mut order = vec![self.initial.clone()];
        let mut seen = BTreeSet::from([self.initial.clone()]);
        let mut i = 0;
        while i < order.len() {
            let s = order[i].clone();
            for (_, t) in self.successors(&s) {
                if seen.insert(t.clone()) {
                    order.push(t.clone());
                }
            }
            i += 1;
        }
        order
    }

    pub fn restrict_to_reachable(&self) -> Lts<A> {
        let keep = self.reachable();
        let transitions = self.transitions.iter().filter(|t| keep.contains(&t.src)).cloned().collect();
        Lts::new(keep, self.initial.clone(), transitions).expect("restriction of a valid system is valid")
    }

    /// Same system with every state renamed by `rename`, which must be injective.
    pub fn rename(&self, rename: impl Fn(&str) -> StateId) -> Result<Lts<A>, ModelError> {
        let states: BTreeSet<StateId> = self.states.iter().map(|s| rename(s)).collect();
        if states.len() != self.states.len() {
            return Err(ModelError::invariant("renaming is not injective"));
        }
        let transitions = self
            .transitions
            .iter()
            .map(|t| Transition::new(rename(&t.src), t.label.clone(), rename(&t.dst)))
            .collect();
        Lts::new(states, rename(&self.initial), transitions)
    }
}

impl Lts<Symbol> {
    /// Convenience constructor from string triples.
    pub fn from_triples(states: &[&str], initial: &str, transitions: &[(&str, &str, &str)]) -> Result<Self, ModelError> {
        Lts::new(
            states.iter().map(|s| s.to_string()).collect(),
            initial.to_string(),
            transitions.iter().map(|(s, a, t)| Transition::new(*s, a.to_string(), *t)).collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LtsRepr<A> {
    states: Vec<StateId>,
    initial: StateId,
    transitions: Vec<Transition<A>>,
}

impl<A: Action + Serialize> Serialize for Lts<A> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LtsRepr {
            states: self.states.iter().cloned().collect(),
            initial: self.initial.clone(),
            transitions: self.transitions.iter().cloned().collect(),
        }
        .serialize(s)
    }
}

impl<'de, A: Action + Deserialize<'de>> Deserialize<'de> for Lts<A> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = LtsRepr::<A>::deserialize(d)?;
        let n_states = repr.states.len();
        let states: BTreeSet<StateId> = repr.states.into_iter().collect();
        if states.len() != n_states {
            return Err(crate::error::invalid("duplicate state id"));
        }
        Lts::new(states, repr.initial, repr.transitions.into_iter().collect()).map_err(crate::error::invalid)
    }
}

/// A word `w`, standing for the linear system `L(w)` with states `0..=n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearPath<A = Symbol> {
    pub word: Vec<A>,
}

impl<A: Action> LinearPath<A> {
    pub fn new(word: Vec<A>) -> Self {
        LinearPath { word }
    }

    pub fn state(k: usize) -> StateId {
        k.to_string()
    }

    pub fn to_lts(&self) -> Lts<A> {
        let states = (0..=self.word.len()).map(Self::state).collect();
        let transitions =
            self.word.iter().enumerate().map(|(k, a)| Transition::new(Self::state(k), a.clone(), Self::state(k + 1))).collect();
        Lts::new(states, Self::state(0), transitions).expect("linear systems are well formed")
    }

    pub fn is_prefix_of(&self, other: &LinearPath<A>) -> bool {
        other.word.starts_with(&self.word)
    }
}

/// A run from `start`: a path instance `L(w) → T` written as its transitions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Run<A = Symbol> {
    pub start: StateId,
    pub steps: Vec<Transition<A>>,
}

impl<A: Action> Run<A> {
    pub fn empty(start: StateId) -> Self {
        Run { start, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn end(&self) -> &str {
        self.steps.last().map_or(&self.start, |t| &t.dst)
    }

    pub fn word(&self) -> Vec<A> {
        self.steps.iter().map(|t| t.label.clone()).collect()
    }

    /// States visited, starting with `start`.
    pub fn states(&self) -> Vec<&str> {
        std::iter::once(self.start.as_str()).chain(self.steps.iter().map(|t| t.dst.as_str())).collect()
    }

    pub fn extended(&self, label: A, dst: StateId) -> Self {
        let mut run = self.clone();
        run.steps.push(Transition { src: self.end().to_string(), label, dst });
        run
    }

    pub fn validate(&self, lts: &Lts<A>) -> Result<(), String> {
        if self.start != lts.initial() {
            return Err(format!("run starts at `{}`, not at the initial state", self.start));
        }
        let mut at = self.start.as_str();
        for t in &self.steps {
            if t.src != at {
                return Err(format!("step {t} does not continue from `{at}`"));
            }
            if !lts.has_transition(&t.src, &t.label, &t.dst) {
                return Err(format!("step {t} is not a transition"));
            }
            at = &t.dst;
        }
        Ok(())
    }

    /// The morphism `L(w) → T` this run denotes.
    pub fn as_path(&self, lts: &Lts<A>) -> Result<LtsMorphism<A>, ModelError> {
        let path = LinearPath::new(self.word()).to_lts();
        let map = self.states().into_iter().enumerate().map(|(k, s)| (LinearPath::<A>::state(k), s.to_string())).collect();
        LtsMorphism::new(path, lts.clone(), map)
    }
}

impl<A: fmt::Display> fmt::Display for Run<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.start)?;
        for t in &self.steps {
            write!(f, " -{}-> {}", t.label, t.dst)?;
        }
        Ok(())
    }
}

/// A state map between two systems. Construction only checks that the map is
/// total and lands in the target; transition preservation is [`check_morphism`]'s job.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtsMorphism<A: Action = Symbol> {
    source: Lts<A>,
    target: Lts<A>,
    map: BTreeMap<StateId, StateId>,
}

impl<A: Action> LtsMorphism<A> {
    pub fn new(source: Lts<A>, target: Lts<A>, map: BTreeMap<StateId, StateId>) -> Result<Self, ModelError> {
        for s in source.states() {
            match map.get(s) {
                None => return Err(ModelError::MissingImage(s.clone())),
                Some(img) if !target.contains_state(img) => {
                    return Err(ModelError::UnknownImage { state: s.clone(), image: img.clone() })
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = map.keys().find(|s| !source.contains_state(s)) {
            return Err(ModelError::ExtraneousState(extra.clone()));
        }
        Ok(LtsMorphism { source, target, map })
    }

    pub fn identity(lts: &Lts<A>) -> Self {
        let map = lts.states().iter().map(|s| (s.clone(), s.clone())).collect();
        LtsMorphism { source: lts.clone(), target: lts.clone(), map }
    }

    pub fn source(&self) -> &Lts<A> {
        &self.source
    }

    pub fn target(&self) -> &Lts<A> {
        &self.target
    }

    pub fn map(&self) -> &BTreeMap<StateId, StateId> {
        &self.map
    }

    pub fn apply(&self, s: &str) -> &str {
        &self.map[s]
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &LtsMorphism<A>) -> Result<LtsMorphism<A>, ModelError> {
        if self.target != other.source {
            return Err(ModelError::NotComposable("target of the first is not the source of the second".into()));
        }
        let map = self.map.iter().map(|(s, t)| (s.clone(), other.map[t].clone())).collect();
        Ok(LtsMorphism { source: self.source.clone(), target: other.target.clone(), map })
    }

    pub fn is_valid(&self) -> bool {
        check_morphism(self).is_valid()
    }

    /// Bijective on states and on transitions.
    pub fn is_isomorphism(&self) -> bool {
        let images: BTreeSet<&StateId> = self.map.values().collect();
        if images.len() != self.source.states().len() || images.len() != self.target.states().len() {
            return false;
        }
        if self.apply(self.source.initial()) != self.target.initial() {
            return false;
        }
        let mapped: BTreeSet<Transition<A>> = self
            .source
            .transitions()
            .iter()
            .map(|t| Transition::new(self.apply(&t.src), t.label.clone(), self.apply(&t.dst)))
            .collect();
        &mapped == self.target.transitions()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum MorphismViolation<A = Symbol> {
    InitialNotPreserved { image: StateId, expected: StateId },
    TransitionNotPreserved { transition: Transition<A>, image: Transition<A> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MorphismReport<A = Symbol> {
    pub violations: Vec<MorphismViolation<A>>,
}

impl<A> MorphismReport<A> {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_morphism<A: Action>(f: &LtsMorphism<A>) -> MorphismReport<A> {
    let mut violations = Vec::new();
    let image = f.apply(f.source.initial());
    if image != f.target.initial() {
        violations.push(MorphismViolation::InitialNotPreserved {
            image: image.to_string(),
            expected: f.target.initial().to_string(),
        });
    }
    for t in f.source.transitions() {
        let img = Transition::new(f.apply(&t.src), t.label.clone(), f.apply(&t.dst));
        if !f.target.has_transition(&img.src, &img.label, &img.dst) {
            violations.push(MorphismViolation::TransitionNotPreserved { transition: t.clone(), image: img });
        }
    }
    MorphismReport { violations }
}

/// All morphisms `L(w) → L(w')`, found by backtracking along the source chain.
pub fn enumerate_linear_morphisms<A: Action>(p: &LinearPath<A>, q: &LinearPath<A>) -> Vec<LtsMorphism<A>> {
    let (src, dst) = (p.to_lts(), q.to_lts());
    let mut found = Vec::new();
    let mut images = vec![dst.initial().to_string()];
    extend_chain(&src, &dst, p, &mut images, &mut found);
    found
}

fn extend_chain<A: Action>(
    src: &Lts<A>,
    dst: &Lts<A>,
    p: &LinearPath<A>,
    images: &mut Vec<StateId>,
    found: &mut Vec<LtsMorphism<A>>,
) {
    let k = images.len() - 1;
    if k == p.word.len() {
        let map = images.iter().enumerate().map(|(i, s)| (LinearPath::<A>::state(i), s.clone())).collect();
        found.push(LtsMorphism::new(src.clone(), dst.clone(), map).expect("images are target states"));
        return;
    }
    let from = images[k].clone();
    for (a, t) in dst.successors(&from) {
        if *a == p.word[k] {
            images.push(t.clone());
            extend_chain(src, dst, p, images, found);
            images.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpenMode {
    /// The graph of `f` on reachable source states is a strong bisimulation.
    GraphBisim,
    /// Search lifts for every square built from runs of length at most `max_len`.
    LiftingOracle { max_len: usize },
}

/// A square with no diagonal: `f` sends `path` to a run that `target_step`
/// extends by `label`, and no source step from the end of `path` matches it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftingCounterexample<A = Symbol> {
    pub path: Run<A>,
    pub label: A,
    pub target_step: Transition<A>,
}

impl<A: Action> LiftingCounterexample<A> {
    /// Re-checks the square against `f` from scratch.
    pub fn confirm(&self, f: &LtsMorphism<A>) -> Result<(), String> {
        self.path.validate(f.source()).map_err(|e| format!("path: {e}"))?;
        let end = self.path.end();
        let step = &self.target_step;
        if step.label != self.label {
            return Err("target step does not carry the extension label".into());
        }
        if step.src != f.apply(end) {
            return Err("target step does not start at the image of the path's end".into());
        }
        if !f.target().has_transition(&step.src, &step.label, &step.dst) {
            return Err("target step is not a target transition".into());
        }
        if f.source().successors(end).iter().any(|(a, t)| *a == self.label && f.apply(t) == step.dst) {
            return Err("the square has a lift".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpenVerdict<A = Symbol> {
    Open,
    NotOpen(LiftingCounterexample<A>),
}

impl<A> OpenVerdict<A> {
    pub fn is_open(&self) -> bool {
        matches!(self, OpenVerdict::Open)
    }
}

pub fn is_open<A: Action>(f: &LtsMorphism<A>, mode: OpenMode) -> Result<OpenVerdict<A>, ModelError> {
    let report = check_morphism(f);
    if let Some(v) = report.violations.first() {
        return Err(ModelError::InvalidMorphism(format!("{v:?}")));
    }
    Ok(match mode {
        OpenMode::GraphBisim => open_by_graph(f, &BTreeSet::new()),
        OpenMode::LiftingOracle { max_len } => open_by_lifting(f, max_len),
    })
}

/// Graph-bisimulation openness ignoring squares whose path ends in `excluded`,
/// used for truncated unfoldings whose frontier has no successors by construction.
pub fn is_open_away_from<A: Action>(
    f: &LtsMorphism<A>,
    excluded: &BTreeSet<StateId>,
) -> Result<OpenVerdict<A>, ModelError> {
    let report = check_morphism(f);
    if let Some(v) = report.violations.first() {
        return Err(ModelError::InvalidMorphism(format!("{v:?}")));
    }
    Ok(open_by_graph(f, excluded))
}

fn open_by_graph<A: Action>(f: &LtsMorphism<A>, excluded: &BTreeSet<StateId>) -> OpenVerdict<A> {
    let runs = f.source().shortest_runs();
    for s in f.source().bfs_order() {
        if excluded.contains(&s) {
            continue;
        }
        let image = f.apply(&s);
        for (a, t2) in f.target().successors(image) {
            let matched = f.source().successors(&s).iter().any(|(b, t)| b == a && f.apply(t) == t2);
            if !matched {
                return OpenVerdict::NotOpen(LiftingCounterexample {
                    path: runs[&s].clone(),
                    label: a.clone(),
                    target_step: Transition::new(image, a.clone(), t2.clone()),
                });
            }
        }
    }
    OpenVerdict::Open
}

/// Literal lifting search. Whether a square has a lift depends on the path
/// only through its end state, so one shortest run per reachable end state is
/// enumerated; all extensions, all target continuations and all candidate
/// diagonals are then tried as explicit morphisms.
fn open_by_lifting<A: Action>(f: &LtsMorphism<A>, max_len: usize) -> OpenVerdict<A> {
    let runs = f.source().shortest_runs();
    let labels = f.target().alphabet();
    for s in f.source().bfs_order() {
        let p = &runs[&s];
        if p.len() > max_len {
            continue;
        }
        let w = LinearPath::new(p.word());
        let p_mor = p.as_path(f.source()).expect("runs are paths");
        let fp = p_mor.then(f).expect("p lands in the source of f");
        for a in &labels {
            let mut wa = w.word.clone();
            wa.push(a.clone());
            let wa = LinearPath::new(wa);
            let l_wa = wa.to_lts();
            for e in enumerate_linear_morphisms(&w, &wa) {
                let last = LinearPath::<A>::state(wa.word.len());
                for (b, t2) in f.target().successors(fp.apply(&LinearPath::<A>::state(w.word.len()))) {
                    if b != a {
                        continue;
                    }
                    let mut q2_map = fp.map().clone();
                    q2_map.insert(last.clone(), t2.clone());
                    let q2 = LtsMorphism::new(l_wa.clone(), f.target().clone(), q2_map).expect("images are target states");
                    if !q2.is_valid() || e.then(&q2).expect("composable").map() != fp.map() {
                        continue;
                    }
                    if !has_lift(f, &p_mor, &e, &q2, &l_wa, &last) {
                        return OpenVerdict::NotOpen(LiftingCounterexample {
                            path: p.clone(),
                            label: a.clone(),
                            target_step: Transition::new(fp.apply(&LinearPath::<A>::state(w.word.len())), a.clone(), t2.clone()),
                        });
                    }
                }
            }
        }
    }
    OpenVerdict::Open
}

fn has_lift<A: Action>(
    f: &LtsMorphism<A>,
    p: &LtsMorphism<A>,
    e: &LtsMorphism<A>,
    q2: &LtsMorphism<A>,
    l_wa: &Lts<A>,
    last: &str,
) -> bool {
    f.source().states().iter().any(|candidate| {
        let mut map = p.map().clone();
        map.insert(last.to_string(), candidate.clone());
        let q = LtsMorphism::new(l_wa.clone(), f.source().clone(), map).expect("candidate is a source state");
        q.is_valid()
            && e.then(&q).expect("composable").map() == p.map()
            && q.then(f).expect("composable").map() == q2.map()
    })
}

/// A set of state pairs between two systems.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BisimRelation {
    pub pairs: BTreeSet<(StateId, StateId)>,
}

impl BisimRelation {
    pub fn contains(&self, s: &str, t: &str) -> bool {
        self.pairs.contains(&(s.to_string(), t.to_string()))
    }

    pub fn is_subset(&self, other: &BisimRelation) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl FromIterator<(StateId, StateId)> for BisimRelation {
    fn from_iter<I: IntoIterator<Item = (StateId, StateId)>>(iter: I) -> Self {
        BisimRelation { pairs: iter.into_iter().collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Why a relation is not a bisimulation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "failure", rename_all = "kebab-case")]
pub enum BisimFailure<A = Symbol> {
    MissingInitial { pair: (StateId, StateId) },
    UnknownState { side: Side, state: StateId },
    /// `transition` leaves the `side` component of `pair` and has no partner inside the relation.
    Transfer { pair: (StateId, StateId), side: Side, transition: Transition<A> },
}

impl<A: fmt::Display> fmt::Display for BisimFailure<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BisimFailure::MissingInitial { pair } => write!(f, "initial pair ({}, {}) is missing", pair.0, pair.1),
            BisimFailure::UnknownState { side, state } => write!(f, "`{state}` is not a {side:?} state"),
            BisimFailure::Transfer { pair, side, transition } => {
                write!(f, "pair ({}, {}): {side:?} step {transition} has no related partner", pair.0, pair.1)
            }
        }
    }
}

/// Checks both transfer conditions and the initial pair.
pub fn check_bisimulation<A: Action>(t: &Lts<A>, u: &Lts<A>, r: &BisimRelation) -> Result<(), BisimFailure<A>> {
    check_transfer(t, u, r)?;
    if !r.contains(t.initial(), u.initial()) {
        return Err(BisimFailure::MissingInitial { pair: (t.initial().to_string(), u.initial().to_string()) });
    }
    Ok(())
}

/// Transfer conditions only.
pub fn check_transfer<A: Action>(t: &Lts<A>, u: &Lts<A>, r: &BisimRelation) -> Result<(), BisimFailure<A>> {
    for (s, s2) in &r.pairs {
        if !t.contains_state(s) {
            return Err(BisimFailure::UnknownState { side: Side::Left, state: s.clone() });
        }
        if !u.contains_state(s2) {
            return Err(BisimFailure::UnknownState { side: Side::Right, state: s2.clone() });
        }
        for (a, x) in t.successors(s) {
            if !u.successors(s2).iter().any(|(b, y)| a == b && r.contains(x, y)) {
                return Err(BisimFailure::Transfer {
                    pair: (s.clone(), s2.clone()),
                    side: Side::Left,
                    transition: Transition::new(s.clone(), a.clone(), x.clone()),
                });
            }
        }
        for (b, y) in u.successors(s2) {
            if !t.successors(s).iter().any(|(a, x)| a == b && r.contains(x, y)) {
                return Err(BisimFailure::Transfer {
                    pair: (s.clone(), s2.clone()),
                    side: Side::Right,
                    transition: Transition::new(s2.clone(), b.clone(), y.clone()),
                });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BisimEngine {
    PartitionRefinement,
    NaiveFixpoint,
}

/// Reachable parts of two systems as one indexed graph (left states first).
pub(crate) struct Union<'a> {
    pub names: Vec<&'a str>,
    pub n_left: usize,
    pub succ: Vec<Vec<(usize, usize)>>,
}

impl<'a> Union<'a> {
    pub fn new<A: Action>(t: &'a Lts<A>, u: &'a Lts<A>) -> Self {
        let (rt, ru) = (t.reachable(), u.reachable());
        let labels: BTreeMap<&A, usize> = t
            .alphabet_refs()
            .into_iter()
            .chain(u.alphabet_refs())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, a)| (a, i))
            .collect();
        let left: Vec<&str> = t.states().iter().filter(|s| rt.contains(*s)).map(String::as_str).collect();
        let right: Vec<&str> = u.states().iter().filter(|s| ru.contains(*s)).map(String::as_str).collect();
        let index_l: BTreeMap<&str, usize> = left.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let index_r: BTreeMap<&str, usize> = right.iter().enumerate().map(|(i, s)| (*s, i + left.len())).collect();
        let mut succ = Vec::with_capacity(left.len() + right.len());
        for s in &left {
            let mut out: Vec<(usize, usize)> = t.successors(s).iter().map(|(a, x)| (labels[a], index_l[x.as_str()])).collect();
            out.sort_unstable();
            succ.push(out);
        }
        for s in &right {
            let mut out: Vec<(usize, usize)> = u.successors(s).iter().map(|(a, x)| (labels[a], index_r[x.as_str()])).collect();
            out.sort_unstable();
            succ.push(out);
        }
        let n_left = left.len();
        let names = left.into_iter().chain(right).collect();
        Union { names, n_left, succ }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }
}

impl<A: Action> Lts<A> {
    fn alphabet_refs(&self) -> BTreeSet<&A> {
        self.transitions.iter().map(|t| &t.label).collect()
    }
}

/// Coarsest stable partition: blocks are refined by the signature
/// `(block, {(label, successor block)})` until the block count stops growing.
pub(crate) fn refine(succ: &[Vec<(usize, usize)>], initial_blocks: Vec<usize>) -> Vec<usize> {
    let mut block = initial_blocks;
    let mut count = block.iter().collect::<BTreeSet<_>>().len();
    loop {
        let mut ids: BTreeMap<(usize, Vec<(usize, usize)>), usize> = BTreeMap::new();
        let next: Vec<usize> = (0..succ.len())
            .map(|i| {
                let mut sig: Vec<(usize, usize)> = succ[i].iter().map(|&(a, j)| (a, block[j])).collect();
                sig.sort_unstable();
                sig.dedup();
                let fresh = ids.len();
                *ids.entry((block[i], sig)).or_insert(fresh)
            })
            .collect();
        block = next;
        if ids.len() == count {
            return block;
        }
        count = ids.len();
    }
}

/// The greatest strong bisimulation between the reachable parts of `t` and `u`.
pub fn greatest_bisimulation<A: Action>(t: &Lts<A>, u: &Lts<A>, engine: BisimEngine) -> BisimRelation {
    let g = Union::new(t, u);
    let related: Vec<(usize, usize)> = match engine {
        BisimEngine::PartitionRefinement => {
            let block = refine(&g.succ, vec![0; g.len()]);
            let mut pairs = Vec::new();
            for i in 0..g.n_left {
                for j in g.n_left..g.len() {
                    if block[i] == block[j] {
                        pairs.push((i, j));
                    }
                }
            }
            pairs
        }
        BisimEngine::NaiveFixpoint => naive_fixpoint(&g, |_, _| true),
    };
    related.into_iter().map(|(i, j)| (g.names[i].to_string(), g.names[j].to_string())).collect()
}

/// Greatest fixpoint by repeated deletion over the full pair set, starting
/// from the pairs accepted by `seed`.
pub(crate) fn naive_fixpoint(g: &Union<'_>, seed: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let (nl, n) = (g.n_left, g.len());
    let mut rel = vec![vec![false; n - nl]; nl];
    for (i, row) in rel.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            *cell = seed(i, k + nl);
        }
    }
    loop {
        let mut changed = false;
        for i in 0..nl {
            for j in nl..n {
                if !rel[i][j - nl] {
                    continue;
                }
                let forth = g.succ[i].iter().all(|&(a, x)| g.succ[j].iter().any(|&(b, y)| a == b && rel[x][y - nl]));
                let back = g.succ[j].iter().all(|&(b, y)| g.succ[i].iter().any(|&(a, x)| a == b && rel[x][y - nl]));
                if !(forth && back) {
                    rel[i][j - nl] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut pairs = Vec::new();
    for (i, row) in rel.iter().enumerate() {
        for (k, &on) in row.iter().enumerate() {
            if on {
                pairs.push((i, k + nl));
            }
        }
    }
    pairs
}

pub fn strong_bisimilarity<A: Action>(t: &Lts<A>, u: &Lts<A>) -> Option<BisimRelation> {
    strong_bisimilarity_with(t, u, BisimEngine::PartitionRefinement)
}

pub fn strong_bisimilarity_with<A: Action>(t: &Lts<A>, u: &Lts<A>, engine: BisimEngine) -> Option<BisimRelation> {
    let r = greatest_bisimulation(t, u, engine);
    r.contains(t.initial(), u.initial()).then_some(r)
}

/// `T ← R → T'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Span<A: Action = Symbol> {
    pub apex: Lts<A>,
    pub left: LtsMorphism<A>,
    pub right: LtsMorphism<A>,
}

/// State id of the apex state standing for the pair `(s, s')`.
pub fn pair_state_id(s: &str, t: &str) -> StateId {
    serde_json::to_string(&(s, t)).expect("string pairs serialize")
}

/// The apex built from `r`: pairs as states, synchronised steps as transitions.
/// Does not check `r`.
pub(crate) fn pair_system<A: Action>(t: &Lts<A>, u: &Lts<A>, r: &BisimRelation) -> Lts<A> {
    let states = r.pairs.iter().map(|(s, s2)| pair_state_id(s, s2)).collect();
    let mut transitions = BTreeSet::new();
    for (s, s2) in &r.pairs {
        for (a, x) in t.successors(s) {
            for (b, y) in u.successors(s2) {
                if a == b && r.contains(x, y) {
                    transitions.insert(Transition::new(pair_state_id(s, s2), a.clone(), pair_state_id(x, y)));
                }
            }
        }
    }
    Lts::new(states, pair_state_id(t.initial(), u.initial()), transitions).expect("pairs of r contain the initial pair")
}

pub(crate) fn projections<A: Action>(
    t: &Lts<A>,
    u: &Lts<A>,
    r: &BisimRelation,
    apex: &Lts<A>,
) -> (LtsMorphism<A>, LtsMorphism<A>) {
    let left = r.pairs.iter().map(|(s, s2)| (pair_state_id(s, s2), s.clone())).collect();
    let right = r.pairs.iter().map(|(s, s2)| (pair_state_id(s, s2), s2.clone())).collect();
    (
        LtsMorphism::new(apex.clone(), t.clone(), left).expect("left components are states of t"),
        LtsMorphism::new(apex.clone(), u.clone(), right).expect("right components are states of u"),
    )
}

pub fn span_from_relation<A: Action>(t: &Lts<A>, u: &Lts<A>, r: &BisimRelation) -> Result<Span<A>, BisimFailure<A>> {
    check_bisimulation(t, u, r)?;
    let apex = pair_system(t, u, r);
    let (left, right) = projections(t, u, r, &apex);
    Ok(Span { apex, left, right })
}

/// `{(left(x), right(x)) | x ∈ apex}`.
pub fn relation_from_span<A: Action>(span: &Span<A>) -> BisimRelation {
    span.apex.states().iter().map(|x| (span.left.apply(x).to_string(), span.right.apply(x).to_string())).collect()
}
