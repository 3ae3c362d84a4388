use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use super::{Config, Interval, Semantics, TimedLabel, TimedRun, TimedSystem, TimedWord};
use crate::error::ModelError;
use crate::lts::{Lts, StateId, Symbol, Transition};
use crate::rational::{int, is_positive, Rational};

/// How delays are picked when a finite piece of an uncountably branching
/// semantics is materialised.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TimePolicy {
    /// Endpoints of the enabled intervals, midpoints between them, and one past the largest.
    Canonical,
    /// A fixed set of delays.
    Grid { times: Vec<Rational> },
}

/// Endpoints of `intervals` together with `0`, midpoints of consecutive
/// endpoints and `max + 1`; only positive values are kept.
pub fn challenge_times<'a>(intervals: impl IntoIterator<Item = &'a Interval>) -> Vec<Rational> {
    let mut ends = BTreeSet::from([int(0)]);
    for iv in intervals {
        ends.insert(iv.lo().clone());
        if let Some(h) = iv.hi() {
            ends.insert(h.clone());
        }
    }
    let ends: Vec<Rational> = ends.into_iter().collect();
    let mut out: BTreeSet<Rational> = ends.iter().cloned().collect();
    for w in ends.windows(2) {
        out.insert((&w[0] + &w[1]) / int(2));
    }
    out.insert(ends.last().expect("contains 0") + int(1));
    out.into_iter().filter(is_positive).collect()
}

/// One edge leaving the end of a run, with the delays it admits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicChild {
    pub edge: usize,
    pub action: Symbol,
    pub dst: StateId,
    pub times: Interval,
}

/// Lazy handle on the run tree `G T`: children are produced symbolically on
/// demand and memoised by configuration.
pub struct GTree<'a, T: TimedSystem + ?Sized> {
    sem: Semantics<'a, T>,
    memo: RefCell<BTreeMap<Config, Vec<SymbolicChild>>>,
}

impl<'a, T: TimedSystem + ?Sized> GTree<'a, T> {
    pub fn new(sys: &'a T) -> Result<Self, ModelError> {
        Ok(GTree { sem: Semantics::new(sys)?, memo: RefCell::new(BTreeMap::new()) })
    }

    pub fn semantics(&self) -> &Semantics<'a, T> {
        &self.sem
    }

    pub fn root(&self) -> TimedRun {
        TimedRun::root(self.sem.initial())
    }

    /// Edges enabled at the end of `run` for some positive delay.
    pub fn children(&self, run: &TimedRun) -> Vec<SymbolicChild> {
        let cfg = run.last();
        if let Some(c) = self.memo.borrow().get(cfg) {
            return c.clone();
        }
        let sys = self.sem.system();
        let kids: Vec<SymbolicChild> = sys
            .edges_from(&cfg.state)
            .into_iter()
            .filter_map(|e| {
                let times = self.sem.admissible(e.id, cfg)?;
                Some(SymbolicChild { edge: e.id, action: e.action, dst: e.dst, times })
            })
            .collect();
        self.memo.borrow_mut().insert(cfg.clone(), kids.clone());
        kids
    }

    /// Extends `run` along `edge` after delay `t`.
    pub fn instantiate(&self, run: &TimedRun, edge: usize, t: &Rational) -> Result<TimedRun, ModelError> {
        let e = self.sem.system().edge(edge);
        if self.sem.system().edge_src(edge) != run.last().state || !is_positive(t) || !self.sem.admits(edge, run.last(), t) {
            return Err(ModelError::invariant(format!("edge {edge} does not admit delay {t} here")));
        }
        Ok(run.extended(TimedLabel::new(e.action, t.clone()), self.sem.advance(edge, run.last(), t)))
    }

    /// All one-step extensions of `run` by `label`.
    pub fn step(&self, run: &TimedRun, label: &TimedLabel) -> Result<Vec<TimedRun>, ModelError> {
        Ok(self
            .sem
            .theta_step(run.last(), &label.action, &label.time)?
            .into_iter()
            .map(|c| run.extended(label.clone(), c))
            .collect())
    }

    /// Runs of length at most `depth` whose delays follow `policy`.
    pub fn materialize(&self, depth: usize, policy: &TimePolicy) -> GFragment {
        build(self, depth, |run| {
            let kids = self.children(run);
            let candidates = match policy {
                TimePolicy::Canonical => challenge_times(kids.iter().map(|k| &k.times)),
                TimePolicy::Grid { times } => times.clone(),
            };
            let mut out = BTreeSet::new();
            for k in &kids {
                for t in candidates.iter().filter(|t| k.times.contains(t)) {
                    out.insert((TimedLabel::new(k.action.clone(), t.clone()), self.sem.advance(k.edge, run.last(), t)));
                }
            }
            Ok(out)
        })
        .expect("policy expansion does not fail")
    }

    /// Every run of length at most `depth`; each enabled interval must be a single point.
    pub fn materialize_exact(&self, depth: usize) -> Result<GFragment, ModelError> {
        build(self, depth, |run| {
            let mut out = BTreeSet::new();
            for k in self.children(run) {
                let t = k.times.as_point().ok_or_else(|| {
                    ModelError::Resource(format!(
                        "edge {} admits the delays {}, so the run tree branches infinitely",
                        k.edge, k.times
                    ))
                })?;
                out.insert((TimedLabel::new(k.action.clone(), t.clone()), self.sem.advance(k.edge, run.last(), t)));
            }
            Ok(out)
        })
    }

    /// The runs reading prefixes of `words`.
    pub fn materialize_words(&self, words: &[TimedWord]) -> Result<GFragment, ModelError> {
        let depth = words.iter().map(Vec::len).max().unwrap_or(0);
        let prefixes: BTreeSet<&[TimedLabel]> =
            words.iter().flat_map(|w| (1..=w.len()).map(move |n| &w[..n])).collect();
        build(self, depth, |run| {
            let next: BTreeSet<&TimedLabel> =
                prefixes.iter().filter(|p| p.len() == run.len() + 1 && p[..run.len()] == run.labels[..]).map(|p| &p[run.len()]).collect();
            let mut out = BTreeSet::new();
            for l in next {
                for c in self.sem.theta_step(run.last(), &l.action, &l.time)? {
                    out.insert((l.clone(), c));
                }
            }
            Ok(out)
        })
    }
}

/// A finite piece of `G T` as a tree-shaped transition system over timed labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GFragment {
    pub lts: Lts<TimedLabel>,
    pub runs: BTreeMap<StateId, TimedRun>,
    /// Runs at the depth limit that have enabled successors left out.
    pub frontier: BTreeSet<StateId>,
    ids: BTreeMap<TimedRun, StateId>,
}

impl GFragment {
    pub fn id_of(&self, run: &TimedRun) -> Option<&StateId> {
        self.ids.get(run)
    }

    pub fn run(&self, id: &str) -> Option<&TimedRun> {
        self.runs.get(id)
    }
}

/// Breadth-first expansion. Ids are the run skeletons `q1 -(a,1)-> q2`, with
/// `#k` appended when sibling runs share a skeleton but differ in valuation.
fn build<T: TimedSystem + ?Sized>(
    tree: &GTree<'_, T>,
    depth: usize,
    mut expand: impl FnMut(&TimedRun) -> Result<BTreeSet<(TimedLabel, Config)>, ModelError>,
) -> Result<GFragment, ModelError> {
    let root = tree.root();
    let root_id = root.last().state.clone();
    let mut runs = BTreeMap::from([(root_id.clone(), root.clone())]);
    let mut transitions = BTreeSet::new();
    let mut frontier = BTreeSet::new();
    let mut layer = vec![(root_id.clone(), root)];
    for level in 0..=depth {
        let mut next = Vec::new();
        for (id, run) in &layer {
            if level == depth {
                if !tree.children(run).is_empty() {
                    frontier.insert(id.clone());
                }
                continue;
            }
            let mut groups: BTreeMap<(TimedLabel, StateId), Vec<Config>> = BTreeMap::new();
            for (l, c) in expand(run)? {
                groups.entry((l, c.state.clone())).or_default().push(c);
            }
            for ((label, state), cfgs) in groups {
                let base = format!("{id} -{label}-> {state}");
                let many = cfgs.len() > 1;
                for (k, c) in cfgs.into_iter().enumerate() {
                    let child_id = if many { format!("{base}#{k}") } else { base.clone() };
                    let child = run.extended(label.clone(), c);
                    transitions.insert(Transition::new(id.clone(), label.clone(), child_id.clone()));
                    runs.insert(child_id.clone(), child.clone());
                    next.push((child_id, child));
                }
            }
        }
        layer = next;
    }
    let lts = Lts::new(runs.keys().cloned().collect(), root_id, transitions).expect("fragment is well formed");
    let ids = runs.iter().map(|(id, r)| (r.clone(), id.clone())).collect();
    Ok(GFragment { lts, runs, frontier, ids })
}
