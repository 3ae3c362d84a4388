use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::tts::{timed_map_violations, TimedViolation};
use super::{Clock, Config, Edge, GFragment, GTree, Interval, Semantics, TimedLabel, TimedRun, TimedSystem, Tts};
use crate::error::ModelError;
use crate::lts::{Lts, LtsMorphism, StateId, Transition};
use crate::rational::{format_rational, zero, Rational};
use crate::unfolding::is_tree;

/// Largest tree, in transitions, whose clock set `2^Δ` may be listed.
pub const DEFAULT_CLOCK_CAP: usize = 16;

/// `ι T` for a timed tree `T`: same states, one clock per set of tree
/// transitions, and on each tree transition a point guard on every clock.
///
/// Guards are computed on demand, so systems too large to list their clocks
/// still answer guard and reset queries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IotaTts {
    tree: Lts<TimedLabel>,
    edges: Vec<Transition<TimedLabel>>,
    out: BTreeMap<StateId, Vec<usize>>,
    /// Tree transitions on the run from the root to each transition's source.
    path: Vec<Vec<usize>>,
    cap: usize,
}

/// `ι T`, refusing trees with more than [`DEFAULT_CLOCK_CAP`] transitions.
pub fn iota_timed(tree: &Lts<TimedLabel>) -> Result<IotaTts, ModelError> {
    IotaTts::with_cap(tree, DEFAULT_CLOCK_CAP)
}

impl IotaTts {
    pub fn with_cap(tree: &Lts<TimedLabel>, cap: usize) -> Result<Self, ModelError> {
        let n = tree.transitions().len();
        if n > cap {
            return Err(ModelError::Resource(format!("tree has {n} transitions, so 2^{n} clocks; the cap is {cap}")));
        }
        IotaTts::unlisted(tree, cap)
    }

    /// No size check; listing the clocks fails later if the tree exceeds `cap`.
    pub(crate) fn unlisted(tree: &Lts<TimedLabel>, cap: usize) -> Result<Self, ModelError> {
        if !is_tree(tree) {
            return Err(ModelError::invariant("ι is defined on trees only"));
        }
        let edges: Vec<Transition<TimedLabel>> = tree.transitions().iter().cloned().collect();
        let mut out: BTreeMap<StateId, Vec<usize>> = BTreeMap::new();
        let mut incoming: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            out.entry(e.src.clone()).or_default().push(i);
            incoming.insert(&e.dst, i);
        }
        let path = edges
            .iter()
            .map(|e| {
                let mut p = Vec::new();
                let mut s = e.src.as_str();
                while let Some(&j) = incoming.get(s) {
                    p.push(j);
                    s = &edges[j].src;
                }
                p.reverse();
                p
            })
            .collect();
        Ok(IotaTts { tree: tree.clone(), edges, out, path, cap })
    }

    pub fn tree(&self) -> &Lts<TimedLabel> {
        &self.tree
    }

    pub fn tree_edges(&self) -> &[Transition<TimedLabel>] {
        &self.edges
    }

    pub fn edge_index(&self, t: &Transition<TimedLabel>) -> Option<usize> {
        self.edges.binary_search(t).ok()
    }

    /// Tree transitions from the root up to and including `edge`.
    pub fn run_to(&self, edge: usize) -> Vec<usize> {
        let mut p = self.path[edge].clone();
        p.push(edge);
        p
    }

    /// `t_U = t + Σ_{j > i_U} t_j`, where `i_U` is the last position on the
    /// run before `edge` whose transition lies in `U` (0 when there is none).
    pub fn guard_time(&self, edge: usize, u: &BTreeSet<usize>) -> Rational {
        let mut t = self.edges[edge].label.time.clone();
        for &j in self.path[edge].iter().rev() {
            if u.contains(&j) {
                break;
            }
            t += &self.edges[j].label.time;
        }
        t
    }
}

impl TimedSystem for IotaTts {
    fn initial_state(&self) -> &str {
        self.tree.initial()
    }

    fn clocks(&self) -> Result<Vec<Clock>, ModelError> {
        let n = self.edges.len();
        if n > self.cap {
            return Err(ModelError::Resource(format!("cannot list 2^{n} clocks; the cap is {} transitions", self.cap)));
        }
        let mut all: Vec<Clock> =
            (0u64..1 << n).map(|m| Clock::Set((0..n).filter(|i| m >> i & 1 == 1).collect())).collect();
        all.sort();
        Ok(all)
    }

    fn edges_from(&self, s: &str) -> Vec<Edge> {
        self.out.get(s).map(|ids| ids.iter().map(|&i| self.edge(i)).collect()).unwrap_or_default()
    }

    fn edge(&self, id: usize) -> Edge {
        let e = &self.edges[id];
        Edge { id, action: e.label.action.clone(), dst: e.dst.clone() }
    }

    fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn edge_src(&self, id: usize) -> &str {
        &self.edges[id].src
    }

    fn guard(&self, edge: usize, c: &Clock) -> Interval {
        match c {
            Clock::Set(u) => Interval::point(self.guard_time(edge, u)),
            Clock::Named(_) => Interval::unbounded(),
        }
    }

    fn resets(&self, edge: usize, c: &Clock) -> bool {
        matches!(c, Clock::Set(u) if u.contains(&edge))
    }
}

/// The canonical run of `ι T` reaching the target of each tree transition on
/// `edges`, valuations given by the recursion
/// `t_U^{j+1} = t_{j+1}` if `δ_j ∈ U`, else `t_U^j + t_{j+1}`;
/// `ν_j(U) = 0` if `δ_j ∈ U`, else `t_U^j`.
pub(crate) fn canonical_run(iota: &IotaTts, sem: &Semantics<'_, IotaTts>, edges: &[usize]) -> TimedRun {
    let mut run = TimedRun::root(sem.initial());
    let mut t_u: Vec<Rational> = vec![zero(); sem.clocks().len()];
    let mut prev: Option<usize> = None;
    for &d in edges {
        let e = &iota.edges[d];
        let mut nu = Vec::with_capacity(t_u.len());
        for (k, c) in sem.clocks().iter().enumerate() {
            let Clock::Set(u) = c else { unreachable!("ι clocks are sets") };
            t_u[k] = match prev {
                Some(p) if u.contains(&p) => e.label.time.clone(),
                _ => &t_u[k] + &e.label.time,
            };
            nu.push(if u.contains(&d) { zero() } else { t_u[k].clone() });
        }
        run = run.extended(e.label.clone(), Config { state: e.dst.clone(), nu });
        prev = Some(d);
    }
    run
}

/// `η_T : T → G ι T` and `ρ_T : G ι T → T` with `G ι T` materialised in full.
#[derive(Clone, Debug)]
pub struct EtaRho {
    pub g_iota: GFragment,
    pub eta: LtsMorphism<TimedLabel>,
    pub rho: LtsMorphism<TimedLabel>,
}

impl EtaRho {
    /// Both are morphisms and each is inverse to the other.
    pub fn verify(&self) -> Result<(), String> {
        if !self.eta.is_valid() {
            return Err("η is not a morphism".into());
        }
        if !self.rho.is_valid() {
            return Err("ρ is not a morphism".into());
        }
        let back = self.eta.then(&self.rho).map_err(|e| e.to_string())?;
        if let Some((s, t)) = back.map().iter().find(|(s, t)| s != t) {
            return Err(format!("ρ(η({s})) = {t}"));
        }
        let there = self.rho.then(&self.eta).map_err(|e| e.to_string())?;
        if let Some((s, t)) = there.map().iter().find(|(s, t)| s != t) {
            return Err(format!("η(ρ({s})) = {t}"));
        }
        Ok(())
    }
}

pub fn eta_rho(tree: &Lts<TimedLabel>) -> Result<EtaRho, ModelError> {
    let iota = iota_timed(tree)?;
    let g = GTree::new(&iota)?;
    let g_iota = g.materialize_exact(tree.states().len())?;
    let mut eta = BTreeMap::new();
    for (s, run) in tree.shortest_runs() {
        let edges: Vec<usize> = run.steps.iter().map(|t| iota.edge_index(t).expect("run of the tree")).collect();
        let canon = canonical_run(&iota, g.semantics(), &edges);
        let id = g_iota.id_of(&canon).ok_or_else(|| {
            ModelError::InvalidMorphism(format!("the canonical run to `{s}` is not a run of G ι T"))
        })?;
        eta.insert(s, id.clone());
    }
    let rho = g_iota.runs.iter().map(|(id, r)| (id.clone(), r.last().state.clone())).collect();
    Ok(EtaRho {
        eta: LtsMorphism::new(tree.clone(), g_iota.lts.clone(), eta)?,
        rho: LtsMorphism::new(g_iota.lts.clone(), tree.clone(), rho)?,
        g_iota,
    })
}

type CounitMaps = (IotaTts, BTreeMap<StateId, StateId>, BTreeMap<Clock, Clock>);

/// Components of `ε_T : ι(G T) → T` on a fragment of `G T`: runs go to their
/// last state, and clock `c` to the fragment transitions after which `c` reads 0.
pub(crate) fn counit_maps<S: TimedSystem + ?Sized>(
    t: &S,
    fragment: &GFragment,
) -> Result<CounitMaps, ModelError> {
    let iota = IotaTts::unlisted(&fragment.lts, DEFAULT_CLOCK_CAP)?;
    let sem = Semantics::new(t)?;
    let f = fragment.runs.iter().map(|(id, r)| (id.clone(), r.last().state.clone())).collect();
    let g = sem
        .clocks()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let zeroed = iota
                .tree_edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| fragment.runs[&e.dst].last().nu[k] == zero())
                .map(|(i, _)| i)
                .collect();
            (c.clone(), Clock::Set(zeroed))
        })
        .collect();
    Ok((iota, f, g))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CounitReport {
    pub transitions_checked: usize,
    pub violations: Vec<TimedViolation>,
    /// Transitions where `t_{g(c)}` differs from `ν_n(c) + t_{n+1}`.
    pub delay_mismatches: Vec<String>,
}

impl CounitReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty() && self.delay_mismatches.is_empty()
    }
}

/// Checks that `ε_T` is a morphism `ι(fragment) → T`.
pub fn timed_counit(t: &Tts, fragment: &GFragment) -> Result<CounitReport, ModelError> {
    let (iota, f, g) = counit_maps(t, fragment)?;
    let violations = timed_map_violations(&iota, t, &f, &g)?;
    let sem = Semantics::new(t)?;
    let mut delay_mismatches = Vec::new();
    for (i, e) in iota.tree_edges().iter().enumerate() {
        let before = fragment.runs[&e.src].last();
        for (k, c) in sem.clocks().iter().enumerate() {
            let Clock::Set(u) = &g[c] else { unreachable!("counit clocks are sets") };
            let lhs = iota.guard_time(i, u);
            let rhs = &before.nu[k] + &e.label.time;
            if lhs != rhs {
                delay_mismatches.push(format!(
                    "{}: t_g({c}) = {} but ν({c}) + t = {}",
                    e,
                    format_rational(&lhs),
                    format_rational(&rhs)
                ));
            }
        }
    }
    Ok(CounitReport { transitions_checked: iota.tree_edges().len(), violations, delay_mismatches })
}
