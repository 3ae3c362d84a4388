use std::collections::BTreeMap;

use serde::Serialize;

use super::morphism::{check_hybrid_morphism, HybridMorphism, HybridMorphismReport};
use super::numerics::{
    apply_resets, flatten, flow, guard_holds, integrate, sample_times, sup_distance, HybridConfig, IntegratorConfig, Valuation,
};
use super::system::{Event, Guard, HybridSystem, Invariant, Mode, Subsystem};
use super::unfold::{h_unfold, tree_words, HFragment, HybridRun};
use crate::error::ModelError;
use crate::expr::{Bindings, Expr};
use crate::lts::{Lts, StateId, Symbol, Transition};
use crate::observations::{ObsPoint, ObsSpace, ObsSystem};
use crate::rational::to_f64;
use crate::timed::TimedLabel;
use crate::unfolding::is_tree;

/// A tree event `(s, a, s')`.
pub type TreeEvent = (StateId, Symbol, StateId);

/// A subsystem of `ι T`, given by its content on the tree `T`: dimension
/// and start value, a flow per tree state and a reset per tree event.
/// Missing flows are zero and missing resets the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEntry {
    pub name: String,
    pub vars: Vec<String>,
    pub init: Vec<f64>,
    pub flows: BTreeMap<StateId, Vec<Expr>>,
    pub resets: BTreeMap<TreeEvent, Vec<Expr>>,
}

fn positional(exprs: &[Expr], vars: &[String]) -> Vec<Expr> {
    let map: BTreeMap<String, Expr> = vars.iter().enumerate().map(|(k, v)| (v.clone(), Expr::Var(format!("${k}")))).collect();
    exprs.iter().map(|e| e.substitute(&map)).collect()
}

impl BasisEntry {
    fn flow_at(&self, s: &str) -> Vec<Expr> {
        self.flows.get(s).cloned().unwrap_or_else(|| vec![Expr::Num(0.0); self.vars.len()])
    }

    fn reset_at(&self, e: &TreeEvent) -> Vec<Expr> {
        self.resets.get(e).cloned().unwrap_or_else(|| self.vars.iter().map(|v| Expr::Var(v.clone())).collect())
    }

    /// Same content on `tree`: names of the entry and of its variables aside.
    pub fn same_content(&self, other: &BasisEntry, tree: &Lts<TimedLabel>) -> bool {
        self.vars.len() == other.vars.len()
            && self.init.iter().map(|x| x.to_bits()).eq(other.init.iter().map(|x| x.to_bits()))
            && tree
                .states()
                .iter()
                .all(|s| positional(&self.flow_at(s), &self.vars) == positional(&other.flow_at(s), &other.vars))
            && tree.transitions().iter().all(|t| {
                let e = (t.src.clone(), t.label.action.clone(), t.dst.clone());
                positional(&self.reset_at(&e), &self.vars) == positional(&other.reset_at(&e), &other.vars)
            })
    }
}

/// A subsystem kind that makes sense on every tree: one flow everywhere and
/// one reset (identity when `None`) on every event.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisTemplate {
    pub name: String,
    pub vars: Vec<String>,
    pub init: Vec<f64>,
    pub flow: Vec<Expr>,
    pub reset: Option<Vec<Expr>>,
}

impl BasisTemplate {
    /// `(1, 0, ẋ = 1, x := 0)`: reads the time since the last transition.
    pub fn clock() -> Self {
        BasisTemplate {
            name: "_clock".into(),
            vars: vec!["_c".into()],
            init: vec![0.0],
            flow: vec![Expr::Num(1.0)],
            reset: Some(vec![Expr::Num(0.0)]),
        }
    }

    pub fn on(&self, tree: &Lts<TimedLabel>) -> BasisEntry {
        BasisEntry {
            name: self.name.clone(),
            vars: self.vars.clone(),
            init: self.init.clone(),
            flows: tree.states().iter().map(|s| (s.clone(), self.flow.clone())).collect(),
            resets: match &self.reset {
                None => BTreeMap::new(),
                Some(r) => tree
                    .transitions()
                    .iter()
                    .map(|t| ((t.src.clone(), t.label.action.clone(), t.dst.clone()), r.clone()))
                    .collect(),
            },
        }
    }
}

/// Values of every basis entry along the unique run to each tree state.
pub(crate) struct Chain {
    /// `σ_s`: the valuation when `s` is entered.
    pub(crate) entry: BTreeMap<StateId, Valuation>,
    /// Pre-reset value at the end of each tree transition.
    pub(crate) centers: BTreeMap<Transition<TimedLabel>, Valuation>,
    /// Samples of `σ_{s,α}(u)` for `u` up to the largest outgoing time.
    pub(crate) samples: BTreeMap<StateId, Vec<Vec<f64>>>,
}

fn integrate_all(basis: &[BasisEntry], s: &str, sigma: &Valuation, times: &[f64]) -> Result<Vec<Valuation>, ModelError> {
    let mut per = Vec::with_capacity(basis.len());
    for (b, x0) in basis.iter().zip(sigma) {
        per.push(
            integrate(&b.flow_at(s), &b.vars, x0, times)
                .map_err(|e| ModelError::Evaluation(format!("state `{s}`, subsystem `{}`: {e}", b.name)))?,
        );
    }
    Ok((0..times.len()).map(|k| per.iter().map(|xs| xs[k].clone()).collect()).collect())
}

pub(crate) fn chain(tree: &Lts<TimedLabel>, basis: &[BasisEntry], cfg: &IntegratorConfig) -> Result<Chain, ModelError> {
    let mut entry = BTreeMap::from([(tree.initial().to_string(), basis.iter().map(|b| b.init.clone()).collect::<Valuation>())]);
    let mut centers = BTreeMap::new();
    let mut samples = BTreeMap::new();
    for s in tree.bfs_order() {
        let sigma = entry[&s].clone();
        let succ = tree.successors(&s);
        let t_max = succ.iter().map(|(l, _)| to_f64(&l.time)).fold(0.0, f64::max);
        let mut stored: Vec<Vec<f64>> = integrate_all(basis, &s, &sigma, &sample_times(t_max, cfg.step))?.iter().map(flatten).collect();
        for (l, d) in succ {
            let traj = integrate_all(basis, &s, &sigma, &sample_times(to_f64(&l.time), cfg.step))?;
            let end = traj.last().expect("nonempty").clone();
            stored.push(flatten(&end));
            let ev = (s.clone(), l.action.clone(), d.clone());
            let next = basis
                .iter()
                .zip(&end)
                .map(|(b, x)| {
                    let env = Bindings { names: &b.vars, values: x, time: None };
                    b.reset_at(&ev)
                        .iter()
                        .map(|r| r.eval(&env).map_err(|e| ModelError::Evaluation(format!("reset of `{}`: {e}", b.name))))
                        .collect::<Result<Vec<f64>, _>>()
                })
                .collect::<Result<Valuation, _>>()?;
            entry.insert(d.clone(), next);
            centers.insert(Transition::new(s.clone(), l.clone(), d.clone()), end);
        }
        samples.insert(s, stored);
    }
    Ok(Chain { entry, centers, samples })
}

/// `ι T` over a finite basis: modes are tree states, one event per tree
/// transition with a guard pinned (up to the tolerance) to the values the
/// basis reaches along the tree, invariants the trajectories up to the
/// largest outgoing time, and constant observations `ω(s)`.
pub fn iota_hybrid(tree: &ObsSystem<TimedLabel>, basis: &[BasisEntry], cfg: &IntegratorConfig) -> Result<HybridSystem, ModelError> {
    let lts = tree.lts();
    if !is_tree(lts) {
        return Err(ModelError::invariant("ι is defined on trees only"));
    }
    if basis.is_empty() {
        return Err(ModelError::invariant("the subsystem basis is empty"));
    }
    let metric = match tree.space() {
        ObsSpace::RealVector { metric, .. } => *metric,
        ObsSpace::Discrete { .. } => return Err(ModelError::invariant("hybrid observations must be real vectors")),
    };
    for t in lts.transitions() {
        if t.label.time < crate::rational::zero() {
            return Err(ModelError::invariant(format!("{t} has a negative time")));
        }
    }
    let ch = chain(lts, basis, cfg)?;
    let subsystems: Vec<Subsystem> =
        basis.iter().map(|b| Subsystem { name: b.name.clone(), vars: b.vars.clone(), init: b.init.clone() }).collect();
    let mut modes = BTreeMap::new();
    for s in lts.states() {
        let ObsPoint::Vector(w) = tree.observe(s) else { unreachable!("real vector space") };
        modes.insert(
            s.clone(),
            Mode {
                flows: basis.iter().filter_map(|b| b.flows.get(s).map(|f| (b.name.clone(), f.clone()))).collect(),
                invariant: Invariant::Trajectory { samples: ch.samples[s].clone() },
                observation: w.iter().map(|x| Expr::Num(to_f64(x))).collect(),
            },
        );
    }
    let events = lts
        .transitions()
        .iter()
        .map(|t| {
            let ev = (t.src.clone(), t.label.action.clone(), t.dst.clone());
            Event {
                src: t.src.clone(),
                action: t.label.action.clone(),
                dst: t.dst.clone(),
                guard: Guard::Ball { center: flatten(&ch.centers[t]) },
                resets: basis.iter().filter_map(|b| b.resets.get(&ev).map(|r| (b.name.clone(), r.clone()))).collect(),
            }
        })
        .collect();
    Ok(HybridSystem::new(modes, subsystems, events, lts.initial(), metric)?.with_tree_words(tree_words(lts)))
}

/// `α_i` for each subsystem `i` of `t`: flows of the last mode of each run,
/// resets of the event each extension fires.
pub fn counit_entries(t: &HybridSystem, fragment: &HFragment) -> Vec<BasisEntry> {
    t.subsystems()
        .iter()
        .map(|sub| BasisEntry {
            name: sub.name.clone(),
            vars: sub.vars.clone(),
            init: sub.init.clone(),
            flows: fragment
                .runs
                .iter()
                .filter_map(|(id, r)| t.mode(&r.last().mode)?.flows.get(&sub.name).map(|f| (id.clone(), f.clone())))
                .collect(),
            resets: fragment
                .tree()
                .transitions()
                .iter()
                .filter_map(|tr| {
                    let (a, b) = (&fragment.runs[&tr.src].last().mode, &fragment.runs[&tr.dst].last().mode);
                    let e = t.event_index(a, &tr.label.action, b)?;
                    let r = t.events()[e].resets.get(&sub.name)?;
                    Some(((tr.src.clone(), tr.label.action.clone(), tr.dst.clone()), r.clone()))
                })
                .collect(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HybridCounitReport {
    pub morphism: HybridMorphismReport,
    /// Numerical failures of the guard, invariant and reset identities along
    /// the fragment runs.
    pub identities: Vec<String>,
    pub runs_checked: usize,
}

impl HybridCounitReport {
    pub fn is_ok(&self) -> bool {
        self.morphism.is_ok() && self.identities.is_empty()
    }
}

pub struct HybridCounit {
    pub fragment: HFragment,
    pub morphism: HybridMorphism,
    pub report: HybridCounitReport,
}

/// `ε_T : ι(H T) → T` on the fragment of `H T` along `words` up to `depth`,
/// with the basis made of the clock and the `α_i`.
pub fn hybrid_counit(t: &HybridSystem, depth: usize, words: &[crate::timed::TimedWord], cfg: &IntegratorConfig) -> Result<HybridCounit, ModelError> {
    let fragment = h_unfold(t, depth, words, cfg)?;
    let mut basis = vec![BasisTemplate::clock().on(fragment.tree())];
    basis.extend(counit_entries(t, &fragment));
    let names: BTreeMap<String, String> = t.subsystems().iter().map(|s| (s.name.clone(), s.name.clone())).collect();
    counit_with_basis(t, fragment, &basis, &names, cfg)
}

/// The counit with an explicit basis; `subsystem_map` sends each subsystem
/// of `t` to the name of its basis entry.
pub fn counit_with_basis(
    t: &HybridSystem,
    fragment: HFragment,
    basis: &[BasisEntry],
    subsystem_map: &BTreeMap<String, String>,
    cfg: &IntegratorConfig,
) -> Result<HybridCounit, ModelError> {
    for s in t.subsystems() {
        let name = subsystem_map.get(&s.name).ok_or_else(|| ModelError::invariant(format!("no basis entry chosen for `{}`", s.name)))?;
        if !basis.iter().any(|b| &b.name == name) {
            return Err(ModelError::invariant(format!("the basis lacks α_{} (entry `{name}`)", s.name)));
        }
    }
    let iota = iota_hybrid(&fragment.obs, basis, cfg)?;
    let mode_map = fragment.runs.iter().map(|(id, r)| (id.clone(), r.last().mode.clone())).collect();
    let morphism =
        HybridMorphism { source: iota, target: t.clone(), mode_map, subsystem_map: subsystem_map.clone(), epsilon: 0.0 };
    let words = tree_words(fragment.tree());
    let depth = words.iter().map(Vec::len).max().unwrap_or(0);
    let runs: Vec<HybridRun> = h_unfold(&morphism.source, depth, &words, cfg)?.runs.into_values().collect();
    let report = check_hybrid_morphism(&morphism, &runs, 4, 0, cfg);
    let identities = counit_identities(&morphism, &fragment, basis, cfg)?;
    Ok(HybridCounit {
        fragment,
        report: HybridCounitReport { morphism: report, identities, runs_checked: runs.len() },
        morphism,
    })
}

/// Along every fragment transition `π -(a,t)-> π'`: the basis trajectory read
/// through `f_X` is the trajectory of `t`, it satisfies the invariant of the
/// last mode, its end lies in the guard, and the reset gives `σ'`.
fn counit_identities(
    m: &HybridMorphism,
    fragment: &HFragment,
    basis: &[BasisEntry],
    cfg: &IntegratorConfig,
) -> Result<Vec<String>, ModelError> {
    let t = &m.target;
    let tol = cfg.tolerance;
    let ch = chain(fragment.tree(), basis, cfg)?;
    let names = t.flat_vars();
    let mut out = Vec::new();
    for tr in fragment.tree().transitions() {
        let (before, after) = (fragment.runs[&tr.src].last(), fragment.runs[&tr.dst].last());
        let via = m.map_valuation(&ch.entry[&tr.src]).map_err(ModelError::invariant)?;
        if sup_distance(&flatten(&via), &before.flat()) > tol {
            out.push(format!("{tr}: basis value on entry differs from the run"));
        }
        let traj = flow(t, &before.mode, &before.sigma, to_f64(&tr.label.time), cfg)?;
        if let Some(k) = traj.invariant_failure {
            out.push(format!("{tr}: invariant of `{}` fails at sample {k}", before.mode));
        }
        let stored = &ch.samples[&tr.src];
        for (k, s) in traj.samples.iter().enumerate().take(traj.samples.len() - 1) {
            let img = m.map_valuation(&super::morphism::unflatten(m.source.subsystems(), &stored[k])).map_err(ModelError::invariant)?;
            if sup_distance(&flatten(&img), &flatten(s)) > tol {
                out.push(format!("{tr}: trajectories differ at sample {k}"));
                break;
            }
        }
        let center = m.map_valuation(&ch.centers[tr]).map_err(ModelError::invariant)?;
        if sup_distance(&flatten(&center), &flatten(traj.end())) > tol {
            out.push(format!("{tr}: guard point differs from the end of the trajectory"));
        }
        let Some(e) = t.event_index(&before.mode, &tr.label.action, &after.mode) else {
            out.push(format!("{tr}: no event of the system"));
            continue;
        };
        if !guard_holds(t, e, &names, &flatten(&center), tol)? {
            out.push(format!("{tr}: guard point outside the guard"));
        }
        let reset = apply_resets(t, e, &center)?;
        if sup_distance(&flatten(&reset), &after.flat()) > tol {
            out.push(format!("{tr}: reset does not give the next valuation"));
        }
    }
    Ok(out)
}

/// `η_T` (tree state to its canonical run) and `ρ_T` (run to its last
/// mode) between a tree and the fragment of `H ι T` along the tree's words.
#[derive(Clone, Debug)]
pub struct HybridEtaRho {
    pub tree: ObsSystem<TimedLabel>,
    pub fragment: HFragment,
    pub eta: BTreeMap<StateId, StateId>,
    pub rho: BTreeMap<StateId, StateId>,
}

impl HybridEtaRho {
    /// Both maps preserve transitions and observations, and they are inverse.
    pub fn verify(&self) -> Result<(), String> {
        let frag = self.fragment.tree();
        for t in self.tree.lts().transitions() {
            if !frag.has_transition(&self.eta[&t.src], &t.label, &self.eta[&t.dst]) {
                return Err(format!("η does not preserve {t}"));
            }
        }
        for t in frag.transitions() {
            if !self.tree.lts().has_transition(&self.rho[&t.src], &t.label, &self.rho[&t.dst]) {
                return Err(format!("ρ does not preserve {t}"));
            }
        }
        for (s, r) in &self.eta {
            if self.fragment.obs.observe(r) != self.tree.observe(s) {
                return Err(format!("η changes the observation of `{s}`"));
            }
            if &self.rho[r] != s {
                return Err(format!("ρ(η({s})) = {}", self.rho[r]));
            }
        }
        for (r, s) in &self.rho {
            if &self.eta[s] != r {
                return Err(format!("η(ρ({r})) = {}", self.eta[s]));
            }
        }
        Ok(())
    }
}

pub fn hybrid_eta_rho(
    tree: &ObsSystem<TimedLabel>,
    basis: &[BasisEntry],
    depth: usize,
    cfg: &IntegratorConfig,
) -> Result<HybridEtaRho, ModelError> {
    let iota = iota_hybrid(tree, basis, cfg)?;
    let fragment = h_unfold(&iota, depth, iota.tree_words(), cfg)?;
    eta_rho_on(tree, basis, fragment, cfg)
}

/// `η` by the canonical valuations `σ_j = R(σ_{s_{j-1}}(t_j))`, matched
/// against the runs `fragment` found by moving.
pub(crate) fn eta_rho_on(
    tree: &ObsSystem<TimedLabel>,
    basis: &[BasisEntry],
    fragment: HFragment,
    cfg: &IntegratorConfig,
) -> Result<HybridEtaRho, ModelError> {
    let ch = chain(tree.lts(), basis, cfg)?;
    let mut eta = BTreeMap::new();
    for (s, run) in tree.lts().shortest_runs() {
        let mut canonical = HybridRun::root(HybridConfig::new(tree.lts().initial(), ch.entry[tree.lts().initial()].clone()));
        for step in &run.steps {
            canonical = canonical.extended(step.label.clone(), HybridConfig::new(step.dst.clone(), ch.entry[&step.dst].clone()));
        }
        let id = canonical.id();
        let found = fragment.runs.get(&id).ok_or_else(|| {
            ModelError::invariant(format!("no run of H ι T reaches `{s}` (the depth bound may be too small)"))
        })?;
        if let Some(k) = (0..found.configs.len()).find(|&k| !found.configs[k].approx_eq(&canonical.configs[k], cfg.tolerance)) {
            return Err(ModelError::invariant(format!("the run to `{s}` leaves the canonical valuation at step {k}")));
        }
        eta.insert(s, id);
    }
    let rho = fragment.runs.iter().map(|(id, r)| (id.clone(), r.last().mode.clone())).collect();
    Ok(HybridEtaRho { tree: tree.clone(), fragment, eta, rho })
}
