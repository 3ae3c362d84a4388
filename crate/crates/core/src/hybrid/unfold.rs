use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::numerics::{moves, observe, HybridConfig, IntegratorConfig};
use super::system::HybridSystem;
use crate::error::ModelError;
use crate::lts::{Lts, StateId, Transition};
use crate::observations::{ObsPoint, ObsSpace, ObsSystem};
use crate::rational::{rational_from_f64, to_f64, Rational};
use crate::timed::{TimedLabel, TimedWord};

/// `(m_0, σ_0) -(a_1,t_1)-> … -(a_k,t_k)-> (m_k, σ_k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HybridRun {
    pub configs: Vec<HybridConfig>,
    pub labels: Vec<TimedLabel>,
}

impl HybridRun {
    pub fn root(cfg: HybridConfig) -> Self {
        HybridRun { configs: vec![cfg], labels: Vec::new() }
    }

    pub fn last(&self) -> &HybridConfig {
        self.configs.last().expect("runs are nonempty")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn extended(&self, label: TimedLabel, cfg: HybridConfig) -> Self {
        let mut r = self.clone();
        r.labels.push(label);
        r.configs.push(cfg);
        r
    }

    /// `m_0 -(a_1,t_1)-> m_1 …`, which identifies the run: moves are
    /// deterministic per event once action and time are fixed.
    pub fn id(&self) -> StateId {
        let mut s = self.configs[0].mode.clone();
        for (l, c) in self.labels.iter().zip(&self.configs[1..]) {
            s = format!("{s} -{l}-> {}", c.mode);
        }
        s
    }

    /// Replays every step with [`moves`].
    pub fn validate(&self, sys: &HybridSystem, cfg: &IntegratorConfig) -> Result<(), String> {
        let first = &self.configs[0];
        if !first.approx_eq(&HybridConfig::initial(sys), cfg.tolerance) {
            return Err("the run does not start in the initial configuration".into());
        }
        for (k, (l, w)) in self.labels.iter().zip(self.configs.windows(2)).enumerate() {
            let succ = moves(sys, &w[0], &l.action, to_f64(&l.time), cfg).map_err(|e| e.to_string())?;
            if !succ.iter().any(|s| s.config.approx_eq(&w[1], cfg.tolerance)) {
                return Err(format!("step {} by {l} into `{}` is not a move", k + 1, w[1].mode));
            }
        }
        Ok(())
    }
}

/// Successor cache keyed by mode, valuation bits and label.
type MoveMemo = RefCell<BTreeMap<(String, Vec<u64>, TimedLabel), Vec<HybridConfig>>>;

/// `K T` as a lazy system with observations: states are configurations,
/// `(a, t)`-successors come from [`moves`], memoised.
pub struct KSystem<'a> {
    sys: &'a HybridSystem,
    cfg: IntegratorConfig,
    memo: MoveMemo,
}

pub fn k_translate(sys: &HybridSystem, cfg: IntegratorConfig) -> KSystem<'_> {
    KSystem { sys, cfg, memo: RefCell::new(BTreeMap::new()) }
}

impl<'a> KSystem<'a> {
    pub fn system(&self) -> &'a HybridSystem {
        self.sys
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn initial(&self) -> HybridConfig {
        HybridConfig::initial(self.sys)
    }

    pub fn successors(&self, from: &HybridConfig, label: &TimedLabel) -> Result<Vec<HybridConfig>, ModelError> {
        if label.time < Rational::from_integer(0.into()) {
            return Err(ModelError::invariant(format!("{label} has a negative time")));
        }
        let key = (from.mode.clone(), from.flat().iter().map(|x| x.to_bits()).collect(), label.clone());
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let out: Vec<HybridConfig> =
            moves(self.sys, from, &label.action, to_f64(&label.time), &self.cfg)?.into_iter().map(|s| s.config).collect();
        self.memo.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    pub fn observe(&self, cfg: &HybridConfig) -> Result<Vec<f64>, ModelError> {
        observe(self.sys, cfg)
    }
}

/// A finite piece of `H T = V(K T)`: runs as states, each observed at its
/// last configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct HFragment {
    pub obs: ObsSystem<TimedLabel>,
    pub runs: BTreeMap<StateId, HybridRun>,
    pub observations: BTreeMap<StateId, Vec<f64>>,
}

impl HFragment {
    pub fn tree(&self) -> &Lts<TimedLabel> {
        self.obs.lts()
    }
}

pub(crate) fn obs_point(v: &[f64]) -> Result<ObsPoint, ModelError> {
    v.iter()
        .map(|x| rational_from_f64(*x).ok_or_else(|| ModelError::Evaluation(format!("observation {x} is not finite"))))
        .collect::<Result<Vec<_>, _>>()
        .map(ObsPoint::Vector)
}

/// The runs reading prefixes (of length at most `depth`) of `words`.
pub fn h_unfold(sys: &HybridSystem, depth: usize, words: &[TimedWord], cfg: &IntegratorConfig) -> Result<HFragment, ModelError> {
    let k = k_translate(sys, *cfg);
    let prefixes: BTreeSet<&[TimedLabel]> =
        words.iter().flat_map(|w| (1..=w.len().min(depth)).map(move |n| &w[..n])).collect();
    let root = HybridRun::root(k.initial());
    let mut runs = BTreeMap::from([(root.id(), root.clone())]);
    let mut transitions = BTreeSet::new();
    let mut layer = vec![root];
    for level in 0..depth {
        let mut next = Vec::new();
        for run in &layer {
            let labels: BTreeSet<&TimedLabel> = prefixes
                .iter()
                .filter(|p| p.len() == level + 1 && p[..level] == run.labels[..])
                .map(|p| &p[level])
                .collect();
            for l in labels {
                for c in k.successors(run.last(), l)? {
                    let child = run.extended(l.clone(), c);
                    transitions.insert(Transition::new(run.id(), l.clone(), child.id()));
                    runs.insert(child.id(), child.clone());
                    next.push(child);
                }
            }
        }
        layer = next;
    }
    let mut observations = BTreeMap::new();
    let mut omega = BTreeMap::new();
    for (id, r) in &runs {
        let o = k.observe(r.last())?;
        omega.insert(id.clone(), obs_point(&o)?);
        observations.insert(id.clone(), o);
    }
    let lts = Lts::new(runs.keys().cloned().collect(), HybridRun::root(k.initial()).id(), transitions)?;
    let space = ObsSpace::RealVector { dim: sys.obs_dim(), metric: sys.metric() };
    Ok(HFragment { obs: ObsSystem::new(lts, space, omega)?, runs, observations })
}

/// Labels along every maximal path of a tree.
pub fn tree_words(tree: &Lts<TimedLabel>) -> Vec<TimedWord> {
    let mut out = Vec::new();
    let mut stack = vec![(tree.initial().to_string(), Vec::new())];
    while let Some((s, w)) = stack.pop() {
        let succ = tree.successors(&s);
        if succ.is_empty() {
            out.push(w);
            continue;
        }
        for (l, d) in succ {
            let mut w2 = w.clone();
            w2.push(l.clone());
            stack.push((d.clone(), w2));
        }
    }
    out.sort();
    out
}
