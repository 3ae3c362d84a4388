use std::collections::{BTreeMap, BTreeSet};

use super::iota::{counit_entries, eta_rho_on, iota_hybrid, BasisEntry, BasisTemplate};
use super::morphism::{check_hybrid_morphism, compose_hybrid, HybridMorphism};
use super::numerics::IntegratorConfig;
use super::system::HybridSystem;
use super::unfold::{h_unfold, HFragment, HybridRun};
use crate::adjunction::{AdjunctionInstance, Comparison};
use crate::error::ModelError;
use crate::lts::{Lts, StateId};
use crate::observations::{tightest_bound, ObsMorphism, ObsSystem};
use crate::timed::{TimedLabel, TimedWord};

/// The coreflection between observed timed trees and hybrid systems, checked
/// on fragments: `F` follows `words` (plus the tree words of `ι`-images) up to
/// `depth`, and `ι` uses the subsystem kinds in `templates`.
///
/// Counits need every subsystem of the system, read along its runs, to have
/// the content of some template; otherwise their source is not `ι F T` and
/// the laws involving them come out inconclusive.
#[derive(Clone, Debug)]
pub struct HybridInstance {
    pub depth: usize,
    pub words: Vec<TimedWord>,
    pub templates: Vec<BasisTemplate>,
    pub cfg: IntegratorConfig,
}

impl HybridInstance {
    pub fn new(depth: usize, words: Vec<TimedWord>, templates: Vec<BasisTemplate>, cfg: IntegratorConfig) -> Self {
        HybridInstance { depth, words, templates, cfg }
    }

    pub fn fragment_of(&self, x: &HybridSystem) -> Result<HFragment, ModelError> {
        let words: BTreeSet<TimedWord> = self.words.iter().chain(x.tree_words()).cloned().collect();
        let words: Vec<TimedWord> = words.into_iter().collect();
        let depth = self.depth.max(x.tree_words().iter().map(Vec::len).max().unwrap_or(0));
        h_unfold(x, depth, &words, &self.cfg)
    }

    pub fn basis(&self, tree: &Lts<TimedLabel>) -> Vec<BasisEntry> {
        self.templates.iter().map(|t| t.on(tree)).collect()
    }

    fn iota(&self, x: &ObsSystem<TimedLabel>) -> Result<HybridSystem, ModelError> {
        iota_hybrid(x, &self.basis(x.lts()), &self.cfg)
    }
}

fn err(e: ModelError) -> String {
    e.to_string()
}

/// `b` read through `f`: on `s` the content of `b` at `f(s)`.
fn pullback(b: &BasisEntry, f: &ObsMorphism<TimedLabel>) -> BasisEntry {
    let m = f.underlying();
    BasisEntry {
        name: b.name.clone(),
        vars: b.vars.clone(),
        init: b.init.clone(),
        flows: f
            .source()
            .lts()
            .states()
            .iter()
            .filter_map(|s| b.flows.get(m.apply(s)).map(|e| (s.clone(), e.clone())))
            .collect(),
        resets: f
            .source()
            .lts()
            .transitions()
            .iter()
            .filter_map(|t| {
                let img = (m.apply(&t.src).to_string(), t.label.action.clone(), m.apply(&t.dst).to_string());
                b.resets.get(&img).map(|r| ((t.src.clone(), t.label.action.clone(), t.dst.clone()), r.clone()))
            })
            .collect(),
    }
}

fn map_difference(a: &BTreeMap<StateId, StateId>, b: &BTreeMap<StateId, StateId>, what: &str) -> Option<Comparison> {
    if a == b {
        return None;
    }
    let at = a.iter().find(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k.clone()).unwrap_or_else(|| what.to_string());
    Some(Comparison::differs(at, format!("{what} differ")))
}

impl AdjunctionInstance for HybridInstance {
    type Obj = ObsSystem<TimedLabel>;
    type RichObj = HybridSystem;
    type Mor = ObsMorphism<TimedLabel>;
    type RichMor = HybridMorphism;

    fn name(&self) -> String {
        "hybrid".into()
    }

    fn fragment(&self) -> String {
        let t: Vec<&str> = self.templates.iter().map(|t| t.name.as_str()).collect();
        format!(
            "runs of length <= {} along {} words and the tree words of ι-images; basis [{}]; step {}, tolerance {}",
            self.depth,
            self.words.len(),
            t.join(","),
            self.cfg.step,
            self.cfg.tolerance
        )
    }

    fn apply_f(&self, x: &HybridSystem) -> Result<ObsSystem<TimedLabel>, String> {
        Ok(self.fragment_of(x).map_err(err)?.obs)
    }

    /// `F(f)` sends a run to its image under `f_M` and `f_X`.
    fn apply_f_mor(&self, g: &HybridMorphism) -> Result<ObsMorphism<TimedLabel>, String> {
        let fs = self.fragment_of(&g.source).map_err(err)?;
        let ft = self.fragment_of(&g.target).map_err(err)?;
        let mut map = BTreeMap::new();
        for (id, run) in &fs.runs {
            let image = g.map_run(run)?;
            let found = ft.runs.get(&image.id()).ok_or_else(|| format!("image of run `{id}` is not in the target fragment"))?;
            if !found.configs.iter().zip(&image.configs).all(|(a, b)| a.approx_eq(b, self.cfg.tolerance)) {
                return Err(format!("image of run `{id}` leaves the target run numerically"));
            }
            map.insert(id.clone(), image.id());
        }
        ObsMorphism::new(fs.obs, ft.obs, map).map_err(err)
    }

    fn apply_iota(&self, x: &ObsSystem<TimedLabel>) -> Result<HybridSystem, String> {
        self.iota(x).map_err(err)
    }

    /// `ι(f)` is `f` on modes; a subsystem of `ι U` pulls back along `f` to
    /// the subsystem of `ι T` with the same content.
    fn apply_iota_mor(&self, f: &ObsMorphism<TimedLabel>) -> Result<HybridMorphism, String> {
        let src_basis = self.basis(f.source().lts());
        let subsystem_map = self
            .basis(f.target().lts())
            .iter()
            .map(|b| {
                let pb = pullback(b, f);
                src_basis
                    .iter()
                    .find(|s| s.same_content(&pb, f.source().lts()))
                    .map(|s| (b.name.clone(), s.name.clone()))
                    .ok_or_else(|| format!("the pullback of `{}` is not in the basis", b.name))
            })
            .collect::<Result<_, String>>()?;
        Ok(HybridMorphism {
            source: self.iota(f.source()).map_err(err)?,
            target: self.iota(f.target()).map_err(err)?,
            mode_map: f.underlying().map().clone(),
            subsystem_map,
            epsilon: tightest_bound(f).to_f64(),
        })
    }

    fn unit_at(&self, x: &ObsSystem<TimedLabel>) -> Result<ObsMorphism<TimedLabel>, String> {
        let basis = self.basis(x.lts());
        let fragment = self.fragment_of(&iota_hybrid(x, &basis, &self.cfg).map_err(err)?).map_err(err)?;
        let er = eta_rho_on(x, &basis, fragment, &self.cfg).map_err(err)?;
        ObsMorphism::new(x.clone(), er.fragment.obs, er.eta).map_err(err)
    }

    fn counit_at(&self, x: &HybridSystem) -> Result<HybridMorphism, String> {
        let fragment = self.fragment_of(x).map_err(err)?;
        let tree = fragment.tree();
        let mut basis = self.basis(tree);
        let alphas = counit_entries(x, &fragment);
        let mut subsystem_map = BTreeMap::new();
        for a in alphas {
            let name = match basis.iter().find(|b| b.same_content(&a, tree)) {
                Some(b) => b.name.clone(),
                None => {
                    if basis.iter().any(|b| b.name == a.name) {
                        return Err(format!("α_{} clashes with a template name", a.name));
                    }
                    basis.push(a.clone());
                    a.name.clone()
                }
            };
            subsystem_map.insert(a.name, name);
        }
        let mode_map = fragment.runs.iter().map(|(id, r)| (id.clone(), r.last().mode.clone())).collect();
        Ok(HybridMorphism {
            source: iota_hybrid(&fragment.obs, &basis, &self.cfg).map_err(err)?,
            target: x.clone(),
            mode_map,
            subsystem_map,
            epsilon: 0.0,
        })
    }

    fn identity(&self, x: &ObsSystem<TimedLabel>) -> Result<ObsMorphism<TimedLabel>, String> {
        Ok(ObsMorphism::identity(x))
    }

    fn rich_identity(&self, x: &HybridSystem) -> Result<HybridMorphism, String> {
        Ok(HybridMorphism::identity(x))
    }

    fn compose(&self, first: &ObsMorphism<TimedLabel>, second: &ObsMorphism<TimedLabel>) -> Result<ObsMorphism<TimedLabel>, String> {
        let u = first.underlying().then(second.underlying()).map_err(err)?;
        ObsMorphism::new(first.source().clone(), second.target().clone(), u.map().clone()).map_err(err)
    }

    fn rich_compose(&self, first: &HybridMorphism, second: &HybridMorphism) -> Result<HybridMorphism, String> {
        compose_hybrid(first, second)
    }

    fn mor_eq(&self, a: &ObsMorphism<TimedLabel>, b: &ObsMorphism<TimedLabel>) -> Comparison {
        if a.source() != b.source() || a.target() != b.target() {
            return Comparison::differs("endpoints", "source or target differ");
        }
        map_difference(a.underlying().map(), b.underlying().map(), "state maps").unwrap_or(Comparison::Equal)
    }

    /// Equal endpoints and maps; the bounds are not compared.
    fn rich_mor_eq(&self, a: &HybridMorphism, b: &HybridMorphism) -> Comparison {
        if a.source != b.source || a.target != b.target {
            return Comparison::differs("endpoints", "source or target differ");
        }
        map_difference(&a.mode_map, &b.mode_map, "mode maps")
            .or_else(|| map_difference(&a.subsystem_map, &b.subsystem_map, "subsystem maps"))
            .unwrap_or(Comparison::Equal)
    }

    fn is_iso(&self, m: &ObsMorphism<TimedLabel>) -> Comparison {
        if !m.underlying().is_isomorphism() {
            return Comparison::differs("unit", "not an isomorphism");
        }
        match m.source().lts().states().iter().find(|s| m.source().observe(s) != m.target().observe(m.underlying().apply(s))) {
            Some(s) => Comparison::differs(s.clone(), "observation changes"),
            None => Comparison::Equal,
        }
    }

    fn rich_mor_valid(&self, m: &HybridMorphism) -> Comparison {
        let runs: Vec<HybridRun> = match self.fragment_of(&m.source) {
            Ok(f) => f.runs.into_values().collect(),
            Err(e) => return Comparison::inconclusive(e.to_string()),
        };
        let report = check_hybrid_morphism(m, &runs, 8, 0, &self.cfg);
        match report.first_failure() {
            None => Comparison::Equal,
            Some(c) => Comparison::differs(c.condition.clone(), format!("{:?}", c.status)),
        }
    }
}
