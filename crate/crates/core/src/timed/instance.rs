use std::collections::{BTreeMap, BTreeSet};

use super::iota::{counit_maps, eta_rho};
use super::tts::timed_map_violations;
use super::{iota_timed, Clock, Edge, GFragment, GTree, Interval, IotaTts, Semantics, TimePolicy, TimedLabel, TimedSystem, Tts, TtsMorphism};
use crate::adjunction::{AdjunctionInstance, Comparison};
use crate::error::ModelError;
use crate::lts::{Lts, LtsMorphism, StateId};
use crate::rational::{format_rational, Rational};

/// An object of the rich category: a timed system given by named clocks, or
/// the image `ι T` of a timed tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TimedObject {
    Tts(Tts),
    Iota(IotaTts),
}

macro_rules! dispatch {
    ($self:expr, $x:ident => $e:expr) => {
        match $self {
            TimedObject::Tts($x) => $e,
            TimedObject::Iota($x) => $e,
        }
    };
}

impl TimedSystem for TimedObject {
    fn initial_state(&self) -> &str {
        dispatch!(self, x => x.initial_state())
    }
    fn clocks(&self) -> Result<Vec<Clock>, ModelError> {
        dispatch!(self, x => x.clocks())
    }
    fn edges_from(&self, s: &str) -> Vec<Edge> {
        dispatch!(self, x => x.edges_from(s))
    }
    fn edge(&self, id: usize) -> Edge {
        dispatch!(self, x => x.edge(id))
    }
    fn edge_count(&self) -> usize {
        dispatch!(self, x => x.edge_count())
    }
    fn edge_src(&self, id: usize) -> &str {
        dispatch!(self, x => x.edge_src(id))
    }
    fn guard(&self, edge: usize, c: &Clock) -> Interval {
        dispatch!(self, x => x.guard(edge, c))
    }
    fn resets(&self, edge: usize, c: &Clock) -> bool {
        dispatch!(self, x => x.resets(edge, c))
    }
}

impl TimedObject {
    fn states(&self) -> BTreeSet<StateId> {
        match self {
            TimedObject::Tts(t) => t.states().clone(),
            TimedObject::Iota(i) => i.tree().states().clone(),
        }
    }
}

/// `(f, g)` with `f` on states and `g` from target clocks to source clocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedMorphism {
    pub source: TimedObject,
    pub target: TimedObject,
    pub f: BTreeMap<StateId, StateId>,
    pub g: BTreeMap<Clock, Clock>,
}

impl From<&TtsMorphism> for TimedMorphism {
    fn from(m: &TtsMorphism) -> Self {
        TimedMorphism {
            source: TimedObject::Tts(m.source().clone()),
            target: TimedObject::Tts(m.target().clone()),
            f: m.state_map().clone(),
            g: m.clock_map_as_clocks(),
        }
    }
}

/// The coreflection between timed trees and timed systems, checked on finite
/// fragments: `F` materialises runs of length at most `depth` whose delays lie
/// in `grid` (a fixed grid, so `F` of a morphism stays inside the fragment);
/// on `ι`-images, whose run trees are finite, `F` is exact.
#[derive(Clone, Debug)]
pub struct TimedInstance {
    pub depth: usize,
    pub grid: Vec<Rational>,
}

impl TimedInstance {
    pub fn new(depth: usize, grid: Vec<Rational>) -> Self {
        TimedInstance { depth, grid }
    }

    pub fn fragment_of(&self, x: &TimedObject) -> Result<GFragment, ModelError> {
        match x {
            TimedObject::Tts(t) => Ok(GTree::new(t)?.materialize(self.depth, &TimePolicy::Grid { times: self.grid.clone() })),
            TimedObject::Iota(i) => GTree::new(i)?.materialize_exact(i.tree().states().len()),
        }
    }
}

fn first_difference(a: &BTreeMap<StateId, StateId>, b: &BTreeMap<StateId, StateId>) -> Option<(String, String)> {
    a.iter()
        .find(|(k, v)| b.get(*k) != Some(v))
        .map(|(k, v)| (k.clone(), format!("{v} vs {:?}", b.get(k))))
        .or_else(|| b.keys().find(|k| !a.contains_key(*k)).map(|k| (k.clone(), "missing on the left".into())))
}

impl AdjunctionInstance for TimedInstance {
    type Obj = Lts<TimedLabel>;
    type RichObj = TimedObject;
    type Mor = LtsMorphism<TimedLabel>;
    type RichMor = TimedMorphism;

    fn name(&self) -> String {
        "timed".into()
    }

    fn fragment(&self) -> String {
        let grid: Vec<String> = self.grid.iter().map(format_rational).collect();
        format!("runs of length <= {} with delays in {{{}}}; run trees of ι-images in full", self.depth, grid.join(","))
    }

    fn apply_f(&self, x: &TimedObject) -> Result<Lts<TimedLabel>, String> {
        Ok(self.fragment_of(x).map_err(|e| e.to_string())?.lts)
    }

    /// `G(f, g)` sends `(s_j, ν_j)_j` to `(f s_j, ν_j ∘ g)_j`.
    fn apply_f_mor(&self, m: &TimedMorphism) -> Result<LtsMorphism<TimedLabel>, String> {
        let err = |e: ModelError| e.to_string();
        let (fs, ft) = (self.fragment_of(&m.source).map_err(err)?, self.fragment_of(&m.target).map_err(err)?);
        let (ss, st) = (Semantics::new(&m.source).map_err(err)?, Semantics::new(&m.target).map_err(err)?);
        let index: Vec<usize> = st
            .clocks()
            .iter()
            .map(|c| {
                let gc = m.g.get(c).ok_or_else(|| format!("clock map has no image for {c}"))?;
                ss.clock_index(gc).ok_or_else(|| format!("{c} maps to unknown clock {gc}"))
            })
            .collect::<Result<_, String>>()?;
        let mut map = BTreeMap::new();
        for (id, run) in &fs.runs {
            let mut image = run.clone();
            for cfg in &mut image.configs {
                cfg.state = m.f.get(&cfg.state).cloned().ok_or_else(|| format!("no image for state {}", cfg.state))?;
                cfg.nu = index.iter().map(|&i| cfg.nu[i].clone()).collect();
            }
            let img = ft.id_of(&image).ok_or_else(|| format!("image of run `{id}` is not in the target fragment"))?;
            map.insert(id.clone(), img.clone());
        }
        LtsMorphism::new(fs.lts, ft.lts, map).map_err(err)
    }

    fn apply_iota(&self, x: &Lts<TimedLabel>) -> Result<TimedObject, String> {
        Ok(TimedObject::Iota(iota_timed(x).map_err(|e| e.to_string())?))
    }

    /// `ι(f)` keeps `f` on states and sends a clock `U'` to `{δ | f(δ) ∈ U'}`.
    fn apply_iota_mor(&self, m: &LtsMorphism<TimedLabel>) -> Result<TimedMorphism, String> {
        let (src, tgt) = (iota_timed(m.source()).map_err(|e| e.to_string())?, iota_timed(m.target()).map_err(|e| e.to_string())?);
        let image: Vec<usize> = src
            .tree_edges()
            .iter()
            .map(|e| {
                let fe = crate::lts::Transition::new(m.apply(&e.src), e.label.clone(), m.apply(&e.dst));
                tgt.edge_index(&fe).ok_or_else(|| format!("{e} has no image transition"))
            })
            .collect::<Result<_, String>>()?;
        let g = tgt
            .clocks()
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|c| {
                let Clock::Set(u) = &c else { unreachable!("ι clocks are sets") };
                let pre = (0..image.len()).filter(|&d| u.contains(&image[d])).collect();
                (c, Clock::Set(pre))
            })
            .collect();
        Ok(TimedMorphism { source: TimedObject::Iota(src), target: TimedObject::Iota(tgt), f: m.map().clone(), g })
    }

    fn unit_at(&self, x: &Lts<TimedLabel>) -> Result<LtsMorphism<TimedLabel>, String> {
        Ok(eta_rho(x).map_err(|e| e.to_string())?.eta)
    }

    fn counit_at(&self, x: &TimedObject) -> Result<TimedMorphism, String> {
        let fragment = self.fragment_of(x).map_err(|e| e.to_string())?;
        let (iota, f, g) = counit_maps(x, &fragment).map_err(|e| e.to_string())?;
        Ok(TimedMorphism { source: TimedObject::Iota(iota), target: x.clone(), f, g })
    }

    fn identity(&self, x: &Lts<TimedLabel>) -> Result<LtsMorphism<TimedLabel>, String> {
        Ok(LtsMorphism::identity(x))
    }

    fn rich_identity(&self, x: &TimedObject) -> Result<TimedMorphism, String> {
        let g = x.clocks().map_err(|e| e.to_string())?.into_iter().map(|c| (c.clone(), c)).collect();
        let f = x.states().into_iter().map(|s| (s.clone(), s)).collect();
        Ok(TimedMorphism { source: x.clone(), target: x.clone(), f, g })
    }

    fn compose(&self, first: &LtsMorphism<TimedLabel>, second: &LtsMorphism<TimedLabel>) -> Result<LtsMorphism<TimedLabel>, String> {
        first.then(second).map_err(|e| e.to_string())
    }

    /// `(f2, g2) ∘ (f1, g1) = (f2 ∘ f1, g1 ∘ g2)`.
    fn rich_compose(&self, first: &TimedMorphism, second: &TimedMorphism) -> Result<TimedMorphism, String> {
        if first.target != second.source {
            return Err("morphisms do not compose: middle objects differ".into());
        }
        let f = first
            .f
            .iter()
            .map(|(s, m)| Ok((s.clone(), second.f.get(m).cloned().ok_or_else(|| format!("no image for {m}"))?)))
            .collect::<Result<_, String>>()?;
        let g = second
            .g
            .iter()
            .map(|(c, m)| Ok((c.clone(), first.g.get(m).cloned().ok_or_else(|| format!("no image for clock {m}"))?)))
            .collect::<Result<_, String>>()?;
        Ok(TimedMorphism { source: first.source.clone(), target: second.target.clone(), f, g })
    }

    fn mor_eq(&self, a: &LtsMorphism<TimedLabel>, b: &LtsMorphism<TimedLabel>) -> Comparison {
        if a.source() != b.source() || a.target() != b.target() {
            return Comparison::differs("endpoints", "source or target differ");
        }
        match first_difference(a.map(), b.map()) {
            None => Comparison::Equal,
            Some((at, detail)) => Comparison::differs(at, detail),
        }
    }

    fn rich_mor_eq(&self, a: &TimedMorphism, b: &TimedMorphism) -> Comparison {
        if a.source != b.source || a.target != b.target {
            return Comparison::differs("endpoints", "source or target differ");
        }
        if let Some((at, detail)) = first_difference(&a.f, &b.f) {
            return Comparison::differs(at, detail);
        }
        match a.g.iter().find(|(c, v)| b.g.get(*c) != Some(v)) {
            Some((c, v)) => Comparison::differs(format!("clock {c}"), format!("{v} vs {:?}", b.g.get(c))),
            None if a.g.len() != b.g.len() => Comparison::differs("clock map", "domains differ"),
            None => Comparison::Equal,
        }
    }

    fn is_iso(&self, m: &LtsMorphism<TimedLabel>) -> Comparison {
        if m.is_isomorphism() {
            Comparison::Equal
        } else {
            Comparison::differs("unit", "not an isomorphism")
        }
    }

    fn rich_mor_valid(&self, m: &TimedMorphism) -> Comparison {
        match timed_map_violations(&m.source, &m.target, &m.f, &m.g) {
            Err(e) => Comparison::inconclusive(e.to_string()),
            Ok(v) if v.is_empty() => Comparison::Equal,
            Ok(v) => Comparison::differs("morphism", v[0].to_string()),
        }
    }
}
