//! Partial probabilistic systems and their coreflection onto plain systems.
//!
//! A support triple carrying probability 0 is a real transition; an absent
//! triple is no transition. All arithmetic is exact.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::adjunction::{AdjunctionInstance, Comparison};
use crate::error::ModelError;
use crate::lts::{
    check_morphism, is_open, span_from_relation, strong_bisimilarity, Lts, LtsMorphism, MorphismReport, OpenMode,
    StateId, Symbol, Transition,
};
use crate::rational::{format_rational, Rational};

/// `(S, i, Supp, μ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbSystem {
    lts: Lts,
    mu: BTreeMap<Transition, Rational>,
}

impl ProbSystem {
    /// `mu` must be defined on exactly the transitions of `lts`, pointwise in
    /// `[0, 1]`, with `Σ_t μ(s, a, t) ≤ 1` for every `(s, a)`.
    pub fn new(lts: Lts, mu: BTreeMap<Transition, Rational>) -> Result<Self, ModelError> {
        for t in lts.transitions() {
            if !mu.contains_key(t) {
                return Err(ModelError::invariant(format!("support transition {t} has no probability")));
            }
        }
        let mut sums: BTreeMap<(&str, &Symbol), Rational> = BTreeMap::new();
        for (t, p) in &mu {
            if !lts.transitions().contains(t) {
                return Err(ModelError::invariant(format!("probability given for {t}, which is not in the support")));
            }
            if p.is_negative() || *p > Rational::one() {
                return Err(ModelError::invariant(format!("probability {} of {t} is outside [0, 1]", format_rational(p))));
            }
            *sums.entry((&t.src, &t.label)).or_insert_with(Rational::zero) += p;
        }
        if let Some(((s, a), total)) = sums.iter().find(|(_, total)| **total > Rational::one()) {
            return Err(ModelError::invariant(format!(
                "probabilities out of ({s}, {a}) sum to {}, more than 1",
                format_rational(total)
            )));
        }
        Ok(ProbSystem { lts, mu })
    }

    pub fn lts(&self) -> &Lts {
        &self.lts
    }

    pub fn mu(&self) -> &BTreeMap<Transition, Rational> {
        &self.mu
    }

    pub fn probability(&self, t: &Transition) -> Option<&Rational> {
        self.mu.get(t)
    }
}

#[derive(Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbTransitionRepr {
    src: StateId,
    label: Symbol,
    dst: StateId,
    #[serde(with = "crate::rational::serde_text")]
    p: Rational,
}

#[derive(Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbRepr {
    states: Vec<StateId>,
    initial: StateId,
    #[serde(default)]
    transitions: Vec<ProbTransitionRepr>,
}

/// Transitions carry their probability as `p`.
impl Serialize for ProbSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ProbRepr {
            states: self.lts.states().iter().cloned().collect(),
            initial: self.lts.initial().to_string(),
            transitions: self
                .mu
                .iter()
                .map(|(t, p)| ProbTransitionRepr { src: t.src.clone(), label: t.label.clone(), dst: t.dst.clone(), p: p.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for ProbSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = ProbRepr::deserialize(d)?;
        let n = r.states.len();
        let states: std::collections::BTreeSet<StateId> = r.states.into_iter().collect();
        if states.len() != n {
            return Err(crate::error::invalid("duplicate state id"));
        }
        let mut mu = BTreeMap::new();
        for t in r.transitions {
            let tr = Transition::new(t.src, t.label, t.dst);
            if mu.insert(tr.clone(), t.p).is_some() {
                return Err(crate::error::invalid(format!("transition {tr} is listed twice")));
            }
        }
        let lts = Lts::new(states, r.initial, mu.keys().cloned().collect()).map_err(crate::error::invalid)?;
        ProbSystem::new(lts, mu).map_err(crate::error::invalid)
    }
}

/// `F`: drop `μ`.
pub fn f_forget(t: &ProbSystem) -> Lts {
    t.lts.clone()
}

/// `ι`: the everywhere-0 distribution on `Δ`.
pub fn iota_zero(t: &Lts) -> ProbSystem {
    let mu = t.transitions().iter().map(|tr| (tr.clone(), Rational::zero())).collect();
    ProbSystem { lts: t.clone(), mu }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbMorphism {
    source: ProbSystem,
    target: ProbSystem,
    underlying: LtsMorphism,
}

impl ProbMorphism {
    pub fn new(source: ProbSystem, target: ProbSystem, map: BTreeMap<StateId, StateId>) -> Result<Self, ModelError> {
        let underlying = LtsMorphism::new(source.lts.clone(), target.lts.clone(), map)?;
        Ok(ProbMorphism { source, target, underlying })
    }

    pub fn identity(t: &ProbSystem) -> Self {
        ProbMorphism { source: t.clone(), target: t.clone(), underlying: LtsMorphism::identity(&t.lts) }
    }

    pub fn source(&self) -> &ProbSystem {
        &self.source
    }

    pub fn target(&self) -> &ProbSystem {
        &self.target
    }

    pub fn underlying(&self) -> &LtsMorphism {
        &self.underlying
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &ProbMorphism) -> Result<ProbMorphism, ModelError> {
        if self.target != other.source {
            return Err(ModelError::NotComposable("target of the first is not the source of the second".into()));
        }
        let underlying = self.underlying.then(&other.underlying)?;
        Ok(ProbMorphism { source: self.source.clone(), target: other.target.clone(), underlying })
    }
}

/// A support triple whose aggregated probability exceeds its image's.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SumViolation {
    pub transition: Transition,
    pub image: Transition,
    #[serde(with = "crate::rational::serde_text")]
    pub sum: Rational,
    #[serde(with = "crate::rational::serde_text")]
    pub bound: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbReport {
    pub underlying: MorphismReport,
    pub sums: Vec<SumViolation>,
}

impl ProbReport {
    pub fn is_valid(&self) -> bool {
        self.underlying.is_valid() && self.sums.is_empty()
    }
}

/// `Σ_{t' : f(t') = f(t)} μ(s, a, t') ≤ μ'(f(s), a, f(t))` for every support triple.
pub fn check_prob_morphism(f: &ProbMorphism) -> ProbReport {
    let underlying = check_morphism(&f.underlying);
    let mut sums = Vec::new();
    if underlying.is_valid() {
        for t in f.source.lts.transitions() {
            let image = Transition::new(f.underlying.apply(&t.src), t.label.clone(), f.underlying.apply(&t.dst));
            let sum: Rational = f
                .source
                .lts
                .successors(&t.src)
                .iter()
                .filter(|(a, t2)| *a == t.label && f.underlying.apply(t2) == image.dst)
                .map(|(a, t2)| &f.source.mu[&Transition::new(t.src.clone(), a.clone(), t2.clone())])
                .sum();
            let bound = f.target.mu[&image].clone();
            if sum > bound {
                sums.push(SumViolation { transition: t.clone(), image, sum, bound });
            }
        }
    }
    ProbReport { underlying, sums }
}

/// `T ← R → T'` with `R` carrying the everywhere-0 distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbSpan {
    pub apex: ProbSystem,
    pub left: ProbMorphism,
    pub right: ProbMorphism,
}

impl ProbSpan {
    /// Both legs are probabilistic morphisms with open underlyings.
    pub fn verify(&self) -> Result<(), String> {
        for (name, leg) in [("left", &self.left), ("right", &self.right)] {
            let report = check_prob_morphism(leg);
            if !report.is_valid() {
                return Err(format!("{name} leg is not a morphism: {report:?}"));
            }
            if !is_open(&leg.underlying, OpenMode::GraphBisim).map_err(|e| e.to_string())?.is_open() {
                return Err(format!("{name} leg is not open"));
            }
        }
        Ok(())
    }
}

pub fn prob_bisimilarity(t: &ProbSystem, u: &ProbSystem) -> Option<ProbSpan> {
    let r = strong_bisimilarity(&t.lts, &u.lts)?;
    let span = span_from_relation(&t.lts, &u.lts, &r).expect("greatest bisimulation is a bisimulation");
    let apex = iota_zero(&span.apex);
    let left = ProbMorphism { source: apex.clone(), target: t.clone(), underlying: span.left };
    let right = ProbMorphism { source: apex.clone(), target: u.clone(), underlying: span.right };
    Some(ProbSpan { apex, left, right })
}

/// The probabilistic coreflection: `η` and `ε` are identities on states.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProbInstance;

pub fn prob_unit_counit() -> ProbInstance {
    ProbInstance
}

fn compare_maps(a: &LtsMorphism, b: &LtsMorphism) -> Comparison {
    if a.source() != b.source() {
        return Comparison::differs("source", "morphisms have different sources");
    }
    if a.target() != b.target() {
        return Comparison::differs("target", "morphisms have different targets");
    }
    match a.map().iter().find(|(s, t)| b.apply(s) != t.as_str()) {
        Some((s, t)) => Comparison::differs(s.clone(), format!("`{s}` goes to `{t}` and to `{}`", b.apply(s))),
        None => Comparison::Equal,
    }
}

impl AdjunctionInstance for ProbInstance {
    type Obj = Lts;
    type RichObj = ProbSystem;
    type Mor = LtsMorphism;
    type RichMor = ProbMorphism;

    fn name(&self) -> String {
        "prob".into()
    }

    fn fragment(&self) -> String {
        "exact".into()
    }

    fn apply_f(&self, x: &ProbSystem) -> Result<Lts, String> {
        Ok(f_forget(x))
    }

    fn apply_f_mor(&self, g: &ProbMorphism) -> Result<LtsMorphism, String> {
        Ok(g.underlying.clone())
    }

    fn apply_iota(&self, x: &Lts) -> Result<ProbSystem, String> {
        Ok(iota_zero(x))
    }

    fn apply_iota_mor(&self, f: &LtsMorphism) -> Result<ProbMorphism, String> {
        ProbMorphism::new(iota_zero(f.source()), iota_zero(f.target()), f.map().clone()).map_err(|e| e.to_string())
    }

    fn unit_at(&self, x: &Lts) -> Result<LtsMorphism, String> {
        let fix = f_forget(&iota_zero(x));
        let map = x.states().iter().map(|s| (s.clone(), s.clone())).collect();
        LtsMorphism::new(x.clone(), fix, map).map_err(|e| e.to_string())
    }

    fn counit_at(&self, x: &ProbSystem) -> Result<ProbMorphism, String> {
        let map = x.lts.states().iter().map(|s| (s.clone(), s.clone())).collect();
        ProbMorphism::new(iota_zero(&f_forget(x)), x.clone(), map).map_err(|e| e.to_string())
    }

    fn identity(&self, x: &Lts) -> Result<LtsMorphism, String> {
        Ok(LtsMorphism::identity(x))
    }

    fn rich_identity(&self, x: &ProbSystem) -> Result<ProbMorphism, String> {
        Ok(ProbMorphism::identity(x))
    }

    fn compose(&self, first: &LtsMorphism, second: &LtsMorphism) -> Result<LtsMorphism, String> {
        first.then(second).map_err(|e| e.to_string())
    }

    fn rich_compose(&self, first: &ProbMorphism, second: &ProbMorphism) -> Result<ProbMorphism, String> {
        first.then(second).map_err(|e| e.to_string())
    }

    fn mor_eq(&self, a: &LtsMorphism, b: &LtsMorphism) -> Comparison {
        compare_maps(a, b)
    }

    fn rich_mor_eq(&self, a: &ProbMorphism, b: &ProbMorphism) -> Comparison {
        if a.source != b.source || a.target != b.target {
            return Comparison::differs("endpoints", "morphisms have different endpoints");
        }
        compare_maps(&a.underlying, &b.underlying)
    }

    fn is_iso(&self, m: &LtsMorphism) -> Comparison {
        if m.is_isomorphism() {
            Comparison::Equal
        } else {
            Comparison::differs("unit", "not a bijection on states and transitions")
        }
    }

    fn rich_mor_valid(&self, m: &ProbMorphism) -> Comparison {
        let report = check_prob_morphism(m);
        if let Some(v) = report.underlying.violations.first() {
            return Comparison::differs("morphism", format!("{v:?}"));
        }
        match report.sums.first() {
            Some(v) => Comparison::differs(
                v.transition.to_string(),
                format!("sum {} exceeds {}", format_rational(&v.sum), format_rational(&v.bound)),
            ),
            None => Comparison::Equal,
        }
    }
}
