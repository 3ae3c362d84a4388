//! Systems with observations in a pseudometric space, bounded morphisms, and
//! ε-approximate bisimulation.
//!
//! Distances are kept exact: a [`Distance`] stores its square, so Euclidean
//! distances between rational points compare exactly against a rational ε.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::lts::{
    check_morphism, check_transfer, is_open, is_open_away_from, naive_fixpoint, pair_state_id, pair_system,
    projections, Action, BisimFailure, BisimRelation, Lts, LtsMorphism, OpenMode, OpenVerdict, StateId, Symbol, Union,
};
use crate::rational::{exact_sqrt, format_rational, to_f64, Rational};
use crate::unfolding::{unfold, RunTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sup,
    Euclidean,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObsSpace {
    RealVector { dim: usize, metric: Metric },
    /// Distance 1 between distinct labels.
    Discrete { labels: BTreeSet<String> },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObsPoint {
    Vector(#[serde(with = "vec_text")] Vec<Rational>),
    Label(String),
}

mod vec_text {
    use super::Rational;
    use crate::rational::{format_rational, serde_text};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(d)?;
        raw.iter().map(|v| serde_text::from_value(v).map_err(D::Error::custom)).collect()
    }
}

impl fmt::Display for ObsPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsPoint::Label(l) => f.write_str(l),
            ObsPoint::Vector(v) => {
                let parts: Vec<String> = v.iter().map(format_rational).collect();
                write!(f, "({})", parts.join(", "))
            }
        }
    }
}

/// A nonnegative distance, stored as its exact square.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distance {
    squared: Rational,
}

impl Distance {
    pub fn zero() -> Self {
        Distance { squared: Rational::zero() }
    }

    pub fn from_rational(d: &Rational) -> Self {
        Distance { squared: d * d }
    }

    pub fn squared(&self) -> &Rational {
        &self.squared
    }

    /// The distance itself when it is rational.
    pub fn exact(&self) -> Option<Rational> {
        exact_sqrt(&self.squared)
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.squared).sqrt()
    }

    pub fn within(&self, eps: &Rational) -> bool {
        !eps.is_negative() && self.squared <= eps * eps
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Distance {
    fn cmp(&self, other: &Self) -> Ordering {
        self.squared.cmp(&other.squared)
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact() {
            Some(d) => f.write_str(&format_rational(&d)),
            None => write!(f, "sqrt({})", format_rational(&self.squared)),
        }
    }
}

impl Serialize for Distance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl ObsSpace {
    pub fn contains(&self, p: &ObsPoint) -> bool {
        match (self, p) {
            (ObsSpace::RealVector { dim, .. }, ObsPoint::Vector(v)) => v.len() == *dim,
            (ObsSpace::Discrete { labels }, ObsPoint::Label(l)) => labels.contains(l),
            _ => false,
        }
    }

    /// Points outside the space are rejected when systems are built, so a
    /// kind mismatch here is treated as maximally far apart in the discrete sense.
    pub fn distance(&self, x: &ObsPoint, y: &ObsPoint) -> Distance {
        match (self, x, y) {
            (ObsSpace::RealVector { metric, .. }, ObsPoint::Vector(a), ObsPoint::Vector(b)) => {
                let diffs = a.iter().zip(b).map(|(p, q)| (p - q).abs());
                let squared = match metric {
                    Metric::Sup => {
                        let m = diffs.max().unwrap_or_else(Rational::zero);
                        &m * &m
                    }
                    Metric::Euclidean => diffs.map(|d| &d * &d).fold(Rational::zero(), |acc, d| acc + d),
                };
                Distance { squared }
            }
            _ if x == y => Distance::zero(),
            _ => Distance::from_rational(&Rational::from_integer(1.into())),
        }
    }
}

/// `(S, i, Δ, ω)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsSystem<A: Action = Symbol> {
    lts: Lts<A>,
    space: ObsSpace,
    omega: BTreeMap<StateId, ObsPoint>,
}

impl<A: Action> ObsSystem<A> {
    pub fn new(lts: Lts<A>, space: ObsSpace, omega: BTreeMap<StateId, ObsPoint>) -> Result<Self, ModelError> {
        for s in lts.states() {
            match omega.get(s) {
                None => return Err(ModelError::invariant(format!("state `{s}` has no observation"))),
                Some(p) if !space.contains(p) => {
                    return Err(ModelError::invariant(format!("observation {p} of `{s}` is not in the observation space")))
                }
                Some(_) => {}
            }
        }
        if let Some(s) = omega.keys().find(|s| !lts.contains_state(s)) {
            return Err(ModelError::invariant(format!("observation given for unknown state `{s}`")));
        }
        Ok(ObsSystem { lts, space, omega })
    }

    pub fn lts(&self) -> &Lts<A> {
        &self.lts
    }

    pub fn space(&self) -> &ObsSpace {
        &self.space
    }

    pub fn omega(&self) -> &BTreeMap<StateId, ObsPoint> {
        &self.omega
    }

    pub fn observe(&self, s: &str) -> &ObsPoint {
        &self.omega[s]
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObsRepr<A> {
    states: Vec<StateId>,
    initial: StateId,
    #[serde(default = "Vec::new")]
    transitions: Vec<crate::lts::Transition<A>>,
    space: ObsSpace,
    observations: BTreeMap<StateId, ObsPoint>,
}

/// The fields of an [`Lts`] plus `space` and `observations`.
impl<A: Action + Serialize> Serialize for ObsSystem<A> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ObsRepr {
            states: self.lts.states().iter().cloned().collect(),
            initial: self.lts.initial().to_string(),
            transitions: self.lts.transitions().iter().cloned().collect(),
            space: self.space.clone(),
            observations: self.omega.clone(),
        }
        .serialize(s)
    }
}

impl<'de, A: Action + Deserialize<'de>> Deserialize<'de> for ObsSystem<A> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = ObsRepr::<A>::deserialize(d)?;
        let n = r.states.len();
        let states: BTreeSet<StateId> = r.states.into_iter().collect();
        if states.len() != n {
            return Err(crate::error::invalid("duplicate state id"));
        }
        let lts = Lts::new(states, r.initial, r.transitions.into_iter().collect()).map_err(crate::error::invalid)?;
        ObsSystem::new(lts, r.space, r.observations).map_err(crate::error::invalid)
    }
}

/// `W`: drop the observations.
pub fn forget_observations<A: Action>(t: &ObsSystem<A>) -> Lts<A> {
    t.lts.clone()
}

/// A morphism of underlying systems between two observed systems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsMorphism<A: Action = Symbol> {
    source: ObsSystem<A>,
    target: ObsSystem<A>,
    underlying: LtsMorphism<A>,
}

impl<A: Action> ObsMorphism<A> {
    pub fn new(source: ObsSystem<A>, target: ObsSystem<A>, map: BTreeMap<StateId, StateId>) -> Result<Self, ModelError> {
        if source.space != target.space {
            return Err(ModelError::invariant("observation spaces differ"));
        }
        let underlying = LtsMorphism::new(source.lts.clone(), target.lts.clone(), map)?;
        Ok(ObsMorphism { source, target, underlying })
    }

    pub fn identity(t: &ObsSystem<A>) -> Self {
        ObsMorphism { source: t.clone(), target: t.clone(), underlying: LtsMorphism::identity(&t.lts) }
    }

    pub fn source(&self) -> &ObsSystem<A> {
        &self.source
    }

    pub fn target(&self) -> &ObsSystem<A> {
        &self.target
    }

    /// `W f`.
    pub fn underlying(&self) -> &LtsMorphism<A> {
        &self.underlying
    }
}

/// `max_s d(ω(s), ω'(f(s)))` over all source states, reachable or not.
pub fn tightest_bound<A: Action>(f: &ObsMorphism<A>) -> Distance {
    f.source
        .lts
        .states()
        .iter()
        .map(|s| f.source.space.distance(f.source.observe(s), f.target.observe(f.underlying.apply(s))))
        .max()
        .unwrap_or_else(Distance::zero)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundedMorphism<A: Action = Symbol> {
    pub morphism: ObsMorphism<A>,
    pub bound: Rational,
}

impl<A: Action> BoundedMorphism<A> {
    /// Underlying morphism valid and every state within the bound.
    pub fn check(&self) -> Result<(), String> {
        if self.bound.is_negative() {
            return Err("negative bound".into());
        }
        if let Some(v) = check_morphism(&self.morphism.underlying).violations.first() {
            return Err(format!("underlying map is not a morphism: {v:?}"));
        }
        let f = &self.morphism;
        for s in f.source.lts.states() {
            let d = f.source.space.distance(f.source.observe(s), f.target.observe(f.underlying.apply(s)));
            if !d.within(&self.bound) {
                return Err(format!("state `{s}` is observed {d} away from its image, over {}", format_rational(&self.bound)));
            }
        }
        Ok(())
    }
}

/// Openness in the observed setting. Bounded lifts always exist once an
/// underlying lift does, since every morphism of finite systems is bounded,
/// so the verdict is that of `W f`.
pub fn is_open_obs<A: Action>(f: &ObsMorphism<A>, mode: OpenMode) -> Result<OpenVerdict<A>, ModelError> {
    is_open(&f.underlying, mode)
}

/// Both sides of the openness transfer: `(f open, W f open)`, by independent routes.
pub fn openness_transfer<A: Action>(f: &ObsMorphism<A>) -> Result<(bool, bool), ModelError> {
    let observed = is_open_obs(f, OpenMode::LiftingOracle { max_len: f.source.lts.states().len() })?.is_open();
    let plain = is_open(&forget_observations_mor(f), OpenMode::GraphBisim)?.is_open();
    Ok((observed, plain))
}

fn forget_observations_mor<A: Action>(f: &ObsMorphism<A>) -> LtsMorphism<A> {
    LtsMorphism::new(forget_observations(&f.source), forget_observations(&f.target), f.underlying.map().clone())
        .expect("same map")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ApproxBisim {
    pub relation: BisimRelation,
    #[serde(with = "crate::rational::serde_text")]
    pub epsilon: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "failure", rename_all = "kebab-case")]
pub enum ApproxFailure<A = Symbol> {
    NotABisimulation { cause: BisimFailure<A> },
    TooFar { pair: (StateId, StateId), distance: String, epsilon: String },
    DifferentSpaces,
    Leg { detail: String },
}

impl<A: fmt::Display> fmt::Display for ApproxFailure<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxFailure::NotABisimulation { cause } => write!(f, "{cause}"),
            ApproxFailure::TooFar { pair, distance, epsilon } => {
                write!(f, "pair ({}, {}) observes {distance} apart, more than {epsilon}", pair.0, pair.1)
            }
            ApproxFailure::DifferentSpaces => f.write_str("observation spaces differ"),
            ApproxFailure::Leg { detail } => write!(f, "span leg: {detail}"),
        }
    }
}

pub fn check_approx_bisim<A: Action>(
    t: &ObsSystem<A>,
    u: &ObsSystem<A>,
    r: &ApproxBisim,
) -> Result<(), ApproxFailure<A>> {
    if t.space != u.space {
        return Err(ApproxFailure::DifferentSpaces);
    }
    crate::lts::check_bisimulation(&t.lts, &u.lts, &r.relation)
        .map_err(|cause| ApproxFailure::NotABisimulation { cause })?;
    for (s, s2) in &r.relation.pairs {
        let d = t.space.distance(t.observe(s), u.observe(s2));
        if !d.within(&r.epsilon) {
            return Err(ApproxFailure::TooFar {
                pair: (s.clone(), s2.clone()),
                distance: d.to_string(),
                epsilon: format_rational(&r.epsilon),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApproxEngine {
    /// Seed with the close pairs, then delete failing pairs through a predecessor worklist.
    SeedRefine,
    /// Repeated full sweeps over the seeded pair set.
    NaiveSweep,
}

/// Greatest ε-approximate bisimulation between the reachable parts.
pub fn greatest_approx_bisimulation<A: Action>(
    t: &ObsSystem<A>,
    u: &ObsSystem<A>,
    epsilon: &Rational,
    engine: ApproxEngine,
) -> Result<BisimRelation, ModelError> {
    if t.space != u.space {
        return Err(ModelError::invariant("observation spaces differ"));
    }
    if epsilon.is_negative() {
        return Err(ModelError::invariant("epsilon must be nonnegative"));
    }
    let g = Union::new(&t.lts, &u.lts);
    let close = |i: usize, j: usize| t.space.distance(t.observe(g.names[i]), u.observe(g.names[j])).within(epsilon);
    let pairs = match engine {
        ApproxEngine::SeedRefine => seed_refine(&g, close),
        ApproxEngine::NaiveSweep => naive_fixpoint(&g, close),
    };
    Ok(pairs.into_iter().map(|(i, j)| (g.names[i].to_string(), g.names[j].to_string())).collect())
}

fn seed_refine(g: &Union<'_>, seed: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let (nl, n) = (g.n_left, g.len());
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, out) in g.succ.iter().enumerate() {
        for &(_, j) in out {
            pred[j].push(i);
        }
    }
    let mut rel: BTreeSet<(usize, usize)> = (0..nl).flat_map(|i| (nl..n).map(move |j| (i, j))).filter(|&(i, j)| seed(i, j)).collect();
    let mut queue: VecDeque<(usize, usize)> = rel.iter().copied().collect();
    let mut queued: BTreeSet<(usize, usize)> = rel.clone();
    while let Some((i, j)) = queue.pop_front() {
        queued.remove(&(i, j));
        if !rel.contains(&(i, j)) {
            continue;
        }
        let forth = g.succ[i].iter().all(|&(a, x)| g.succ[j].iter().any(|&(b, y)| a == b && rel.contains(&(x, y))));
        let back = g.succ[j].iter().all(|&(b, y)| g.succ[i].iter().any(|&(a, x)| a == b && rel.contains(&(x, y))));
        if forth && back {
            continue;
        }
        rel.remove(&(i, j));
        for &p in &pred[i] {
            for &q in &pred[j] {
                if rel.contains(&(p, q)) && queued.insert((p, q)) {
                    queue.push_back((p, q));
                }
            }
        }
    }
    rel.into_iter().collect()
}

pub fn approx_bisimilarity<A: Action>(
    t: &ObsSystem<A>,
    u: &ObsSystem<A>,
    epsilon: &Rational,
) -> Result<Option<ApproxBisim>, ModelError> {
    let relation = greatest_approx_bisimulation(t, u, epsilon, ApproxEngine::SeedRefine)?;
    Ok(relation.contains(t.lts.initial(), u.lts.initial()).then(|| ApproxBisim { relation, epsilon: epsilon.clone() }))
}

/// `T ← T_R → T'` with the left leg 0-bounded and the right leg ε-bounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxSpan<A: Action = Symbol> {
    pub apex: ObsSystem<A>,
    pub left: BoundedMorphism<A>,
    pub right: BoundedMorphism<A>,
}

impl<A: Action> ApproxSpan<A> {
    /// Both legs bounded and open.
    pub fn verify(&self) -> Result<(), String> {
        for (name, leg) in [("left", &self.left), ("right", &self.right)] {
            leg.check().map_err(|e| format!("{name} leg: {e}"))?;
            if let OpenVerdict::NotOpen(cx) = is_open_obs(&leg.morphism, OpenMode::GraphBisim).map_err(|e| e.to_string())? {
                return Err(format!("{name} leg is not open at {}", cx.path));
            }
        }
        Ok(())
    }
}

/// Builds `T_R` with `ω_R(s, s') = ω(s)`.
pub fn span_from_approx<A: Action>(
    t: &ObsSystem<A>,
    u: &ObsSystem<A>,
    r: &ApproxBisim,
) -> Result<ApproxSpan<A>, ApproxFailure<A>> {
    check_approx_bisim(t, u, r)?;
    let apex_lts = pair_system(&t.lts, &u.lts, &r.relation);
    let omega = r.relation.pairs.iter().map(|(s, s2)| (pair_state_id(s, s2), t.observe(s).clone())).collect();
    let apex = ObsSystem::new(apex_lts.clone(), t.space.clone(), omega).expect("observations come from t");
    let (l, rr) = projections(&t.lts, &u.lts, &r.relation, &apex_lts);
    let left = BoundedMorphism {
        morphism: ObsMorphism { source: apex.clone(), target: t.clone(), underlying: l },
        bound: Rational::zero(),
    };
    let right = BoundedMorphism {
        morphism: ObsMorphism { source: apex.clone(), target: u.clone(), underlying: rr },
        bound: r.epsilon.clone(),
    };
    let span = ApproxSpan { apex, left, right };
    span.verify().map_err(|detail| ApproxFailure::Leg { detail })?;
    Ok(span)
}

/// `{(f(x), g(x))}` from two bounded legs out of a common apex, at `ε1 + ε2`.
pub fn relation_from_approx_span<A: Action>(
    left: &BoundedMorphism<A>,
    right: &BoundedMorphism<A>,
) -> Result<ApproxBisim, ApproxFailure<A>> {
    if left.morphism.source != right.morphism.source {
        return Err(ApproxFailure::Leg { detail: "legs have different sources".into() });
    }
    for leg in [left, right] {
        leg.check().map_err(|detail| ApproxFailure::Leg { detail })?;
    }
    let relation = left
        .morphism
        .source
        .lts
        .states()
        .iter()
        .map(|x| (left.morphism.underlying.apply(x).to_string(), right.morphism.underlying.apply(x).to_string()))
        .collect();
    let r = ApproxBisim { relation, epsilon: &left.bound + &right.bound };
    check_approx_bisim(&left.morphism.target, &right.morphism.target, &r)?;
    Ok(r)
}

/// Underlying [`check_transfer`] for callers holding only a relation.
pub fn is_transfer_closed<A: Action>(t: &ObsSystem<A>, u: &ObsSystem<A>, r: &BisimRelation) -> bool {
    check_transfer(&t.lts, &u.lts, r).is_ok()
}

/// An observed run tree: `ω(run) = ω(end of run)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsRunTree<A: Action = Symbol> {
    pub system: ObsSystem<A>,
    pub depth_bound: Option<usize>,
    pub frontier: BTreeSet<StateId>,
}

/// `V`: unfold the underlying system and observe each run at its end state.
pub fn v_unfold<A: Action>(t: &ObsSystem<A>, depth: usize) -> (ObsRunTree<A>, BoundedMorphism<A>) {
    let (RunTree { lts, depth_bound, frontier }, unf) = unfold(&t.lts, depth);
    let omega = lts.states().iter().map(|r| (r.clone(), t.observe(unf.apply(r)).clone())).collect();
    let system = ObsSystem::new(lts, t.space.clone(), omega).expect("every run ends in an observed state");
    let bounded = BoundedMorphism {
        morphism: ObsMorphism { source: system.clone(), target: t.clone(), underlying: unf },
        bound: Rational::zero(),
    };
    (ObsRunTree { system, depth_bound, frontier }, bounded)
}

/// Openness of the `V` unfolding's `unf` away from its frontier.
pub fn check_v_unf<A: Action>(tree: &ObsRunTree<A>, unf: &BoundedMorphism<A>) -> Result<OpenVerdict<A>, String> {
    unf.check()?;
    is_open_away_from(&unf.morphism.underlying, &tree.frontier).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::lts::{strong_bisimilarity, LinearPath};
    use crate::rational::{int, ratio};

    fn line() -> ObsSpace {
        ObsSpace::RealVector { dim: 1, metric: Metric::Sup }
    }

    fn pt(r: Rational) -> ObsPoint {
        ObsPoint::Vector(vec![r])
    }

    fn observed(lts: Lts, obs: &[(&str, Rational)]) -> ObsSystem {
        ObsSystem::new(lts, line(), obs.iter().map(|(s, r)| (s.to_string(), pt(r.clone()))).collect()).unwrap()
    }

    fn self_loop(obs: Rational) -> ObsSystem {
        observed(Lts::from_triples(&["s"], "s", &[("s", "a", "s")]).unwrap(), &[("s", obs)])
    }

    #[test]
    fn distances() {
        let e = ObsSpace::RealVector { dim: 2, metric: Metric::Euclidean };
        let d = e.distance(&ObsPoint::Vector(vec![int(0), int(0)]), &ObsPoint::Vector(vec![int(3), int(4)]));
        assert_eq!(d.exact(), Some(int(5)));
        let s = ObsSpace::RealVector { dim: 2, metric: Metric::Sup };
        let d = s.distance(&ObsPoint::Vector(vec![int(0), int(0)]), &ObsPoint::Vector(vec![int(3), int(-4)]));
        assert_eq!(d.exact(), Some(int(4)));
        let d = e.distance(&ObsPoint::Vector(vec![int(0), int(0)]), &ObsPoint::Vector(vec![int(1), int(1)]));
        assert_eq!(d.exact(), None);
        assert!(d.within(&ratio(3, 2)) && !d.within(&ratio(7, 5)));
    }

    #[test]
    fn tightest_bounds() {
        let t = self_loop(int(0));
        assert_eq!(tightest_bound(&ObsMorphism::identity(&t)), Distance::zero());
        let one = |r| observed(Lts::from_triples(&["s"], "s", &[]).unwrap(), &[("s", r)]);
        let f = ObsMorphism::new(one(int(0)), one(int(3)), BTreeMap::from([("s".into(), "s".into())])).unwrap();
        assert_eq!(tightest_bound(&f).exact(), Some(int(3)));
        let two = observed(Lts::from_triples(&["x", "y"], "x", &[]).unwrap(), &[("x", int(2)), ("y", int(1))]);
        let f = ObsMorphism::new(two, one(int(2)), BTreeMap::from([("x".into(), "s".into()), ("y".into(), "s".into())])).unwrap();
        assert_eq!(tightest_bound(&f).exact(), Some(int(1)));
    }

    #[test]
    fn approx_threshold_on_self_loops() {
        let (t, u) = (self_loop(int(0)), self_loop(ratio(1, 2)));
        assert!(approx_bisimilarity(&t, &u, &ratio(2, 5)).unwrap().is_none());
        let r = approx_bisimilarity(&t, &u, &ratio(1, 2)).unwrap().unwrap();
        let span = span_from_approx(&t, &u, &r).unwrap();
        assert_eq!(tightest_bound(&span.right.morphism).exact(), Some(ratio(1, 2)));
        assert_eq!(tightest_bound(&span.left.morphism), Distance::zero());
        let back = relation_from_approx_span(&span.left, &span.right).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn gap_at_reachable_state_blocks() {
        let lts = LinearPath::new(vec!["a".to_string()]).to_lts();
        let t = observed(lts.clone(), &[("0", int(0)), ("1", int(0))]);
        let u = observed(lts, &[("0", int(0)), ("1", int(2))]);
        assert!(approx_bisimilarity(&t, &u, &ratio(19, 10)).unwrap().is_none());
        assert!(approx_bisimilarity(&t, &u, &int(2)).unwrap().is_some());
    }

    #[test]
    fn figure_morphism_with_observations_is_not_open_either_way() {
        let f = catalog::figure_morphism();
        let obs = |lts: &Lts| ObsSystem::new(lts.clone(), line(), lts.states().iter().map(|s| (s.clone(), pt(int(s.len() as i64)))).collect()).unwrap();
        let g = ObsMorphism::new(obs(f.source()), obs(f.target()), f.map().clone()).unwrap();
        assert_eq!(openness_transfer(&g).unwrap(), (false, false));
        let id = ObsMorphism::identity(&obs(f.source()));
        assert_eq!(openness_transfer(&id).unwrap(), (true, true));
    }

    #[test]
    fn v_unfold_observes_end_states() {
        let t = observed(catalog::t_d(), &[("q1'", int(1)), ("q2'", int(2)), ("q3'", int(3)), ("q5'", int(5))]);
        let (tree, unf) = v_unfold(&t, 3);
        assert_eq!(tree.system.observe("q1'"), &pt(int(1)));
        assert_eq!(tree.system.observe("q1' -a-> q2' -c-> q5'"), &pt(int(5)));
        assert!(check_v_unf(&tree, &unf).unwrap().is_open());
        assert!(approx_bisimilarity(&tree.system, &t, &int(0)).unwrap().is_some());
    }

    #[test]
    fn both_engines_agree_on_figure() {
        let obs = |lts: Lts| {
            let omega = lts.states().iter().map(|s| (s.clone(), pt(int(0)))).collect();
            ObsSystem::new(lts, line(), omega).unwrap()
        };
        let (t, u) = (obs(catalog::t_u()), obs(catalog::t_d()));
        let a = greatest_approx_bisimulation(&t, &u, &int(0), ApproxEngine::SeedRefine).unwrap();
        let b = greatest_approx_bisimulation(&t, &u, &int(0), ApproxEngine::NaiveSweep).unwrap();
        assert_eq!(a, b);
        assert!(strong_bisimilarity(t.lts(), u.lts()).is_none());
        assert!(!a.contains("q1", "q1'"));
    }
}
