//! Distinguishing strategies for finite systems.
//!
//! When two states are not (ε-)bisimilar, Spoiler wins the bisimulation game
//! from them in finitely many rounds. The strategy is read off the chain of
//! approximants `R_0 ⊇ R_1 ⊇ …` of the greatest bisimulation: a pair leaving
//! at stage `k` has a move all of whose answers lead to pairs that left
//! earlier, down to pairs outside `R_0` (observed too far apart).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::lts::{Action, Lts, Side, StateId};
use crate::observations::ObsSystem;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy<A> {
    /// The pair is already separated by observation.
    Gap { left: StateId, right: StateId },
    /// Spoiler takes `label` on `side` to `chosen`; every answer of the other
    /// side is listed with the continuation. No answers means Duplicator is stuck.
    Move { side: Side, label: A, chosen: StateId, responses: Vec<(StateId, Strategy<A>)> },
}

impl<A: Clone> Strategy<A> {
    /// Labels along the first listed answer at each round.
    pub fn spine(&self) -> Vec<A> {
        let mut out = Vec::new();
        let mut cur = self;
        while let Strategy::Move { label, responses, .. } = cur {
            out.push(label.clone());
            match responses.first() {
                Some((_, next)) => cur = next,
                None => break,
            }
        }
        out
    }

    pub fn rounds(&self) -> usize {
        match self {
            Strategy::Gap { .. } => 0,
            Strategy::Move { responses, .. } => 1 + responses.iter().map(|(_, s)| s.rounds()).max().unwrap_or(0),
        }
    }
}

fn reachable_pairs<A: Action>(t: &Lts<A>, u: &Lts<A>) -> Vec<(StateId, StateId)> {
    let (l, r) = (t.reachable(), u.reachable());
    l.iter().flat_map(|s| r.iter().map(move |q| (s.clone(), q.clone()))).collect()
}

/// Spoiler's strategy from the initial pair, if the systems are not
/// bisimilar. `apart(s, s')` says whether a pair is separated outright.
pub fn distinguishing_strategy<A: Action>(
    t: &Lts<A>,
    u: &Lts<A>,
    apart: impl Fn(&str, &str) -> bool,
) -> Option<Strategy<A>> {
    let pairs = reachable_pairs(t, u);
    // Stage at which each pair drops out; 0 means separated outright.
    let mut left_at: BTreeMap<(StateId, StateId), usize> = BTreeMap::new();
    for p in &pairs {
        if apart(&p.0, &p.1) {
            left_at.insert(p.clone(), 0);
        }
    }
    let inside = |left_at: &BTreeMap<(StateId, StateId), usize>, s: &str, q: &str| !left_at.contains_key(&(s.to_string(), q.to_string()));
    let mut stage = 0;
    loop {
        stage += 1;
        let dropped: Vec<(StateId, StateId)> = pairs
            .iter()
            .filter(|(s, q)| inside(&left_at, s, q))
            .filter(|(s, q)| {
                let fwd = t.successors(s).iter().any(|(a, s2)| !u.successors(q).iter().any(|(b, q2)| a == b && inside(&left_at, s2, q2)));
                let bwd = u.successors(q).iter().any(|(b, q2)| !t.successors(s).iter().any(|(a, s2)| a == b && inside(&left_at, s2, q2)));
                fwd || bwd
            })
            .cloned()
            .collect();
        if dropped.is_empty() {
            break;
        }
        for p in dropped {
            left_at.insert(p, stage);
        }
    }
    left_at.contains_key(&(t.initial().to_string(), u.initial().to_string())).then(|| build(t, u, &left_at, t.initial(), u.initial()))
}

fn build<A: Action>(t: &Lts<A>, u: &Lts<A>, left_at: &BTreeMap<(StateId, StateId), usize>, s: &str, q: &str) -> Strategy<A> {
    let k = left_at[&(s.to_string(), q.to_string())];
    if k == 0 {
        return Strategy::Gap { left: s.into(), right: q.into() };
    }
    let earlier = |a: &str, b: &str| left_at.get(&(a.to_string(), b.to_string())).is_some_and(|&j| j < k);
    for side in [Side::Left, Side::Right] {
        let (mine, theirs, msys, tsys) = if side == Side::Left { (s, q, t, u) } else { (q, s, u, t) };
        for (a, x) in msys.successors(mine) {
            let answers: Vec<&StateId> = tsys.successors(theirs).iter().filter(|(b, _)| b == a).map(|(_, y)| y).collect();
            let pair = |y: &str| if side == Side::Left { (x.clone(), y.to_string()) } else { (y.to_string(), x.clone()) };
            if answers.iter().all(|y| {
                let (l, r) = pair(y);
                earlier(&l, &r)
            }) {
                let responses = answers
                    .into_iter()
                    .map(|y| {
                        let (l, r) = pair(y);
                        (y.clone(), build(t, u, left_at, &l, &r))
                    })
                    .collect();
                return Strategy::Move { side, label: a.clone(), chosen: x.clone(), responses };
            }
        }
    }
    unreachable!("a pair dropping out at stage {k} has a move escaping stage {}", k - 1)
}

/// Replays `strategy` from the initial pair: every Spoiler step is a
/// transition, the listed answers are exactly the other side's steps, and
/// every leaf is separated by `apart` or leaves Duplicator without answers.
pub fn validate_strategy_lts<A: Action>(
    t: &Lts<A>,
    u: &Lts<A>,
    strategy: &Strategy<A>,
    apart: impl Fn(&str, &str) -> bool,
) -> Result<(), String> {
    check(t, u, strategy, &apart, t.initial(), u.initial(), 1)
}

fn check<A: Action>(
    t: &Lts<A>,
    u: &Lts<A>,
    s: &Strategy<A>,
    apart: &impl Fn(&str, &str) -> bool,
    l: &str,
    r: &str,
    round: usize,
) -> Result<(), String> {
    match s {
        Strategy::Gap { left, right } => {
            if left != l || right != r {
                return Err(format!("round {round}: the gap names ({left}, {right}), the game is at ({l}, {r})"));
            }
            if !apart(l, r) {
                return Err(format!("round {round}: ({l}, {r}) are not separated"));
            }
            Ok(())
        }
        Strategy::Move { side, label, chosen, responses } => {
            let (mine, theirs, msys, tsys) = if *side == Side::Left { (l, r, t, u) } else { (r, l, u, t) };
            if !msys.has_transition(mine, label, chosen) {
                return Err(format!("round {round}: `{mine}` has no {label} step to `{chosen}`"));
            }
            let actual: BTreeSet<&StateId> = tsys.successors(theirs).iter().filter(|(b, _)| b == label).map(|(_, y)| y).collect();
            let listed: BTreeSet<&StateId> = responses.iter().map(|(y, _)| y).collect();
            if actual != listed {
                return Err(format!("round {round}: listed answers to {label} differ from the actual ones"));
            }
            for (y, next) in responses {
                let (nl, nr) = if *side == Side::Left { (chosen.as_str(), y.as_str()) } else { (y.as_str(), chosen.as_str()) };
                check(t, u, next, apart, nl, nr, round + 1)?;
            }
            Ok(())
        }
    }
}

/// `d(ω(s), ω'(s')) > ε` for observed systems over the same space.
pub fn obs_apart<'a, A: Action>(t: &'a ObsSystem<A>, u: &'a ObsSystem<A>, epsilon: &'a Rational) -> impl Fn(&str, &str) -> bool + 'a {
    move |s, q| !t.space().distance(t.observe(s), u.observe(q)).within(epsilon)
}
