use std::collections::BTreeSet;

use serde::{Deserialize, Serialize, Serializer};

use super::unfold::challenge_times;
use super::{Config, Semantics, TimePolicy, TimedLabel, TimedSystem, TimedWord};
use crate::error::ModelError;
use crate::lts::{Side, Symbol};
use crate::rational::format_rational;

impl Serialize for Config {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let nu: Vec<String> = self.nu.iter().map(format_rational).collect();
        (&self.state, nu).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Config {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (state, nu): (String, Vec<serde_json::Value>) = Deserialize::deserialize(d)?;
        let nu = nu
            .iter()
            .map(|v| crate::rational::serde_text::from_value(v).map_err(serde::de::Error::custom))
            .collect::<Result<_, _>>()?;
        Ok(Config { state, nu })
    }
}

/// A winning Spoiler strategy in the bounded bisimulation game.
///
/// Spoiler plays `label` on `side`, reaching `chosen`; `responses` lists every
/// answer the other side has, each with Spoiler's continuation. An empty list
/// means the other side cannot answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpoilerMove {
    pub side: Side,
    pub label: TimedLabel,
    pub chosen: Config,
    pub responses: Vec<(Config, SpoilerMove)>,
}

impl SpoilerMove {
    /// Labels along the first response at each step, down to a leaf.
    pub fn spine(&self) -> TimedWord {
        let mut word = vec![self.label.clone()];
        let mut cur = self;
        while let Some((_, next)) = cur.responses.first() {
            word.push(next.label.clone());
            cur = next;
        }
        word
    }

    /// Every move is on one side and every step has at most one answer.
    pub fn is_linear(&self) -> bool {
        let mut cur = self;
        loop {
            match cur.responses.as_slice() {
                [] => return true,
                [(_, next)] if next.side == self.side => cur = next,
                _ => return false,
            }
        }
    }

    pub fn rounds(&self) -> usize {
        1 + self.responses.iter().map(|(_, m)| m.rounds()).max().unwrap_or(0)
    }

    /// Label sequences of all plays, from the root to each leaf.
    pub fn plays(&self) -> Vec<TimedWord> {
        if self.responses.is_empty() {
            return vec![vec![self.label.clone()]];
        }
        let mut out = Vec::new();
        for (_, next) in &self.responses {
            for mut w in next.plays() {
                w.insert(0, self.label.clone());
                out.push(w);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum TimedBisimVerdict {
    /// `word` is a play of `strategy` read by exactly one of the systems;
    /// it is absent when the systems differ only in branching along every play.
    NotBisimilar {
        strategy: SpoilerMove,
        #[serde(skip_serializing_if = "Option::is_none")]
        word: Option<TimedWord>,
    },
    /// Spoiler has no winning strategy within `depth` rounds using the
    /// challenge delays. This is evidence, not a proof of bisimilarity.
    NoCounterexample { depth: usize },
}

struct Game<'a, S: TimedSystem + ?Sized, T: TimedSystem + ?Sized> {
    left: Semantics<'a, S>,
    right: Semantics<'a, T>,
    policy: TimePolicy,
}

impl<S: TimedSystem + ?Sized, T: TimedSystem + ?Sized> Game<'_, S, T> {
    fn step(&self, side: Side, cfg: &Config, l: &TimedLabel) -> Vec<Config> {
        match side {
            Side::Left => self.left.theta_step(cfg, &l.action, &l.time),
            Side::Right => self.right.theta_step(cfg, &l.action, &l.time),
        }
        .expect("challenge delays are positive")
    }

    fn actions(&self, l: &Config, r: &Config) -> BTreeSet<Symbol> {
        let a = self.left.system().edges_from(&l.state).into_iter().map(|e| e.action);
        a.chain(self.right.system().edges_from(&r.state).into_iter().map(|e| e.action)).collect()
    }

    fn times(&self, l: &Config, r: &Config, a: &str) -> Vec<crate::rational::Rational> {
        if let TimePolicy::Grid { times } = &self.policy {
            let mut ts: Vec<_> = times.iter().filter(|t| crate::rational::is_positive(t)).cloned().collect();
            ts.sort();
            ts.dedup();
            return ts;
        }
        let mut ivs: Vec<_> = self.left.enabled_times(l, a).into_iter().filter_map(|e| e.times).collect();
        ivs.extend(self.right.enabled_times(r, a).into_iter().filter_map(|e| e.times));
        challenge_times(&ivs)
    }

    /// First winning move within `k` rounds: labels sorted, delays ascending, left before right.
    fn win(&self, l: &Config, r: &Config, k: usize) -> Option<SpoilerMove> {
        if k == 0 {
            return None;
        }
        for a in self.actions(l, r) {
            for t in self.times(l, r, &a) {
                let label = TimedLabel::new(a.clone(), t);
                for side in [Side::Left, Side::Right] {
                    let (mine, theirs, other) = match side {
                        Side::Left => (l, r, Side::Right),
                        Side::Right => (r, l, Side::Left),
                    };
                    let answers = self.step(other, theirs, &label);
                    'spoiler: for x in self.step(side, mine, &label) {
                        let mut responses = Vec::new();
                        for y in &answers {
                            let (nl, nr) = if side == Side::Left { (&x, y) } else { (y, &x) };
                            match self.win(nl, nr, k - 1) {
                                Some(m) => responses.push((y.clone(), m)),
                                None => continue 'spoiler,
                            }
                        }
                        return Some(SpoilerMove { side, label, chosen: x, responses });
                    }
                }
            }
        }
        None
    }
}

/// Bounded timed bisimulation game between the initial configurations.
/// Spoiler's delays are the challenge times of the enabled intervals, or the grid.
pub fn timed_bisim_bounded<S: TimedSystem + ?Sized, T: TimedSystem + ?Sized>(
    left: &S,
    right: &T,
    depth: usize,
    policy: &TimePolicy,
) -> Result<TimedBisimVerdict, ModelError> {
    if depth == 0 {
        return Err(ModelError::invariant("depth must be at least 1"));
    }
    let game = Game { left: Semantics::new(left)?, right: Semantics::new(right)?, policy: policy.clone() };
    match game.win(&game.left.initial(), &game.right.initial(), depth) {
        Some(strategy) => {
            let word = separating_play(left, right, &strategy)?;
            Ok(TimedBisimVerdict::NotBisimilar { strategy, word })
        }
        None => Ok(TimedBisimVerdict::NoCounterexample { depth }),
    }
}

/// First play (shortest first) that one system reads and the other does not.
pub fn separating_play<S: TimedSystem + ?Sized, T: TimedSystem + ?Sized>(
    left: &S,
    right: &T,
    strategy: &SpoilerMove,
) -> Result<Option<TimedWord>, ModelError> {
    let mut plays = strategy.plays();
    plays.sort_by_key(|w| w.len());
    for w in plays {
        for n in 1..=w.len() {
            if replay_word(left, &w[..n])? != replay_word(right, &w[..n])? {
                return Ok(Some(w[..n].to_vec()));
            }
        }
    }
    Ok(None)
}

/// Replays a strategy against both systems: every Spoiler move must be a
/// step of its side and the listed answers must be exactly the other side's steps.
pub fn validate_strategy<S: TimedSystem + ?Sized, T: TimedSystem + ?Sized>(
    left: &S,
    right: &T,
    strategy: &SpoilerMove,
) -> Result<(), String> {
    let game = Game {
        left: Semantics::new(left).map_err(|e| e.to_string())?,
        right: Semantics::new(right).map_err(|e| e.to_string())?,
        policy: TimePolicy::Canonical,
    };
    check_move(&game, &game.left.initial(), &game.right.initial(), strategy, 1)
}

fn check_move<S: TimedSystem + ?Sized, T: TimedSystem + ?Sized>(
    game: &Game<'_, S, T>,
    l: &Config,
    r: &Config,
    m: &SpoilerMove,
    round: usize,
) -> Result<(), String> {
    if !crate::rational::is_positive(&m.label.time) {
        return Err(format!("round {round}: delay is not positive"));
    }
    let (mine, theirs, other) = match m.side {
        Side::Left => (l, r, Side::Right),
        Side::Right => (r, l, Side::Left),
    };
    if !game.step(m.side, mine, &m.label).contains(&m.chosen) {
        return Err(format!("round {round}: {} is not a move of the {:?} side", m.label, m.side));
    }
    let actual = game.step(other, theirs, &m.label);
    let answers: BTreeSet<&Config> = actual.iter().collect();
    let listed: BTreeSet<&Config> = m.responses.iter().map(|(c, _)| c).collect();
    if answers != listed {
        return Err(format!("round {round}: listed answers to {} differ from the actual ones", m.label));
    }
    for (y, next) in &m.responses {
        let (nl, nr) = if m.side == Side::Left { (&m.chosen, y) } else { (y, &m.chosen) };
        check_move(game, nl, nr, next, round + 1)?;
    }
    Ok(())
}

/// Whether some run of `sys` reads `word`.
pub fn replay_word<S: TimedSystem + ?Sized>(sys: &S, word: &[TimedLabel]) -> Result<bool, ModelError> {
    let sem = Semantics::new(sys)?;
    let mut cur = BTreeSet::from([sem.initial()]);
    for l in word {
        let mut next = BTreeSet::new();
        for c in &cur {
            next.extend(sem.theta_step(c, &l.action, &l.time)?);
        }
        cur = next;
    }
    Ok(!cur.is_empty())
}
