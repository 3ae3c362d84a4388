//! Timed transition systems, their semantics as transition systems labelled by
//! `(action, delay)`, the tree embedding `ι` with one clock per set of tree
//! transitions, and bounded timed bisimulation.

mod bisim;
mod instance;
mod interval;
mod iota;
mod tts;
mod unfold;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::lts::{StateId, Symbol};
use crate::rational::{format_rational, is_positive, Rational};

pub use bisim::{replay_word, separating_play, timed_bisim_bounded, validate_strategy, SpoilerMove, TimedBisimVerdict};
pub use instance::{TimedInstance, TimedMorphism, TimedObject};
pub use interval::{parse_interval, Interval};
pub use iota::{eta_rho, iota_timed, timed_counit, CounitReport, EtaRho, IotaTts, DEFAULT_CLOCK_CAP};
pub use tts::{check_tts_morphism, TimedViolation, Tts, TtsMorphism, TtsTransition};
pub use unfold::{challenge_times, GFragment, GTree, SymbolicChild, TimePolicy};

/// Label `(a, t)` of the semantics: action `a` taken after delay `t`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimedLabel {
    pub action: Symbol,
    pub time: Rational,
}

impl TimedLabel {
    pub fn new(action: impl Into<Symbol>, time: Rational) -> Self {
        TimedLabel { action: action.into(), time }
    }
}

impl fmt::Display for TimedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.action, format_rational(&self.time))
    }
}

impl Serialize for TimedLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.action, format_rational(&self.time)).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TimedLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (action, time): (Symbol, serde_json::Value) = Deserialize::deserialize(d)?;
        let time = crate::rational::serde_text::from_value(&time).map_err(serde::de::Error::custom)?;
        Ok(TimedLabel { action, time })
    }
}

pub type TimedWord = Vec<TimedLabel>;

/// A clock: a named clock of a timed system, or a set of tree transitions
/// (indices into the sorted transition list) of an embedded tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum Clock {
    Named(String),
    Set(BTreeSet<usize>),
}

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clock::Named(n) => f.write_str(n),
            Clock::Set(s) => {
                let items: Vec<String> = s.iter().map(|i| format!("d{i}")).collect();
                write!(f, "{{{}}}", items.join(","))
            }
        }
    }
}

/// An outgoing transition of a timed system, addressed by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: usize,
    pub action: Symbol,
    pub dst: StateId,
}

/// What the semantics needs from a timed system.
pub trait TimedSystem {
    fn initial_state(&self) -> &str;
    /// Every clock, sorted. May fail when the clock set is too large to list.
    fn clocks(&self) -> Result<Vec<Clock>, ModelError>;
    fn edges_from(&self, s: &str) -> Vec<Edge>;
    fn edge(&self, id: usize) -> Edge;
    fn edge_count(&self) -> usize;
    fn edge_src(&self, id: usize) -> &str;
    fn guard(&self, edge: usize, c: &Clock) -> Interval;
    fn resets(&self, edge: usize, c: &Clock) -> bool;
}

/// A configuration `(s, ν)`; `nu` is indexed like [`TimedSystem::clocks`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub state: StateId,
    pub nu: Vec<Rational>,
}

/// Delays admitting one edge from a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnabledEdge {
    pub edge: usize,
    pub dst: StateId,
    /// `None` when no positive delay satisfies the guard.
    pub times: Option<Interval>,
}

/// The semantics `Θ` of a timed system over its listed clocks.
pub struct Semantics<'a, T: TimedSystem + ?Sized> {
    sys: &'a T,
    clocks: Vec<Clock>,
}

impl<'a, T: TimedSystem + ?Sized> Semantics<'a, T> {
    pub fn new(sys: &'a T) -> Result<Self, ModelError> {
        Ok(Semantics { clocks: sys.clocks()?, sys })
    }

    pub fn system(&self) -> &'a T {
        self.sys
    }

    pub fn clocks(&self) -> &[Clock] {
        &self.clocks
    }

    pub fn clock_index(&self, c: &Clock) -> Option<usize> {
        self.clocks.binary_search(c).ok()
    }

    pub fn initial(&self) -> Config {
        Config { state: self.sys.initial_state().to_string(), nu: vec![crate::rational::zero(); self.clocks.len()] }
    }

    /// `ν + t ∈ I` on every clock.
    pub fn admits(&self, edge: usize, cfg: &Config, t: &Rational) -> bool {
        self.clocks.iter().zip(&cfg.nu).all(|(c, v)| self.sys.guard(edge, c).contains(&(v + t)))
    }

    /// `(ν + t)[R := 0]`.
    pub fn advance(&self, edge: usize, cfg: &Config, t: &Rational) -> Config {
        let e = self.sys.edge(edge);
        let nu = self
            .clocks
            .iter()
            .zip(&cfg.nu)
            .map(|(c, v)| if self.sys.resets(edge, c) { crate::rational::zero() } else { v + t })
            .collect();
        Config { state: e.dst, nu }
    }

    /// Successors of `cfg` under `(a, t)`, sorted and deduplicated.
    pub fn theta_step(&self, cfg: &Config, a: &str, t: &Rational) -> Result<Vec<Config>, ModelError> {
        if !is_positive(t) {
            return Err(ModelError::invariant(format!("delay {} is not positive", format_rational(t))));
        }
        let out: BTreeSet<Config> = self
            .sys
            .edges_from(&cfg.state)
            .into_iter()
            .filter(|e| e.action == a && self.admits(e.id, cfg, t))
            .map(|e| self.advance(e.id, cfg, t))
            .collect();
        Ok(out.into_iter().collect())
    }

    /// For each `a`-edge leaving `cfg`, the exact set of positive delays it admits.
    pub fn enabled_times(&self, cfg: &Config, a: &str) -> Vec<EnabledEdge> {
        self.sys
            .edges_from(&cfg.state)
            .into_iter()
            .filter(|e| e.action == a)
            .map(|e| EnabledEdge { edge: e.id, times: self.admissible(e.id, cfg), dst: e.dst })
            .collect()
    }

    /// Intersection over clocks of `{t > 0 | ν(c) + t ∈ I_c}`.
    pub fn admissible(&self, edge: usize, cfg: &Config) -> Option<Interval> {
        let mut b = interval::Bounds::positive();
        for (c, v) in self.clocks.iter().zip(&cfg.nu) {
            b.restrict(&self.sys.guard(edge, c), v);
        }
        b.finish()
    }

    /// Valuation written as `{x=1,y=0}`.
    pub fn show(&self, cfg: &Config) -> String {
        let parts: Vec<String> =
            self.clocks.iter().zip(&cfg.nu).map(|(c, v)| format!("{c}={}", format_rational(v))).collect();
        format!("({},{{{}}})", cfg.state, parts.join(","))
    }
}

/// `theta_step` on a fresh [`Semantics`].
pub fn theta_step<T: TimedSystem + ?Sized>(
    sys: &T,
    cfg: &Config,
    a: &str,
    t: &Rational,
) -> Result<Vec<Config>, ModelError> {
    Semantics::new(sys)?.theta_step(cfg, a, t)
}

pub fn enabled_times<T: TimedSystem + ?Sized>(sys: &T, cfg: &Config, a: &str) -> Result<Vec<EnabledEdge>, ModelError> {
    Ok(Semantics::new(sys)?.enabled_times(cfg, a))
}

/// A run of the semantics: configurations joined by timed labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimedRun {
    pub configs: Vec<Config>,
    pub labels: Vec<TimedLabel>,
}

impl TimedRun {
    pub fn root(cfg: Config) -> Self {
        TimedRun { configs: vec![cfg], labels: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn last(&self) -> &Config {
        self.configs.last().expect("a run has a first configuration")
    }

    pub fn extended(&self, label: TimedLabel, cfg: Config) -> Self {
        let mut r = self.clone();
        r.labels.push(label);
        r.configs.push(cfg);
        r
    }

    pub fn prefix(&self, n: usize) -> TimedRun {
        TimedRun { configs: self.configs[..=n].to_vec(), labels: self.labels[..n].to_vec() }
    }

    /// States and labels only, `q1 -(a,1)-> q2`.
    pub fn skeleton(&self) -> String {
        let mut s = self.configs[0].state.clone();
        for (l, c) in self.labels.iter().zip(&self.configs[1..]) {
            s.push_str(&format!(" -{l}-> {}", c.state));
        }
        s
    }
}

#[cfg(test)]
mod tests;
