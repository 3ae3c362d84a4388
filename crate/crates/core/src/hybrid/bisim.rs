use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::numerics::{moves, obs_distance, observe, HybridConfig, IntegratorConfig};
use super::system::HybridSystem;
use super::unfold::{h_unfold, HFragment, HybridRun};
use crate::error::ModelError;
use crate::lts::{Side, StateId};
use crate::rational::to_f64;
use crate::timed::{TimedLabel, TimedWord};

/// A winning Spoiler strategy in the bounded `ε`-bisimulation game on runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HybridStrategy {
    /// The current runs are observed more than `ε` apart.
    Gap { left: StateId, right: StateId, distance: f64 },
    /// Spoiler extends the run on `side` to `chosen`; `responses` pairs every
    /// answer of the other side with Spoiler's continuation.
    Move { side: Side, label: TimedLabel, chosen: StateId, responses: Vec<(StateId, HybridStrategy)> },
}

impl HybridStrategy {
    pub fn rounds(&self) -> usize {
        match self {
            HybridStrategy::Gap { .. } => 0,
            HybridStrategy::Move { responses, .. } => 1 + responses.iter().map(|(_, s)| s.rounds()).max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum HybridBisimVerdict {
    /// `tolerance` is the numerical slack added to `ε` before a gap counts.
    NotBisimilar { strategy: HybridStrategy, tolerance: f64 },
    /// Spoiler has no winning strategy within `depth` rounds along the given
    /// words. Evidence only.
    NoCounterexample { depth: usize },
}

struct Game<'a> {
    left: &'a HFragment,
    right: &'a HFragment,
    metric: crate::observations::Metric,
    bound: f64,
}

impl Game<'_> {
    fn frag(&self, side: Side) -> &HFragment {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    fn children<'b>(&'b self, side: Side, id: &str, l: &TimedLabel) -> Vec<&'b StateId> {
        self.frag(side).tree().successors(id).iter().filter(|(m, _)| m == l).map(|(_, d)| d).collect()
    }

    fn win(&self, l: &str, r: &str, k: usize) -> Option<HybridStrategy> {
        let d = obs_distance(self.metric, &self.left.observations[l], &self.right.observations[r]);
        if d > self.bound {
            return Some(HybridStrategy::Gap { left: l.into(), right: r.into(), distance: d });
        }
        if k == 0 {
            return None;
        }
        let labels: BTreeSet<&TimedLabel> = self
            .left
            .tree()
            .successors(l)
            .iter()
            .chain(self.right.tree().successors(r))
            .map(|(a, _)| a)
            .collect();
        for label in labels {
            for side in [Side::Left, Side::Right] {
                let (mine, theirs) = if side == Side::Left { (l, r) } else { (r, l) };
                let answers = self.children(side.other(), theirs, label);
                'spoiler: for x in self.children(side, mine, label) {
                    let mut responses = Vec::new();
                    for y in &answers {
                        let (nl, nr) = if side == Side::Left { (x, *y) } else { (*y, x) };
                        match self.win(nl, nr, k - 1) {
                            Some(s) => responses.push(((*y).clone(), s)),
                            None => continue 'spoiler,
                        }
                    }
                    return Some(HybridStrategy::Move { side, label: label.clone(), chosen: x.clone(), responses });
                }
            }
        }
        None
    }
}

fn compatible(left: &HybridSystem, right: &HybridSystem) -> Result<(), ModelError> {
    if left.obs_dim() != right.obs_dim() || left.metric() != right.metric() {
        return Err(ModelError::invariant("the systems observe different spaces"));
    }
    Ok(())
}

/// The `ε`-bisimulation game up to `depth` rounds, Spoiler restricted to
/// prefixes of `words`. Observations further apart than `ε + tolerance` win.
pub fn approx_bisim_hybrid(
    left: &HybridSystem,
    right: &HybridSystem,
    epsilon: f64,
    depth: usize,
    words: &[TimedWord],
    cfg: &IntegratorConfig,
) -> Result<HybridBisimVerdict, ModelError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(ModelError::invariant("ε must be a nonnegative real"));
    }
    compatible(left, right)?;
    let fl = h_unfold(left, depth, words, cfg)?;
    let fr = h_unfold(right, depth, words, cfg)?;
    let game = Game { left: &fl, right: &fr, metric: left.metric(), bound: epsilon + cfg.tolerance };
    Ok(match game.win(fl.tree().initial(), fr.tree().initial(), depth) {
        Some(strategy) => HybridBisimVerdict::NotBisimilar { strategy, tolerance: cfg.tolerance },
        None => HybridBisimVerdict::NoCounterexample { depth },
    })
}

/// Replays a strategy by recomputing every move and observation from the
/// systems themselves.
pub fn validate_hybrid_strategy(
    left: &HybridSystem,
    right: &HybridSystem,
    epsilon: f64,
    strategy: &HybridStrategy,
    cfg: &IntegratorConfig,
) -> Result<(), String> {
    compatible(left, right).map_err(|e| e.to_string())?;
    let l = HybridRun::root(HybridConfig::initial(left));
    let r = HybridRun::root(HybridConfig::initial(right));
    replay(left, right, epsilon, cfg, &l, &r, strategy, 1)
}

fn step(sys: &HybridSystem, run: &HybridRun, label: &TimedLabel, cfg: &IntegratorConfig) -> Result<Vec<HybridRun>, String> {
    let succ = moves(sys, run.last(), &label.action, to_f64(&label.time), cfg).map_err(|e| e.to_string())?;
    Ok(succ.into_iter().map(|s| run.extended(label.clone(), s.config)).collect())
}

#[allow(clippy::too_many_arguments)]
fn replay(
    left: &HybridSystem,
    right: &HybridSystem,
    epsilon: f64,
    cfg: &IntegratorConfig,
    l: &HybridRun,
    r: &HybridRun,
    s: &HybridStrategy,
    round: usize,
) -> Result<(), String> {
    match s {
        HybridStrategy::Gap { left: li, right: ri, distance } => {
            if li != &l.id() || ri != &r.id() {
                return Err(format!("round {round}: the gap names runs other than the current ones"));
            }
            let ol = observe(left, l.last()).map_err(|e| e.to_string())?;
            let or = observe(right, r.last()).map_err(|e| e.to_string())?;
            let d = obs_distance(left.metric(), &ol, &or);
            if (d - distance).abs() > cfg.tolerance {
                return Err(format!("round {round}: claimed distance {distance}, actual {d}"));
            }
            if d <= epsilon + cfg.tolerance {
                return Err(format!("round {round}: observations {d} apart are within ε = {epsilon}"));
            }
            Ok(())
        }
        HybridStrategy::Move { side, label, chosen, responses } => {
            let (mine, theirs, msys, tsys) = match side {
                Side::Left => (l, r, left, right),
                Side::Right => (r, l, right, left),
            };
            let Some(x) = step(msys, mine, label, cfg)?.into_iter().find(|x| &x.id() == chosen) else {
                return Err(format!("round {round}: `{chosen}` is not a move of the {side:?} side"));
            };
            let answers = step(tsys, theirs, label, cfg)?;
            let actual: BTreeSet<StateId> = answers.iter().map(HybridRun::id).collect();
            let listed: BTreeSet<StateId> = responses.iter().map(|(y, _)| y.clone()).collect();
            if actual != listed {
                return Err(format!("round {round}: listed answers to {label} differ from the actual ones"));
            }
            for (y, next) in responses {
                let yr = answers.iter().find(|a| &a.id() == y).expect("listed answers are actual");
                let (nl, nr) = if *side == Side::Left { (&x, yr) } else { (yr, &x) };
                replay(left, right, epsilon, cfg, nl, nr, next, round + 1)?;
            }
            Ok(())
        }
    }
}
