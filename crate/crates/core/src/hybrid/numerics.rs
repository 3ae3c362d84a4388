use serde::{Deserialize, Serialize, Serializer};

use super::system::{format_f64, Guard, HybridSystem, Invariant};
use crate::error::ModelError;
use crate::expr::{Bindings, Expr};

/// Fixed-step RK4 settings and the tolerance used for guards, invariants and
/// comparisons of computed values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub step: f64,
    pub tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { step: 1e-3, tolerance: 1e-6 }
    }
}

impl IntegratorConfig {
    pub fn new(step: f64, tolerance: f64) -> Result<Self, ModelError> {
        if !(step > 0.0 && step.is_finite() && tolerance > 0.0 && tolerance.is_finite()) {
            return Err(ModelError::invariant("step and tolerance must be positive"));
        }
        Ok(IntegratorConfig { step, tolerance })
    }
}

/// One vector per subsystem.
pub type Valuation = Vec<Vec<f64>>;

pub fn flatten(sigma: &Valuation) -> Vec<f64> {
    sigma.iter().flatten().copied().collect()
}

/// Sup-norm distance between valuations of the same shape.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridConfig {
    pub mode: String,
    pub sigma: Valuation,
}

impl HybridConfig {
    pub fn new(mode: impl Into<String>, sigma: Valuation) -> Self {
        HybridConfig { mode: mode.into(), sigma }
    }

    pub fn initial(sys: &HybridSystem) -> Self {
        HybridConfig::new(sys.initial_mode(), sys.initial_valuation())
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.sigma)
    }

    pub fn approx_eq(&self, other: &HybridConfig, tol: f64) -> bool {
        self.mode == other.mode && sup_distance(&self.flat(), &other.flat()) <= tol
    }
}

impl Serialize for HybridConfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let sigma: Vec<Vec<String>> = self.sigma.iter().map(|v| v.iter().map(|x| format_f64(*x)).collect()).collect();
        (&self.mode, sigma).serialize(s)
    }
}

/// Sample times `0, h, 2h, …, t`; the last step is shortened to end at `t`.
pub fn sample_times(t: f64, h: f64) -> Vec<f64> {
    if t <= 0.0 {
        return vec![0.0];
    }
    let n = ((t / h) - 1e-9).ceil().max(1.0) as usize;
    let mut out: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
    out.push(t);
    out
}

/// RK4 for `ẋ = F(s, x)` sampled at `times`, which start at 0.
pub fn integrate(flow: &[Expr], vars: &[String], x0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>, ModelError> {
    let mut out = Vec::with_capacity(times.len());
    let mut x = x0.to_vec();
    out.push(x.clone());
    if flow.is_empty() || flow.iter().all(|e| matches!(e, Expr::Num(c) if *c == 0.0)) {
        out.resize(times.len(), x);
        return Ok(out);
    }
    let f = |s: f64, x: &[f64]| -> Result<Vec<f64>, ModelError> {
        let env = Bindings { names: vars, values: x, time: Some(s) };
        flow.iter()
            .map(|e| e.eval(&env).map_err(|err| ModelError::Evaluation(format!("at time {s}: {err}"))))
            .collect()
    };
    let axpy = |x: &[f64], a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect() };
    for w in times.windows(2) {
        let (s, h) = (w[0], w[1] - w[0]);
        let k1 = f(s, &x)?;
        let k2 = f(s + h / 2.0, &axpy(&x, h / 2.0, &k1))?;
        let k3 = f(s + h / 2.0, &axpy(&x, h / 2.0, &k2))?;
        let k4 = f(s + h, &axpy(&x, h, &k3))?;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(x.clone());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<Valuation>,
    /// First sample at which the mode invariant fails.
    pub invariant_failure: Option<usize>,
}

impl Trajectory {
    pub fn end(&self) -> &Valuation {
        self.samples.last().expect("at least the start sample")
    }
}

/// Integrates every subsystem of `mode` from `sigma` for `t` time units and
/// checks the invariant at each sample.
pub fn flow(sys: &HybridSystem, mode: &str, sigma: &Valuation, t: f64, cfg: &IntegratorConfig) -> Result<Trajectory, ModelError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ModelError::invariant(format!("time {t} is not a nonnegative real")));
    }
    let m = sys.mode(mode).ok_or_else(|| ModelError::invariant(format!("unknown mode `{mode}`")))?;
    if sigma.len() != sys.subsystems().len() {
        return Err(ModelError::invariant("valuation has the wrong number of subsystems"));
    }
    let times = sample_times(t, cfg.step);
    let mut per_sub = Vec::with_capacity(sigma.len());
    for (s, x0) in sys.subsystems().iter().zip(sigma) {
        if x0.len() != s.dim() {
            return Err(ModelError::invariant(format!("value of `{}` has the wrong dimension", s.name)));
        }
        let f = m.flows.get(&s.name).map(Vec::as_slice).unwrap_or(&[]);
        per_sub.push(
            integrate(f, &s.vars, x0, &times)
                .map_err(|e| ModelError::Evaluation(format!("mode `{mode}`, subsystem `{}`: {e}", s.name)))?,
        );
    }
    let samples: Vec<Valuation> = (0..times.len()).map(|k| per_sub.iter().map(|xs| xs[k].clone()).collect()).collect();
    let names = sys.flat_vars();
    let mut invariant_failure = None;
    for (k, v) in samples.iter().enumerate() {
        if !invariant_holds(sys, mode, &names, &flatten(v), k, cfg.tolerance)? {
            invariant_failure = Some(k);
            break;
        }
    }
    Ok(Trajectory { times, samples, invariant_failure })
}

/// `hint` is the sample index, tried first against stored trajectories.
pub(crate) fn invariant_holds(
    sys: &HybridSystem,
    mode: &str,
    names: &[String],
    flat: &[f64],
    hint: usize,
    tol: f64,
) -> Result<bool, ModelError> {
    let m = sys.mode(mode).ok_or_else(|| ModelError::invariant(format!("unknown mode `{mode}`")))?;
    match &m.invariant {
        Invariant::Pred(p) => p
            .holds(&Bindings { names, values: flat, time: None }, tol)
            .map_err(|e| ModelError::Evaluation(format!("invariant of `{mode}`: {e}"))),
        Invariant::Trajectory { samples } => Ok(samples.get(hint).is_some_and(|s| sup_distance(s, flat) <= tol)
            || samples.iter().any(|s| sup_distance(s, flat) <= tol)),
    }
}

pub(crate) fn guard_holds(sys: &HybridSystem, event: usize, names: &[String], flat: &[f64], tol: f64) -> Result<bool, ModelError> {
    let e = &sys.events()[event];
    match &e.guard {
        Guard::Pred(p) => p
            .holds(&Bindings { names, values: flat, time: None }, tol)
            .map_err(|err| ModelError::Evaluation(format!("guard of ({}, {}, {}): {err}", e.src, e.action, e.dst))),
        Guard::Ball { center } => Ok(sup_distance(center, flat) <= tol),
    }
}

pub(crate) fn apply_resets(sys: &HybridSystem, event: usize, sigma: &Valuation) -> Result<Valuation, ModelError> {
    let e = &sys.events()[event];
    sys.subsystems()
        .iter()
        .zip(sigma)
        .map(|(s, x)| match e.resets.get(&s.name) {
            None => Ok(x.clone()),
            Some(r) => {
                let env = Bindings { names: &s.vars, values: x, time: None };
                r.iter()
                    .map(|ex| {
                        ex.eval(&env).map_err(|err| {
                            ModelError::Evaluation(format!("reset of ({}, {}, {}) for `{}`: {err}", e.src, e.action, e.dst, s.name))
                        })
                    })
                    .collect()
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Successor {
    pub event: usize,
    pub config: HybridConfig,
}

/// Configurations reached from `from` by doing `action` after `t` time units:
/// the invariant must hold at every sample of `[0, t]`, the guard at `t`, and
/// the resets are then applied. At most one successor per event.
pub fn moves(
    sys: &HybridSystem,
    from: &HybridConfig,
    action: &str,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<Successor>, ModelError> {
    let events: Vec<usize> = sys.events_from(&from.mode, action).map(|(i, _)| i).collect();
    if events.is_empty() {
        return Ok(Vec::new());
    }
    let traj = flow(sys, &from.mode, &from.sigma, t, cfg)?;
    if traj.invariant_failure.is_some() {
        return Ok(Vec::new());
    }
    let names = sys.flat_vars();
    let end = flatten(traj.end());
    let mut out = Vec::new();
    for e in events {
        if guard_holds(sys, e, &names, &end, cfg.tolerance)? {
            let sigma = apply_resets(sys, e, traj.end())?;
            out.push(Successor { event: e, config: HybridConfig::new(sys.events()[e].dst.clone(), sigma) });
        }
    }
    Ok(out)
}

/// `o(m, σ)`.
pub fn observe(sys: &HybridSystem, cfg: &HybridConfig) -> Result<Vec<f64>, ModelError> {
    let m = sys.mode(&cfg.mode).ok_or_else(|| ModelError::invariant(format!("unknown mode `{}`", cfg.mode)))?;
    let names = sys.flat_vars();
    let flat = cfg.flat();
    let env = Bindings { names: &names, values: &flat, time: None };
    m.observation
        .iter()
        .map(|e| e.eval(&env).map_err(|err| ModelError::Evaluation(format!("observation of `{}`: {err}", cfg.mode))))
        .collect()
}

/// Distance of two observation vectors under `metric`.
pub fn obs_distance(metric: crate::observations::Metric, a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    match metric {
        crate::observations::Metric::Sup => sup_distance(a, b),
        crate::observations::Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
    }
}
