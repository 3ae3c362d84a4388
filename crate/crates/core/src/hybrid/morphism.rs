use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::numerics::{
    flatten, flow, guard_holds, invariant_holds, obs_distance, observe, sup_distance, HybridConfig, IntegratorConfig, Valuation,
};
use super::system::{Guard, HybridSystem, Invariant, Subsystem};
use super::unfold::HybridRun;
use crate::expr::{Bindings, Expr};
use crate::rational::to_f64;

/// `(f_M, f_I)` with `f_I` from target subsystems to source subsystems, and
/// the observation bound `epsilon`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridMorphism {
    pub source: HybridSystem,
    pub target: HybridSystem,
    pub mode_map: BTreeMap<String, String>,
    pub subsystem_map: BTreeMap<String, String>,
    pub epsilon: f64,
}

impl HybridMorphism {
    pub fn identity(sys: &HybridSystem) -> Self {
        HybridMorphism {
            source: sys.clone(),
            target: sys.clone(),
            mode_map: sys.modes().keys().map(|m| (m.clone(), m.clone())).collect(),
            subsystem_map: sys.subsystems().iter().map(|s| (s.name.clone(), s.name.clone())).collect(),
            epsilon: 0.0,
        }
    }

    /// Source subsystem index for each target subsystem, in target order.
    fn pullback_indices(&self) -> Result<Vec<usize>, String> {
        self.target
            .subsystems()
            .iter()
            .map(|t| {
                let s = self.subsystem_map.get(&t.name).ok_or_else(|| format!("subsystem `{}` has no preimage", t.name))?;
                self.source.subsystem(s).map(|(i, _)| i).ok_or_else(|| format!("`{}` maps to unknown subsystem `{s}`", t.name))
            })
            .collect()
    }

    /// `f_X((x_i)_i) = (x_{f_I(i')})_{i'}`.
    pub fn map_valuation(&self, sigma: &Valuation) -> Result<Valuation, String> {
        Ok(self.pullback_indices()?.into_iter().map(|i| sigma[i].clone()).collect())
    }

    pub fn map_mode(&self, m: &str) -> Result<&str, String> {
        self.mode_map.get(m).map(String::as_str).ok_or_else(|| format!("mode `{m}` has no image"))
    }

    pub fn map_config(&self, c: &HybridConfig) -> Result<HybridConfig, String> {
        Ok(HybridConfig::new(self.map_mode(&c.mode)?, self.map_valuation(&c.sigma)?))
    }

    pub fn map_run(&self, r: &HybridRun) -> Result<HybridRun, String> {
        Ok(HybridRun { configs: r.configs.iter().map(|c| self.map_config(c)).collect::<Result<_, _>>()?, labels: r.labels.clone() })
    }

    fn map_flat(&self, flat: &[f64]) -> Result<Vec<f64>, String> {
        let sigma = unflatten(self.source.subsystems(), flat);
        Ok(flatten(&self.map_valuation(&sigma)?))
    }
}

pub(crate) fn unflatten(subs: &[Subsystem], flat: &[f64]) -> Valuation {
    let mut out = Vec::with_capacity(subs.len());
    let mut k = 0;
    for s in subs {
        out.push(flat[k..k + s.dim()].to_vec());
        k += s.dim();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ConditionStatus {
    Pass,
    Fail { detail: String },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionResult {
    pub condition: String,
    #[serde(flatten)]
    pub status: ConditionStatus,
    /// Checked on sample points or sample runs only.
    pub sampled: bool,
    pub checked: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HybridMorphismReport {
    pub conditions: Vec<ConditionResult>,
}

impl HybridMorphismReport {
    pub fn is_ok(&self) -> bool {
        self.conditions.iter().all(|c| c.status == ConditionStatus::Pass)
    }

    pub fn first_failure(&self) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.status != ConditionStatus::Pass)
    }

    pub fn status_of(&self, condition: &str) -> Option<&ConditionStatus> {
        self.conditions.iter().find(|c| c.condition == condition).map(|c| &c.status)
    }
}

struct Collector {
    out: Vec<ConditionResult>,
}

impl Collector {
    fn push(&mut self, condition: &str, sampled: bool, checked: usize, failure: Option<String>) {
        let status = match failure {
            None => ConditionStatus::Pass,
            Some(detail) => ConditionStatus::Fail { detail },
        };
        self.out.push(ConditionResult { condition: condition.into(), status, sampled, checked });
    }

    fn skip(&mut self, condition: &str, reason: &str) {
        self.out.push(ConditionResult {
            condition: condition.into(),
            status: ConditionStatus::Skipped { reason: reason.into() },
            sampled: true,
            checked: 0,
        });
    }
}

/// Variables renamed to their positions, so expressions over different
/// subsystems can be compared syntactically.
fn positional(exprs: &[Expr], vars: &[String]) -> Vec<Expr> {
    let map: BTreeMap<String, Expr> = vars.iter().enumerate().map(|(k, v)| (v.clone(), Expr::Var(format!("${k}")))).collect();
    exprs.iter().map(|e| e.substitute(&map)).collect()
}

fn identity_exprs(vars: &[String]) -> Vec<Expr> {
    vars.iter().map(|v| Expr::Var(v.clone())).collect()
}

fn zero_exprs(n: usize) -> Vec<Expr> {
    vec![Expr::Num(0.0); n]
}

/// Compares two vector functions of `(t, x)`, syntactically first, else at `points`.
fn same_function(
    a: (&[Expr], &[String]),
    b: (&[Expr], &[String]),
    points: &[(f64, Vec<f64>)],
    tol: f64,
) -> Result<usize, String> {
    if positional(a.0, a.1) == positional(b.0, b.1) {
        return Ok(0);
    }
    let mut checked = 0;
    for (s, x) in points {
        let ea = Bindings { names: a.1, values: x, time: Some(*s) };
        let eb = Bindings { names: b.1, values: x, time: Some(*s) };
        for (k, (fa, fb)) in a.0.iter().zip(b.0).enumerate() {
            match (fa.eval(&ea), fb.eval(&eb)) {
                (Ok(u), Ok(v)) if (u - v).abs() <= tol * 1f64.max(u.abs()).max(v.abs()) => {}
                (Err(_), Err(_)) => {}
                (u, v) => {
                    return Err(format!("component {k} at t={s}, x={x:?}: {fa} gives {u:?}, {fb} gives {v:?}"));
                }
            }
        }
        checked += 1;
    }
    Ok(checked)
}

/// Checks the morphism conditions: structure exactly, dynamics and
/// predicates on sample points, observations and run transfer along
/// `sample_runs` (runs of the source).
pub fn check_hybrid_morphism(
    m: &HybridMorphism,
    sample_runs: &[HybridRun],
    sample_points: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> HybridMorphismReport {
    let mut c = Collector { out: Vec::new() };
    let (src, tgt) = (&m.source, &m.target);
    let tol = cfg.tolerance;

    let missing = src.modes().keys().find(|k| !m.mode_map.contains_key(*k));
    let unknown = m.mode_map.iter().find(|(_, v)| tgt.mode(v).is_none());
    let structure = match (missing, unknown) {
        (Some(k), _) => Some(format!("mode `{k}` has no image")),
        (_, Some((k, v))) => Some(format!("mode `{k}` maps to unknown `{v}`")),
        _ => None,
    };
    c.push("mode-map", false, src.modes().len(), structure.clone());
    let idx = m.pullback_indices();
    let dims = match &idx {
        Err(e) => Some(e.clone()),
        Ok(idx) => tgt
            .subsystems()
            .iter()
            .zip(idx)
            .find(|(t, &i)| t.dim() != src.subsystems()[i].dim())
            .map(|(t, &i)| format!("`{}` has dimension {} but `{}` has {}", t.name, t.dim(), src.subsystems()[i].name, src.subsystems()[i].dim())),
    };
    c.push("dimensions", false, tgt.subsystems().len(), dims.clone());
    if structure.is_some() || dims.is_some() {
        for name in ["initial-mode", "events", "initial-valuation", "flows", "resets", "guards", "invariants", "sample-runs", "observations", "run-transfer"] {
            c.skip(name, "the mode or subsystem map is not well formed");
        }
        return HybridMorphismReport { conditions: c.out };
    }
    let idx = idx.expect("checked");

    let init_img = &m.mode_map[src.initial_mode()];
    c.push(
        "initial-mode",
        false,
        1,
        (init_img != tgt.initial_mode()).then(|| format!("`{}` maps to `{init_img}`, not `{}`", src.initial_mode(), tgt.initial_mode())),
    );

    let mut event_img = Vec::new();
    let mut missing_event = None;
    for e in src.events() {
        let (a, b) = (&m.mode_map[&e.src], &m.mode_map[&e.dst]);
        match tgt.event_index(a, &e.action, b) {
            Some(j) => event_img.push(Some(j)),
            None => {
                missing_event.get_or_insert(format!("({}, {}, {}) has no image ({a}, {}, {b})", e.src, e.action, e.dst, e.action));
                event_img.push(None);
            }
        }
    }
    c.push("events", false, src.events().len(), missing_event);

    let sigma0 = src.initial_valuation();
    let img0: Valuation = idx.iter().map(|&i| sigma0[i].clone()).collect();
    let d0 = sup_distance(&flatten(&img0), &flatten(&tgt.initial_valuation()));
    c.push("initial-valuation", false, 1, (d0 > tol).then(|| format!("f_X(σ0) is {d0} away from σ0'")));

    // Sample points: seeded random ones and the configurations of the sample runs.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src_names = src.flat_vars();
    let mut run_points: Vec<(String, Vec<f64>)> = Vec::new();
    let mut guard_points: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut traj_points: Vec<(String, Vec<f64>)> = Vec::new();
    let mut runs_ok = None;
    for (k, r) in sample_runs.iter().enumerate() {
        if let Err(e) = r.validate(src, cfg) {
            runs_ok.get_or_insert(format!("sample run {k}: {e}"));
            continue;
        }
        for cf in &r.configs {
            run_points.push((cf.mode.clone(), cf.flat()));
        }
        for (l, w) in r.labels.iter().zip(r.configs.windows(2)) {
            let Ok(traj) = flow(src, &w[0].mode, &w[0].sigma, to_f64(&l.time), cfg) else { continue };
            let stride = (traj.samples.len() / 32).max(1);
            for (j, s) in traj.samples.iter().enumerate() {
                if j % stride == 0 || j + 1 == traj.samples.len() {
                    traj_points.push((w[0].mode.clone(), flatten(s)));
                }
            }
            if let Some(e) = src.event_index(&w[0].mode, &l.action, &w[1].mode) {
                guard_points.push((e, flatten(traj.end())));
            }
        }
    }
    c.push("sample-runs", true, sample_runs.len(), runs_ok);

    let random_flat = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect() };

    let mut flow_fail = None;
    let mut flow_checked = 0;
    'flows: for (mname, mode) in src.modes() {
        let tmode = tgt.mode(&m.mode_map[mname]).expect("checked");
        for (t_sub, &i) in tgt.subsystems().iter().zip(&idx) {
            let s_sub = &src.subsystems()[i];
            let fa = mode.flows.get(&s_sub.name).cloned().unwrap_or_else(|| zero_exprs(s_sub.dim()));
            let fb = tmode.flows.get(&t_sub.name).cloned().unwrap_or_else(|| zero_exprs(t_sub.dim()));
            let mut pts: Vec<(f64, Vec<f64>)> =
                (0..sample_points).map(|_| (rng.gen_range(0.0..10.0), random_flat(&mut rng, s_sub.dim()))).collect();
            let offset: usize = src.subsystems()[..i].iter().map(Subsystem::dim).sum();
            pts.extend(
                run_points.iter().filter(|(mm, _)| mm == mname).map(|(_, x)| (0.0, x[offset..offset + s_sub.dim()].to_vec())),
            );
            match same_function((&fa, &s_sub.vars), (&fb, &t_sub.vars), &pts, tol) {
                Ok(n) => flow_checked += n.max(1),
                Err(e) => {
                    flow_fail = Some(format!("mode `{mname}`, `{}` vs `{}`: {e}", s_sub.name, t_sub.name));
                    break 'flows;
                }
            }
        }
    }
    c.push("flows", true, flow_checked, flow_fail);

    let mut reset_fail = None;
    let mut reset_checked = 0;
    'resets: for (e, img) in src.events().iter().zip(&event_img) {
        let Some(j) = img else { continue };
        let te = &tgt.events()[*j];
        for (t_sub, &i) in tgt.subsystems().iter().zip(&idx) {
            let s_sub = &src.subsystems()[i];
            let ra = e.resets.get(&s_sub.name).cloned().unwrap_or_else(|| identity_exprs(&s_sub.vars));
            let rb = te.resets.get(&t_sub.name).cloned().unwrap_or_else(|| identity_exprs(&t_sub.vars));
            let offset: usize = src.subsystems()[..i].iter().map(Subsystem::dim).sum();
            let mut pts: Vec<(f64, Vec<f64>)> = (0..sample_points).map(|_| (0.0, random_flat(&mut rng, s_sub.dim()))).collect();
            let ei = src.event_index(&e.src, &e.action, &e.dst).expect("own event");
            pts.extend(guard_points.iter().filter(|(g, _)| *g == ei).map(|(_, x)| (0.0, x[offset..offset + s_sub.dim()].to_vec())));
            match same_function((&ra, &s_sub.vars), (&rb, &t_sub.vars), &pts, tol) {
                Ok(n) => reset_checked += n.max(1),
                Err(err) => {
                    reset_fail = Some(format!("event ({}, {}, {}), `{}` vs `{}`: {err}", e.src, e.action, e.dst, s_sub.name, t_sub.name));
                    break 'resets;
                }
            }
        }
    }
    c.push("resets", true, reset_checked, reset_fail);

    let tgt_names = tgt.flat_vars();
    let total = src.total_dim();
    let mut guard_fail = None;
    let mut guard_checked = 0;
    for (ei, (e, img)) in src.events().iter().zip(&event_img).enumerate() {
        let Some(j) = img else { continue };
        let mut pts: Vec<Vec<f64>> = (0..sample_points).map(|_| random_flat(&mut rng, total)).collect();
        pts.extend(guard_points.iter().filter(|(g, _)| *g == ei).map(|(_, x)| x.clone()));
        if let Guard::Ball { center } = &e.guard {
            pts.push(center.clone());
        }
        for p in pts {
            match guard_holds(src, ei, &src_names, &p, tol) {
                Ok(true) => {}
                _ => continue,
            }
            guard_checked += 1;
            let q = m.map_flat(&p).expect("maps checked");
            if !guard_holds(tgt, *j, &tgt_names, &q, tol).unwrap_or(false) {
                guard_fail.get_or_insert(format!("({}, {}, {}) at {p:?}: image {q:?} fails the target guard", e.src, e.action, e.dst));
            }
        }
    }
    c.push("guards", true, guard_checked, guard_fail);

    let mut inv_fail = None;
    let mut inv_checked = 0;
    for (mname, mode) in src.modes() {
        let mut pts: Vec<Vec<f64>> = (0..sample_points).map(|_| random_flat(&mut rng, total)).collect();
        pts.extend(traj_points.iter().filter(|(mm, _)| mm == mname).map(|(_, x)| x.clone()));
        if let Invariant::Trajectory { samples } = &mode.invariant {
            let stride = (samples.len() / 32).max(1);
            pts.extend(samples.iter().step_by(stride).cloned());
            pts.extend(samples.last().cloned());
        }
        for p in pts {
            match invariant_holds(src, mname, &src_names, &p, 0, tol) {
                Ok(true) => {}
                _ => continue,
            }
            inv_checked += 1;
            let q = m.map_flat(&p).expect("maps checked");
            if !invariant_holds(tgt, &m.mode_map[mname], &tgt_names, &q, 0, tol).unwrap_or(false) {
                inv_fail.get_or_insert(format!("`{mname}` at {p:?}: image {q:?} fails the target invariant"));
            }
        }
    }
    c.push("invariants", true, inv_checked, inv_fail);

    let mut obs_fail = None;
    let mut obs_checked = 0;
    for r in sample_runs {
        for cf in &r.configs {
            let Ok(img) = m.map_config(cf) else { continue };
            match (observe(src, cf), observe(tgt, &img)) {
                (Ok(a), Ok(b)) => {
                    obs_checked += 1;
                    let d = obs_distance(tgt.metric(), &a, &b);
                    if d > m.epsilon + tol {
                        obs_fail.get_or_insert(format!("in `{}` the observations {a:?} and {b:?} are {d} apart", cf.mode));
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    obs_fail.get_or_insert(e.to_string());
                }
            }
        }
    }
    c.push("observations", true, obs_checked, obs_fail);

    let mut transfer_fail = None;
    for (k, r) in sample_runs.iter().enumerate() {
        let result = m.map_run(r).and_then(|img| img.validate(tgt, cfg));
        if let Err(e) = result {
            transfer_fail.get_or_insert(format!("image of sample run {k}: {e}"));
        }
    }
    c.push("run-transfer", true, sample_runs.len(), transfer_fail);

    HybridMorphismReport { conditions: c.out }
}

/// `(f2 ∘ f1)` on modes and `f_I1 ∘ f_I2` on subsystems; bounds add up.
pub fn compose_hybrid(first: &HybridMorphism, second: &HybridMorphism) -> Result<HybridMorphism, String> {
    if first.target != second.source {
        return Err("morphisms do not compose: middle objects differ".into());
    }
    let mode_map = first
        .mode_map
        .iter()
        .map(|(k, v)| Ok((k.clone(), second.map_mode(v)?.to_string())))
        .collect::<Result<_, String>>()?;
    let subsystem_map = second
        .subsystem_map
        .iter()
        .map(|(k, v)| {
            first.subsystem_map.get(v).map(|w| (k.clone(), w.clone())).ok_or_else(|| format!("subsystem `{v}` has no preimage"))
        })
        .collect::<Result<_, String>>()?;
    Ok(HybridMorphism {
        source: first.source.clone(),
        target: second.target.clone(),
        mode_map,
        subsystem_map,
        epsilon: first.epsilon + second.epsilon,
    })
}
