//! Small reference systems used throughout the tests and the CLI examples.

use std::collections::BTreeMap;

use crate::lts::{Lts, LtsMorphism};

/// `q1 -a-> q2 -b-> q3`, `q1 -a-> q4 -c-> q5`.
pub fn t_u() -> Lts {
    Lts::from_triples(
        &["q1", "q2", "q3", "q4", "q5"],
        "q1",
        &[("q1", "a", "q2"), ("q1", "a", "q4"), ("q2", "b", "q3"), ("q4", "c", "q5")],
    )
    .expect("well formed")
}

/// `q1' -a-> q2'`, which offers both `b` and `c`.
pub fn t_d() -> Lts {
    Lts::from_triples(
        &["q1'", "q2'", "q3'", "q5'"],
        "q1'",
        &[("q1'", "a", "q2'"), ("q2'", "b", "q3'"), ("q2'", "c", "q5'")],
    )
    .expect("well formed")
}

/// Merges the two `a`-successors of [`t_u`]; a morphism that is not open.
pub fn figure_morphism() -> LtsMorphism {
    let map: BTreeMap<String, String> =
        [("q1", "q1'"), ("q2", "q2'"), ("q4", "q2'"), ("q3", "q3'"), ("q5", "q5'")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
    LtsMorphism::new(t_u(), t_d(), map).expect("total and into t_d")
}

/// Two clocks `x`, `y`: `q1 -a-> q2 -b-> q3 -a-> q4 -b-> q2`, with `y` reset on
/// entering `q2` and the guards `y = 1`, `x < 1`, `1 < y ≤ 2` in that order.
pub fn timed_cycle() -> crate::timed::Tts {
    serde_json::from_value(serde_json::json!({
        "states": ["q1", "q2", "q3", "q4"],
        "initial": "q1",
        "clocks": ["x", "y"],
        "transitions": [
            {"src": "q1", "action": "a", "reset": ["y"], "guard": {}, "dst": "q2"},
            {"src": "q2", "action": "b", "guard": {"y": "[1,1]"}, "dst": "q3"},
            {"src": "q3", "action": "a", "guard": {"x": "[0,1)"}, "dst": "q4"},
            {"src": "q4", "action": "b", "reset": ["y"], "guard": {"y": "(1,2]"}, "dst": "q2"}
        ]
    }))
    .expect("well formed")
}

/// The two-mode hybrid system: `M1` with `ẋ = k1, ẏ = -k2`, invariant
/// `y ≥ x - alpha`, observation `y - x`; `M2` with `ẋ = -l1, ẏ = l2`,
/// invariant `x ≥ y - beta`, observation `x - y`. `switch` goes to `M2` when
/// `y ≤ x` and back when `x ≤ y`, both with identity resets. Starts in `M1`
/// at `x = 5, y = 10`.
pub fn hybrid_figure(k1: f64, k2: f64, l1: f64, l2: f64, alpha: f64, beta: f64) -> crate::hybrid::HybridSystem {
    let v = serde_json::json!({
        "params": { "k1": k1, "k2": k2, "l1": l1, "l2": l2, "alpha": alpha, "beta": beta },
        "subsystems": [
            { "name": "s1", "vars": ["x"], "init": ["5"] },
            { "name": "s2", "vars": ["y"], "init": ["10"] }
        ],
        "modes": {
            "M1": { "flow": { "s1": ["k1"], "s2": ["-k2"] }, "invariant": "y >= x - alpha", "observation": ["y - x"] },
            "M2": { "flow": { "s1": ["-l1"], "s2": ["l2"] }, "invariant": "x >= y - beta", "observation": ["x - y"] }
        },
        "events": [
            { "src": "M1", "action": "switch", "dst": "M2", "guard": "y <= x" },
            { "src": "M2", "action": "switch", "dst": "M1", "guard": "x <= y" }
        ],
        "initial": "M1"
    });
    serde_json::from_value(v).expect("well formed")
}

/// [`hybrid_figure`] with unit rates and `alpha = beta = 0`.
pub fn hybrid_figure_default() -> crate::hybrid::HybridSystem {
    hybrid_figure(1.0, 1.0, 1.0, 1.0, 0.0, 0.0)
}
