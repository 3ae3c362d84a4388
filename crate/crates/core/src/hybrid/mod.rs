//! Hybrid systems with subsystems evolving by ODEs, their translation into
//! transition systems labelled by `(action, time)`, morphisms with bounded
//! observation distortion, the embedding `ι` of observed trees over a finite
//! subsystem basis, and a bounded approximate bisimulation game.
//!
//! All continuous quantities are `f64`, integrated by fixed-step RK4; every
//! comparison of computed values goes through [`IntegratorConfig::tolerance`].

mod bisim;
mod instance;
mod iota;
mod morphism;
mod numerics;
mod system;
mod unfold;

pub use bisim::{approx_bisim_hybrid, validate_hybrid_strategy, HybridBisimVerdict, HybridStrategy};
pub use instance::HybridInstance;
pub use iota::{
    counit_entries, counit_with_basis, hybrid_counit, hybrid_eta_rho, iota_hybrid, BasisEntry, BasisTemplate, HybridCounit,
    HybridCounitReport, HybridEtaRho, TreeEvent,
};
pub use morphism::{
    check_hybrid_morphism, compose_hybrid, ConditionResult, ConditionStatus, HybridMorphism, HybridMorphismReport,
};
pub use numerics::{
    flatten, flow, integrate, moves, obs_distance, observe, sample_times, sup_distance, HybridConfig, IntegratorConfig,
    Successor, Trajectory, Valuation,
};
pub use system::{format_f64, number_from_json, Event, Guard, HybridSystem, Invariant, Mode, Subsystem};
pub use unfold::{h_unfold, k_translate, tree_words, HFragment, HybridRun, KSystem};

#[cfg(test)]
mod tests;
