//! Bisimilarity through open maps for plain, observed, probabilistic, timed
//! and hybrid transition systems.
//!
//! Each system kind comes with its morphisms, its path-shaped objects, a
//! checker for the corresponding bisimilarity, and an executable version of
//! the coreflection that relates it to plain transition systems.

pub mod adjunction;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod frontend;
pub mod game;
pub mod generate;
pub mod hybrid;
pub mod lts;
pub mod observations;
pub mod probabilistic;
pub mod rational;
pub mod timed;
pub mod unfolding;

pub use error::ModelError;
pub use lts::{Lts, LtsMorphism, Transition};
