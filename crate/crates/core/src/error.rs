use thiserror::Error;

/// A value violates the structural rules of its kind.
///
/// These are input problems, distinct from negative verdicts: a well-formed
/// map that fails to preserve a transition is reported by a checker, not here.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("initial state `{0}` is not a declared state")]
    UnknownInitial(String),
    #[error("transition {transition} uses undeclared state `{state}`")]
    UnknownState { transition: String, state: String },
    #[error("state map has no image for `{0}`")]
    MissingImage(String),
    #[error("state map sends `{state}` to `{image}`, which is not a target state")]
    UnknownImage { state: String, image: String },
    #[error("state map mentions `{0}`, which is not a source state")]
    ExtraneousState(String),
    #[error("morphisms do not compose: {0}")]
    NotComposable(String),
    #[error("not a valid morphism: {0}")]
    InvalidMorphism(String),
    #[error("{0}")]
    Invariant(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

impl ModelError {
    pub fn invariant(msg: impl Into<String>) -> Self {
        ModelError::Invariant(msg.into())
    }
}

/// Prefix of deserialization errors raised by validation of a well-shaped
/// value, as opposed to errors in its shape.
pub const INVARIANT_PREFIX: &str = "invariant violation: ";

pub(crate) fn invalid<E: serde::de::Error>(e: impl std::fmt::Display) -> E {
    E::custom(format!("{INVARIANT_PREFIX}{e}"))
}
