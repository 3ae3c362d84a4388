//! Model files, subcommands and witnesses.
//!
//! Every file is `{"format_version": 1, "kind": ..., "payload": ...}`.
//! Rationals are `"num/den"` strings (integers and decimals are accepted on
//! input); hybrid numbers are decimal strings read as binary64.

pub mod commands;
pub mod model;
pub mod witness;

pub use commands::{BisimArgs, CommandError, Outcome, SampleArgs, Translation, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_VERDICT};
pub use model::{load_model, parse_model, Model, ModelKind, MorphismFile, ParseError, ParseErrorKind, Samples, FORMAT_VERSION};
pub use witness::{recheck, Witness};
