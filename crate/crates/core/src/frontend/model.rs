use std::collections::BTreeMap;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::error::INVARIANT_PREFIX;
use crate::hybrid::HybridSystem;
use crate::lts::{Lts, StateId};
use crate::observations::ObsSystem;
use crate::probabilistic::ProbSystem;
use crate::timed::{TimedLabel, TimedWord, Tts};
use crate::unfolding::is_tree;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Lts,
    Obs,
    Prob,
    Tts,
    Hybrid,
    /// A finite observed timed tree.
    Tree,
    Morphism,
    Words,
    Samples,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("unit variants serialize");
        f.write_str(v.as_str().expect("kebab-case string"))
    }
}

/// State (or mode) map plus the maps and bound some kinds need. `clock_map`
/// and `subsystem_map` go from target names to source names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismFile {
    pub map: BTreeMap<StateId, StateId>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub clock_map: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub subsystem_map: BTreeMap<String, String>,
    /// Rational text; hybrid morphisms also accept decimals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
}

/// An arrow between two sample objects, by index; `rich` arrows join rich
/// objects. The optional maps and bound are as in [`MorphismFile`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowEntry {
    pub source: usize,
    pub target: usize,
    #[serde(default)]
    pub rich: bool,
    pub map: BTreeMap<StateId, StateId>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub clock_map: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub subsystem_map: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
}

/// A subsystem kind for hybrid `ι`: flow everywhere, optional reset on every event.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateEntry {
    pub name: String,
    pub vars: Vec<String>,
    pub init: Vec<Value>,
    pub flow: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reset: Option<Vec<String>>,
}

/// Inputs of a law check. Objects are payloads of the instance's base kind
/// (`lts` for prob, timed trees for timed, observed timed trees for hybrid),
/// rich objects payloads of its rich kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    #[serde(default)]
    pub objects: Vec<Value>,
    #[serde(default)]
    pub rich: Vec<Value>,
    #[serde(default)]
    pub arrows: Vec<ArrowEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub words: Vec<TimedWord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub templates: Vec<TemplateEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Lts(Lts),
    Obs(ObsSystem),
    Prob(ProbSystem),
    Tts(Tts),
    Hybrid(HybridSystem),
    Tree(ObsSystem<TimedLabel>),
    Morphism(MorphismFile),
    Words(Vec<TimedWord>),
    Samples(Samples),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Lts(_) => ModelKind::Lts,
            Model::Obs(_) => ModelKind::Obs,
            Model::Prob(_) => ModelKind::Prob,
            Model::Tts(_) => ModelKind::Tts,
            Model::Hybrid(_) => ModelKind::Hybrid,
            Model::Tree(_) => ModelKind::Tree,
            Model::Morphism(_) => ModelKind::Morphism,
            Model::Words(_) => ModelKind::Words,
            Model::Samples(_) => ModelKind::Samples,
        }
    }

    pub fn payload(&self) -> Value {
        let v = match self {
            Model::Lts(x) => serde_json::to_value(x),
            Model::Obs(x) => serde_json::to_value(x),
            Model::Prob(x) => serde_json::to_value(x),
            Model::Tts(x) => serde_json::to_value(x),
            Model::Hybrid(x) => serde_json::to_value(x),
            Model::Tree(x) => serde_json::to_value(x),
            Model::Morphism(x) => serde_json::to_value(x),
            Model::Words(x) => serde_json::to_value(x),
            Model::Samples(x) => serde_json::to_value(x),
        };
        v.expect("models serialize")
    }

    /// The whole file, ready for [`parse_model`].
    pub fn to_file(&self) -> Value {
        serde_json::json!({ "format_version": FORMAT_VERSION, "kind": self.kind(), "payload": self.payload() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseErrorKind {
    /// Not JSON.
    Syntax,
    /// JSON of the wrong shape: missing or unknown fields, wrong types.
    Schema,
    /// Well-shaped but violating a rule of the kind.
    Invariant,
}

/// Lines and columns are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[error("{kind:?} error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn from_json(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        let raw = e.to_string();
        // serde_json appends " at line L column C"; the fields carry that.
        let message = raw.rsplit_once(" at line ").map_or(raw.as_str(), |(m, _)| m).to_string();
        let (kind, message) = match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => (ParseErrorKind::Syntax, message),
            Category::Data => match message.strip_prefix(INVARIANT_PREFIX) {
                Some(m) => (ParseErrorKind::Invariant, m.to_string()),
                None => (ParseErrorKind::Schema, message),
            },
        };
        ParseError { kind, line: e.line().max(1), column: e.column().max(1), message }
    }

    fn at(text: &str, key: &str, kind: ParseErrorKind, message: String) -> Self {
        let (line, column) = locate(text, key);
        ParseError { kind, line, column, message }
    }
}

/// Position of the first occurrence of `"key"`, or the start of the text.
fn locate(text: &str, key: &str) -> (usize, usize) {
    let Some(off) = text.find(&format!("\"{key}\"")) else { return (1, 1) };
    let before = &text[..off];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<T> {
    format_version: u64,
    #[allow(dead_code)]
    kind: ModelKind,
    payload: T,
}

#[derive(Deserialize)]
struct Header {
    format_version: Value,
    kind: ModelKind,
}

fn typed<T: DeserializeOwned>(text: &str) -> Result<(u64, T), ParseError> {
    let env: Envelope<T> = serde_json::from_str(text).map_err(ParseError::from_json)?;
    Ok((env.format_version, env.payload))
}

/// Parses and validates a model file `{format_version, kind, payload}`.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let _: Value = serde_json::from_str(text).map_err(ParseError::from_json)?;
    let header: Header = serde_json::from_str::<Header>(text).map_err(ParseError::from_json)?;
    if header.format_version != FORMAT_VERSION {
        return Err(ParseError::at(
            text,
            "format_version",
            ParseErrorKind::Schema,
            format!("unsupported format_version {}, expected {FORMAT_VERSION}", header.format_version),
        ));
    }
    let model = match header.kind {
        ModelKind::Lts => Model::Lts(typed(text)?.1),
        ModelKind::Obs => Model::Obs(typed(text)?.1),
        ModelKind::Prob => Model::Prob(typed(text)?.1),
        ModelKind::Tts => Model::Tts(typed(text)?.1),
        ModelKind::Hybrid => Model::Hybrid(typed(text)?.1),
        ModelKind::Tree => {
            let t: ObsSystem<TimedLabel> = typed(text)?.1;
            if !is_tree(t.lts()) {
                return Err(ParseError::at(text, "payload", ParseErrorKind::Invariant, "the system is not a tree".into()));
            }
            Model::Tree(t)
        }
        ModelKind::Morphism => Model::Morphism(typed(text)?.1),
        ModelKind::Words => Model::Words(typed(text)?.1),
        ModelKind::Samples => Model::Samples(typed(text)?.1),
    };
    Ok(model)
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

pub fn load_model(path: &std::path::Path) -> Result<Model, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    parse_model(&text).map_err(|source| LoadError::Parse { path: path.display().to_string(), source })
}
