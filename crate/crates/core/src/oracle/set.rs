use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::types::{OracleType, OracleValue};
use crate::path::JsonPath;
use crate::spec::{Datatype, ResponseField};

/// Where the oracles of one field came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Llm,
    Heuristic,
    HumanEdited,
    GroundTruth,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Llm => "llm",
            Self::Heuristic => "heuristic",
            Self::HumanEdited => "human-edited",
            Self::GroundTruth => "ground-truth",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Self::Llm, Self::Heuristic, Self::HumanEdited, Self::GroundTruth].into_iter().find(|p| p.as_str() == s)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The asserted oracles of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldOracles {
    pub provenance: Provenance,
    pub oracles: BTreeMap<OracleType, OracleValue>,
}

/// Asserted oracles of one operation, keyed by field path then oracle type.
///
/// Only asserted values are stored; inserting a no-oracle encoding removes
/// the entry instead.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSet {
    pub operation_id: String,
    entries: BTreeMap<JsonPath, FieldOracles>,
}

#[derive(Debug, Error)]
pub enum OracleSetError {
    #[error("failed to read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("oracle file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed oracle file: {0}")]
    Shape(String),
}

/// A problem found while reading an oracle file leniently; the offending
/// entry is dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

/// An entry that does not fit the operation's response fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchemaMismatch {
    UnknownPath { path: JsonPath },
    IncompatibleType { path: JsonPath, oracle_type: OracleType, datatype: Datatype },
}

impl SchemaMismatch {
    pub fn path(&self) -> &JsonPath {
        match self {
            Self::UnknownPath { path } | Self::IncompatibleType { path, .. } => path,
        }
    }
}

impl fmt::Display for SchemaMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnknownPath { path } => write!(f, "{path}: no such response field"),
            Self::IncompatibleType { path, oracle_type, datatype } => {
                write!(f, "{path}: {oracle_type} does not apply to a field of type {datatype}")
            }
        }
    }
}

impl OracleSet {
    pub fn new(operation_id: impl Into<String>) -> Self {
        Self { operation_id: operation_id.into(), entries: BTreeMap::new() }
    }

    /// Set one oracle. Returns `false` (and removes any previous value) when
    /// `value` is a no-oracle encoding or has the wrong shape for `oracle`.
    pub fn insert(&mut self, path: JsonPath, oracle: OracleType, value: OracleValue, provenance: Provenance) -> bool {
        if !value.is_asserted() || value.kind() != oracle.value_kind() {
            self.remove(&path, oracle);
            return false;
        }
        let entry = self
            .entries
            .entry(path)
            .or_insert_with(|| FieldOracles { provenance, oracles: BTreeMap::new() });
        entry.provenance = provenance;
        entry.oracles.insert(oracle, value);
        true
    }

    pub fn remove(&mut self, path: &JsonPath, oracle: OracleType) -> Option<OracleValue> {
        let field = self.entries.get_mut(path)?;
        let old = field.oracles.remove(&oracle);
        if field.oracles.is_empty() {
            self.entries.remove(path);
        }
        old
    }

    pub fn get(&self, path: &JsonPath, oracle: OracleType) -> Option<&OracleValue> {
        self.entries.get(path)?.oracles.get(&oracle)
    }

    pub fn field(&self, path: &JsonPath) -> Option<&FieldOracles> {
        self.entries.get(path)
    }

    pub fn fields(&self) -> impl Iterator<Item = (&JsonPath, &FieldOracles)> {
        self.entries.iter()
    }

    /// All `(path, type, value)` triples ordered by path then type.
    pub fn iter(&self) -> impl Iterator<Item = (&JsonPath, OracleType, &OracleValue)> {
        self.entries.iter().flat_map(|(p, f)| f.oracles.iter().map(move |(t, v)| (p, *t, v)))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(|f| f.oracles.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn set_provenance(&mut self, provenance: Provenance) {
        for f in self.entries.values_mut() {
            f.provenance = provenance;
        }
    }

    /// Copy every entry of `other` into this set, overwriting clashes.
    pub fn extend_from(&mut self, other: &OracleSet) {
        for (path, ty, value) in other.iter() {
            let prov = other.entries[path].provenance;
            self.insert(path.clone(), ty, value.clone(), prov);
        }
    }

    /// Remove the entries reported by [`validate_set`] and return them.
    pub fn strip_mismatches(&mut self, fields: &[ResponseField]) -> Vec<SchemaMismatch> {
        let mismatches = validate_set(self, fields);
        for m in &mismatches {
            match m {
                SchemaMismatch::UnknownPath { path } => {
                    self.entries.remove(path);
                }
                SchemaMismatch::IncompatibleType { path, oracle_type, .. } => {
                    self.remove(path, *oracle_type);
                }
            }
        }
        mismatches
    }

    pub fn to_json(&self) -> Value {
        let mut fields = Map::new();
        let mut provenance = Map::new();
        for (path, f) in &self.entries {
            let oracles: Map<String, Value> = f.oracles.iter().map(|(t, v)| (t.key(), v.to_json())).collect();
            fields.insert(path.to_string(), Value::Object(oracles));
            provenance.insert(path.to_string(), Value::from(f.provenance.as_str()));
        }
        serde_json::json!({
            "operationId": self.operation_id,
            "fields": fields,
            "provenance": provenance,
        })
    }

    /// Pretty JSON text with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json values serialize");
        s.push('\n');
        s
    }

    /// Strict decoding: any unknown path syntax, oracle key or value shape is
    /// an error. No-oracle encodings are accepted and skipped.
    pub fn from_json(value: &Value, default_provenance: Provenance) -> Result<Self, OracleSetError> {
        let (set, diagnostics) = Self::from_json_lenient(value, default_provenance)?;
        match diagnostics.into_iter().next() {
            Some(d) => Err(OracleSetError::Shape(format!("{}: {}", d.location, d.message))),
            None => Ok(set),
        }
    }

    /// Lenient decoding for hand-edited files: bad entries are dropped and
    /// reported; only a broken top-level structure is an error.
    pub fn from_json_lenient(
        value: &Value,
        default_provenance: Provenance,
    ) -> Result<(Self, Vec<Diagnostic>), OracleSetError> {
        let obj = value.as_object().ok_or_else(|| OracleSetError::Shape("top level must be an object".into()))?;
        let operation_id = obj
            .get("operationId")
            .and_then(Value::as_str)
            .ok_or_else(|| OracleSetError::Shape("missing string `operationId`".into()))?;
        let fields = match obj.get("fields") {
            None => Map::new(),
            Some(Value::Object(m)) => m.clone(),
            Some(_) => return Err(OracleSetError::Shape("`fields` must be an object".into())),
        };
        let provenance = obj.get("provenance").and_then(Value::as_object);
        let mut set = Self::new(operation_id);
        let mut diagnostics = Vec::new();
        let mut diag = |location: String, message: String| diagnostics.push(Diagnostic { location, message });
        for (raw_path, oracles) in &fields {
            let path = match JsonPath::parse(raw_path) {
                Ok(p) => p,
                Err(e) => {
                    diag(raw_path.clone(), format!("invalid path: {e}"));
                    continue;
                }
            };
            let prov = match provenance.and_then(|p| p.get(raw_path)) {
                None => default_provenance,
                Some(v) => match v.as_str().and_then(Provenance::parse) {
                    Some(p) => p,
                    None => {
                        diag(raw_path.clone(), format!("unknown provenance {v}"));
                        default_provenance
                    }
                },
            };
            let Some(oracles) = oracles.as_object() else {
                diag(raw_path.clone(), "oracles must be an object".into());
                continue;
            };
            for (key, raw) in oracles {
                let location = format!("{raw_path}.{key}");
                let Some(ty) = OracleType::from_key(key) else {
                    diag(location, "unknown oracle type".into());
                    continue;
                };
                match OracleValue::from_json(ty.value_kind(), raw) {
                    Ok(v) => {
                        set.insert(path.clone(), ty, v, prov);
                    }
                    Err(e) => diag(location, e.to_string()),
                }
            }
        }
        Ok((set, diagnostics))
    }

    pub fn from_json_str(text: &str, default_provenance: Provenance) -> Result<Self, OracleSetError> {
        Self::from_json(&serde_json::from_str(text)?, default_provenance)
    }

    pub fn load(path: impl AsRef<Path>, default_provenance: Provenance) -> Result<Self, OracleSetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| OracleSetError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text, default_provenance)
    }
}

/// Entries of `oracles` whose path is not a field of `fields` or whose type
/// does not apply to the field's datatype.
pub fn validate_set(oracles: &OracleSet, fields: &[ResponseField]) -> Vec<SchemaMismatch> {
    let mut out = Vec::new();
    for (path, f) in &oracles.entries {
        let Some(field) = fields.iter().find(|x| &x.path == path) else {
            out.push(SchemaMismatch::UnknownPath { path: path.clone() });
            continue;
        };
        for ty in f.oracles.keys() {
            if !ty.compatible_with(field) {
                out.push(SchemaMismatch::IncompatibleType {
                    path: path.clone(),
                    oracle_type: *ty,
                    datatype: field.datatype,
                });
            }
        }
    }
    out
}
