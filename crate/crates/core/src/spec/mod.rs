//! OpenAPI 3.x loading and response-field flattening.

mod field;
mod schema;

pub use field::{extract_fields, ElementSchema, ResponseField};
pub use schema::{Constraints, Datatype, SchemaNode};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use schema::SchemaBuilder;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("failed to read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("unresolvable reference {0}")]
    Ref(String),
    #[error("unsupported OpenAPI version `{0}` (3.x required)")]
    UnsupportedVersion(String),
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    Get,
    Put,
    Post,
    Delete,
    Options,
    Head,
    Patch,
    Trace,
}

impl HttpMethod {
    const ALL: [(&'static str, HttpMethod); 8] = [
        ("get", HttpMethod::Get),
        ("put", HttpMethod::Put),
        ("post", HttpMethod::Post),
        ("delete", HttpMethod::Delete),
        ("options", HttpMethod::Options),
        ("head", HttpMethod::Head),
        ("patch", HttpMethod::Patch),
        ("trace", HttpMethod::Trace),
    ];

    fn from_key(key: &str) -> Option<Self> {
        Self::ALL.iter().find(|(k, _)| *k == key).map(|(_, m)| *m)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Get => "GET",
            Self::Put => "PUT",
            Self::Post => "POST",
            Self::Delete => "DELETE",
            Self::Options => "OPTIONS",
            Self::Head => "HEAD",
            Self::Patch => "PATCH",
            Self::Trace => "TRACE",
        }
    }
}

impl fmt::Display for HttpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One API operation and its selected success-response schema.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationRef {
    pub operation_id: String,
    pub method: HttpMethod,
    pub path_template: String,
    /// Status code key the schema was taken from (`"200"`, `"201"`, `"default"`).
    pub success_status: Option<String>,
    /// Empty when the operation has no JSON success body.
    pub success_schema: SchemaNode,
    /// The raw (unresolved) success schema as written in the document.
    pub raw_success_schema: Option<Value>,
    pub warnings: Vec<String>,
}

/// A parsed OpenAPI document.
#[derive(Debug, Clone)]
pub struct ApiSpec {
    pub title: String,
    pub openapi_version: String,
    pub server_url: Option<String>,
    pub operations: Vec<OperationRef>,
    /// The whole document, kept for `$ref` resolution by downstream tools.
    pub document: Value,
}

impl ApiSpec {
    pub fn operation(&self, operation_id: &str) -> Result<&OperationRef, SpecError> {
        self.operations
            .iter()
            .find(|o| o.operation_id == operation_id)
            .ok_or_else(|| SpecError::UnknownOperation(operation_id.to_string()))
    }

    pub fn operation_ids(&self) -> impl Iterator<Item = &str> {
        self.operations.iter().map(|o| o.operation_id.as_str())
    }
}

/// Load a spec from a YAML or JSON file.
pub fn load_spec(path: impl AsRef<Path>) -> Result<ApiSpec, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    load_spec_str(&text)
}

/// Load a spec from YAML or JSON text.
pub fn load_spec_str(text: &str) -> Result<ApiSpec, SpecError> {
    let document = parse_document(text)?;
    build_spec(document)
}

fn parse_document(text: &str) -> Result<Value, SpecError> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| SpecError::Parse(e.to_string()));
    }
    let yaml: serde_yaml::Value =
        serde_yaml::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
    yaml_to_json(yaml)
}

// YAML allows non-string keys (`200:`), which serde_json maps reject, so the
// conversion is done by hand.
fn yaml_to_json(value: serde_yaml::Value) -> Result<Value, SpecError> {
    use serde_yaml::Value as Y;
    Ok(match value {
        Y::Null => Value::Null,
        Y::Bool(b) => Value::Bool(b),
        Y::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::from(i)
            } else if let Some(u) = n.as_u64() {
                Value::from(u)
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                serde_json::Number::from_f64(f)
                    .map(Value::Number)
                    .ok_or_else(|| SpecError::Parse(format!("non-finite number {f}")))?
            }
        }
        Y::String(s) => Value::String(s),
        Y::Sequence(items) => Value::Array(items.into_iter().map(yaml_to_json).collect::<Result<_, _>>()?),
        Y::Mapping(map) => {
            let mut out = serde_json::Map::new();
            for (k, v) in map {
                let key = match k {
                    Y::String(s) => s,
                    Y::Number(n) => n.to_string(),
                    Y::Bool(b) => b.to_string(),
                    other => return Err(SpecError::Parse(format!("unsupported mapping key {other:?}"))),
                };
                out.insert(key, yaml_to_json(v)?);
            }
            Value::Object(out)
        }
        Y::Tagged(tagged) => yaml_to_json(tagged.value)?,
    })
}

fn build_spec(document: Value) -> Result<ApiSpec, SpecError> {
    let Some(root) = document.as_object() else {
        return Err(SpecError::Parse("top level is not a mapping".into()));
    };
    let version = match root.get("openapi") {
        Some(Value::String(v)) => v.clone(),
        Some(other) => other.to_string(),
        None => {
            let swagger = root.get("swagger").map(|v| v.to_string()).unwrap_or_else(|| "missing".into());
            return Err(SpecError::UnsupportedVersion(swagger.trim_matches('"').to_string()));
        }
    };
    if !version.starts_with("3.") {
        return Err(SpecError::UnsupportedVersion(version));
    }
    let title = root
        .get("info")
        .and_then(|i| i.get("title"))
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    let server_url = root
        .get("servers")
        .and_then(Value::as_array)
        .and_then(|s| s.first())
        .and_then(|s| s.get("url"))
        .and_then(Value::as_str)
        .map(str::to_string);

    let mut operations = Vec::new();
    if let Some(paths) = root.get("paths").and_then(Value::as_object) {
        for (path_template, item) in paths {
            let Some(item) = item.as_object() else { continue };
            for (key, op) in item {
                let Some(method) = HttpMethod::from_key(key) else { continue };
                operations.push(build_operation(&document, path_template, method, op)?);
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    for op in &operations {
        if !seen.insert(op.operation_id.clone()) {
            return Err(SpecError::Parse(format!("duplicate operationId `{}`", op.operation_id)));
        }
    }
    Ok(ApiSpec { title, openapi_version: version, server_url, operations, document })
}

fn build_operation(
    document: &Value,
    path_template: &str,
    method: HttpMethod,
    op: &Value,
) -> Result<OperationRef, SpecError> {
    let mut path_template = path_template.to_string();
    if !path_template.starts_with('/') {
        path_template.insert(0, '/');
    }
    let operation_id = op
        .get("operationId")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .unwrap_or_else(|| format!("{method} {path_template}"));

    let mut warnings = Vec::new();
    let responses = op.get("responses").and_then(Value::as_object);
    let selected = responses.and_then(select_success);
    let mut success_status = None;
    let mut raw_success_schema = None;
    let mut success_schema = SchemaNode::default();

    if let Some((status, response)) = selected {
        success_status = Some(status.clone());
        let response = resolve_response_ref(document, response)?;
        if let Some(content) = response.get("content").and_then(Value::as_object) {
            let json_media = content.iter().find(|(media, _)| is_json_media(media));
            for (media, _) in content.iter().filter(|(m, _)| !is_json_media(m)) {
                warnings.push(format!("{operation_id}: skipping non-JSON media type `{media}`"));
            }
            if let Some((_, media)) = json_media {
                if let Some(raw) = media.get("schema") {
                    let mut builder = SchemaBuilder::new(document);
                    success_schema = builder.build(raw, &operation_id)?;
                    warnings.append(&mut builder.warnings);
                    raw_success_schema = Some(raw.clone());
                }
            }
        }
    } else {
        warnings.push(format!("{operation_id}: no 2XX or default response"));
    }

    Ok(OperationRef {
        operation_id,
        method,
        path_template,
        success_status,
        success_schema,
        raw_success_schema,
        warnings,
    })
}

fn resolve_response_ref<'a>(document: &'a Value, response: &'a Value) -> Result<&'a Value, SpecError> {
    match response.get("$ref").and_then(Value::as_str) {
        Some(r) => document
            .pointer(r.trim_start_matches('#'))
            .ok_or_else(|| SpecError::Ref(format!("{r}: target does not exist"))),
        None => Ok(response),
    }
}

fn is_json_media(media: &str) -> bool {
    media.split(';').next().map(str::trim) == Some("application/json")
}

/// `200`, else the lowest other 2XX code (`2XX` ranks after concrete codes),
/// else `default`.
fn select_success(responses: &serde_json::Map<String, Value>) -> Option<(&String, &Value)> {
    if let Some(entry) = responses.get_key_value("200") {
        return Some(entry);
    }
    let two_xx = responses
        .iter()
        .filter(|(k, _)| k.len() == 3 && k.starts_with('2'))
        .min_by_key(|(k, _)| k.to_ascii_uppercase().replace('X', "9"));
    two_xx.or_else(|| responses.get_key_value("default"))
}
