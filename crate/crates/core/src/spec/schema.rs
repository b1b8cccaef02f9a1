//! Resolved OpenAPI schema trees.
//!
//! Local `$ref` pointers are inlined while building, `allOf` branches are
//! merged by property union and `oneOf`/`anyOf` collapse to their first
//! branch. Recursive references are cut at the first revisit and the cut
//! node is marked with the reference chain.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::SpecError;

/// JSON datatypes a schema node can declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    String,
    Boolean,
    Number,
    Integer,
    Object,
    Array,
}

impl Datatype {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "string" => Self::String,
            "boolean" => Self::Boolean,
            "number" => Self::Number,
            "integer" => Self::Integer,
            "object" => Self::Object,
            "array" => Self::Array,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::String => "string",
            Self::Boolean => "boolean",
            Self::Number => "number",
            Self::Integer => "integer",
            Self::Object => "object",
            Self::Array => "array",
        }
    }

    /// Datatype used for oracle selection: `integer` folds into `number`.
    pub fn unified(self) -> Self {
        match self {
            Self::Integer => Self::Number,
            other => other,
        }
    }

    pub fn is_primitive(self) -> bool {
        matches!(self, Self::String | Self::Boolean | Self::Number | Self::Integer)
    }

    /// Whether a JSON value has this type. `null` never matches.
    pub fn matches(self, value: &Value) -> bool {
        match self {
            Self::String => value.is_string(),
            Self::Boolean => value.is_boolean(),
            Self::Number => value.is_number(),
            Self::Integer => match value {
                Value::Number(n) => n.is_i64() || n.is_u64() || n.as_f64().is_some_and(|f| f.fract() == 0.0),
                _ => false,
            },
            Self::Object => value.is_object(),
            Self::Array => value.is_array(),
        }
    }
}

impl std::fmt::Display for Datatype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Validation keywords that restrict the values a node admits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Constraints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximum: Option<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub exclusive_minimum: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub exclusive_maximum: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_length: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_length: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_items: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_items: Option<u64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub unique_items: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Constraints {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Whether `value` satisfies every keyword that applies to its JSON type.
    pub fn admits(&self, value: &Value) -> bool {
        match value {
            Value::Number(n) => {
                let Some(x) = n.as_f64() else { return false };
                if let Some(min) = self.minimum {
                    if x < min || (self.exclusive_minimum && x == min) {
                        return false;
                    }
                }
                if let Some(max) = self.maximum {
                    if x > max || (self.exclusive_maximum && x == max) {
                        return false;
                    }
                }
                true
            }
            Value::String(s) => {
                let len = s.chars().count() as u64;
                if self.min_length.is_some_and(|m| len < m) || self.max_length.is_some_and(|m| len > m) {
                    return false;
                }
                match &self.pattern {
                    Some(p) => regex::Regex::new(p).map(|re| re.is_match(s)).unwrap_or(true),
                    None => true,
                }
            }
            Value::Array(items) => {
                let len = items.len() as u64;
                if self.min_items.is_some_and(|m| len < m) || self.max_items.is_some_and(|m| len > m) {
                    return false;
                }
                if self.unique_items {
                    for (i, a) in items.iter().enumerate() {
                        if items[i + 1..].contains(a) {
                            return false;
                        }
                    }
                }
                true
            }
            _ => true,
        }
    }
}

/// A schema node with all local references inlined.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchemaNode {
    pub schema_type: Option<Datatype>,
    pub properties: IndexMap<String, SchemaNode>,
    pub required: Vec<String>,
    pub items: Option<Box<SchemaNode>>,
    pub description: Option<String>,
    pub example: Option<Value>,
    pub format: Option<String>,
    pub enum_values: Option<Vec<Value>>,
    pub nullable: bool,
    pub constraints: Constraints,
    /// Set when recursion was cut here; holds the reference chain.
    pub cycle: Option<String>,
}

impl SchemaNode {
    /// Declared type, or the one implied by `properties` / `items`.
    pub fn effective_type(&self) -> Option<Datatype> {
        self.schema_type.or_else(|| {
            if !self.properties.is_empty() {
                Some(Datatype::Object)
            } else if self.items.is_some() {
                Some(Datatype::Array)
            } else {
                None
            }
        })
    }

    fn merge_from(&mut self, other: SchemaNode, context: &str, warnings: &mut Vec<String>) {
        if other.schema_type.is_some() {
            self.schema_type = other.schema_type;
        }
        for (k, v) in other.properties {
            if self.properties.contains_key(&k) {
                warnings.push(format!(
                    "{context}: allOf branches both define property `{k}`; the later definition wins"
                ));
            }
            self.properties.insert(k, v);
        }
        for r in other.required {
            if !self.required.contains(&r) {
                self.required.push(r);
            }
        }
        if other.items.is_some() {
            self.items = other.items;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(description, example, format, enum_values, cycle);
        self.nullable |= other.nullable;
        let c = other.constraints;
        macro_rules! take_c {
            ($($f:ident),*) => { $( if c.$f.is_some() { self.constraints.$f = c.$f; } )* };
        }
        take_c!(minimum, maximum, min_length, max_length, pattern, min_items, max_items);
        self.constraints.exclusive_minimum |= c.exclusive_minimum;
        self.constraints.exclusive_maximum |= c.exclusive_maximum;
        self.constraints.unique_items |= c.unique_items;
    }
}

pub(crate) struct SchemaBuilder<'a> {
    document: &'a Value,
    ref_stack: Vec<String>,
    pub warnings: Vec<String>,
}

impl<'a> SchemaBuilder<'a> {
    pub fn new(document: &'a Value) -> Self {
        Self { document, ref_stack: Vec::new(), warnings: Vec::new() }
    }

    pub fn build(&mut self, raw: &Value, context: &str) -> Result<SchemaNode, SpecError> {
        let Some(obj) = raw.as_object() else {
            // `true`/`false` schemas and junk are treated as unconstrained.
            return Ok(SchemaNode::default());
        };

        if let Some(reference) = obj.get("$ref").and_then(Value::as_str) {
            if self.ref_stack.iter().any(|r| r == reference) {
                let mut chain = self.ref_stack.clone();
                chain.push(reference.to_string());
                let chain = chain.join(" -> ");
                self.warnings.push(format!("{context}: cyclic schema cut at {chain}"));
                return Ok(SchemaNode { cycle: Some(chain), ..SchemaNode::default() });
            }
            let target = self.lookup(reference)?;
            self.ref_stack.push(reference.to_string());
            let built = self.build(target, context);
            self.ref_stack.pop();
            let mut node = built?;
            // Sibling annotations next to `$ref` override the target's.
            if let Some(d) = obj.get("description").and_then(Value::as_str) {
                node.description = Some(d.to_string());
            }
            if let Some(e) = obj.get("example") {
                node.example = Some(e.clone());
            }
            if obj.get("nullable").and_then(Value::as_bool) == Some(true) {
                node.nullable = true;
            }
            return Ok(node);
        }

        let mut node = self.build_plain(obj, context)?;

        if let Some(branches) = obj.get("allOf").and_then(Value::as_array) {
            let mut merged = SchemaNode::default();
            for branch in branches {
                let b = self.build(branch, context)?;
                merged.merge_from(b, context, &mut self.warnings);
            }
            let own = std::mem::take(&mut node);
            merged.merge_from(own, context, &mut self.warnings);
            node = merged;
        }
        for key in ["oneOf", "anyOf"] {
            if let Some(branches) = obj.get(key).and_then(Value::as_array) {
                self.warnings.push(format!(
                    "{context}: {key} with {} branches; only the first branch is used",
                    branches.len()
                ));
                if let Some(first) = branches.first() {
                    let mut b = self.build(first, context)?;
                    let own = std::mem::take(&mut node);
                    b.merge_from(own, context, &mut self.warnings);
                    node = b;
                }
            }
        }
        Ok(node)
    }

    fn build_plain(
        &mut self,
        obj: &serde_json::Map<String, Value>,
        context: &str,
    ) -> Result<SchemaNode, SpecError> {
        let mut node = SchemaNode::default();
        match obj.get("type") {
            Some(Value::String(t)) => node.schema_type = Datatype::parse(t),
            Some(Value::Array(ts)) => {
                for t in ts.iter().filter_map(Value::as_str) {
                    if t == "null" {
                        node.nullable = true;
                    } else if node.schema_type.is_none() {
                        node.schema_type = Datatype::parse(t);
                    }
                }
            }
            _ => {}
        }
        if obj.get("nullable").and_then(Value::as_bool) == Some(true) {
            node.nullable = true;
        }
        node.description = obj.get("description").and_then(Value::as_str).map(str::to_string);
        node.example = obj.get("example").cloned().or_else(|| {
            obj.get("examples").and_then(Value::as_array).and_then(|a| a.first().cloned())
        });
        node.format = obj.get("format").and_then(Value::as_str).map(str::to_string);
        node.enum_values = obj.get("enum").and_then(Value::as_array).cloned();
        if let Some(props) = obj.get("properties").and_then(Value::as_object) {
            for (k, v) in props {
                let child = self.build(v, &format!("{context}.{k}"))?;
                node.properties.insert(k.clone(), child);
            }
        }
        if let Some(req) = obj.get("required").and_then(Value::as_array) {
            node.required = req.iter().filter_map(Value::as_str).map(str::to_string).collect();
        }
        if let Some(items) = obj.get("items") {
            node.items = Some(Box::new(self.build(items, &format!("{context}[*]"))?));
        }

        let c = &mut node.constraints;
        c.minimum = obj.get("minimum").and_then(Value::as_f64);
        c.maximum = obj.get("maximum").and_then(Value::as_f64);
        // 3.0 uses booleans, 3.1 uses numbers.
        match obj.get("exclusiveMinimum") {
            Some(Value::Bool(b)) => c.exclusive_minimum = *b,
            Some(Value::Number(n)) => {
                c.minimum = n.as_f64();
                c.exclusive_minimum = true;
            }
            _ => {}
        }
        match obj.get("exclusiveMaximum") {
            Some(Value::Bool(b)) => c.exclusive_maximum = *b,
            Some(Value::Number(n)) => {
                c.maximum = n.as_f64();
                c.exclusive_maximum = true;
            }
            _ => {}
        }
        c.min_length = obj.get("minLength").and_then(Value::as_u64);
        c.max_length = obj.get("maxLength").and_then(Value::as_u64);
        c.pattern = obj.get("pattern").and_then(Value::as_str).map(str::to_string);
        c.min_items = obj.get("minItems").and_then(Value::as_u64);
        c.max_items = obj.get("maxItems").and_then(Value::as_u64);
        c.unique_items = obj.get("uniqueItems").and_then(Value::as_bool).unwrap_or(false);
        Ok(node)
    }

    fn lookup(&self, reference: &str) -> Result<&'a Value, SpecError> {
        let pointer = reference
            .strip_prefix('#')
            .ok_or_else(|| SpecError::Ref(format!("{reference}: only local references are supported")))?;
        self.document
            .pointer(pointer)
            .ok_or_else(|| SpecError::Ref(format!("{reference}: target does not exist")))
    }
}
