use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::schema::{Constraints, Datatype, SchemaNode};
use super::{ApiSpec, SpecError};
use crate::path::JsonPath;

/// Schema facts about the elements of a primitive-valued array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementSchema {
    pub datatype: Datatype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, rename = "enum", skip_serializing_if = "Option::is_none")]
    pub enum_values: Option<Vec<Value>>,
    #[serde(default)]
    pub nullable: bool,
    #[serde(default, skip_serializing_if = "Constraints::is_empty")]
    pub constraints: Constraints,
}

/// One addressable node of an operation's response schema.
///
/// Primitive leaves and array nodes are fields; object nodes are not (their
/// leaves are). `datatype` keeps the OpenAPI distinction between `integer`
/// and `number`; use [`Datatype::unified`] for oracle selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResponseField {
    pub path: JsonPath,
    pub name: String,
    pub datatype: Datatype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_datatype: Option<Datatype>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, rename = "enum", skip_serializing_if = "Option::is_none")]
    pub enum_values: Option<Vec<Value>>,
    #[serde(default)]
    pub nullable: bool,
    #[serde(default, skip_serializing_if = "Constraints::is_empty")]
    pub constraints: Constraints,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<ElementSchema>,
}

impl ResponseField {
    /// Whether oracles can be asked about this field: primitives, and arrays
    /// whose elements are primitives.
    pub fn is_oracle_bearing(&self) -> bool {
        match self.datatype {
            Datatype::Object => false,
            Datatype::Array => self.element_datatype.is_some_and(Datatype::is_primitive),
            _ => true,
        }
    }
}

/// Flatten the success schema of `operation_id` into response fields,
/// depth first, in property order.
pub fn extract_fields(spec: &ApiSpec, operation_id: &str) -> Result<Vec<ResponseField>, SpecError> {
    let op = spec.operation(operation_id)?;
    let mut out = Vec::new();
    walk(&op.success_schema, JsonPath::root(), &mut out);
    Ok(out)
}

fn walk(node: &SchemaNode, path: JsonPath, out: &mut Vec<ResponseField>) {
    if node.cycle.is_some() {
        return;
    }
    let Some(datatype) = node.effective_type() else { return };
    match datatype {
        Datatype::Object => {
            for (key, child) in &node.properties {
                walk(child, path.key(key), out);
            }
        }
        Datatype::Array => {
            let items = node.items.as_deref();
            let element_datatype = Some(items.and_then(SchemaNode::effective_type).unwrap_or(Datatype::Object));
            let element = items
                .filter(|i| i.effective_type().is_some_and(Datatype::is_primitive))
                .map(|i| ElementSchema {
                    datatype: i.effective_type().expect("filtered"),
                    format: i.format.clone(),
                    enum_values: i.enum_values.clone(),
                    nullable: i.nullable,
                    constraints: i.constraints.clone(),
                });
            out.push(leaf(node, &path, datatype, element_datatype, element));
            if let Some(items) = items {
                if matches!(items.effective_type(), Some(Datatype::Object | Datatype::Array)) {
                    walk(items, path.wildcard(), out);
                }
            }
        }
        primitive => out.push(leaf(node, &path, primitive, None, None)),
    }
}

fn leaf(
    node: &SchemaNode,
    path: &JsonPath,
    datatype: Datatype,
    element_datatype: Option<Datatype>,
    element: Option<ElementSchema>,
) -> ResponseField {
    ResponseField {
        path: path.clone(),
        name: path.last_key().unwrap_or("$").to_string(),
        datatype,
        element_datatype,
        description: node.description.clone(),
        example: node.example.clone(),
        format: node.format.clone(),
        enum_values: node.enum_values.clone(),
        nullable: node.nullable,
        constraints: node.constraints.clone(),
        element,
    }
}
