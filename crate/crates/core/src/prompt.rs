//! Per-field prompt construction.
//!
//! Every oracle-bearing field gets one prompt made of a fixed system prompt
//! and a user prompt with three sections: context (API, operation, field
//! name and type), properties (the field's OpenAPI keywords, one per line)
//! and oracles (task introduction, numbered questions, response format).
//! All wording lives in a versioned template file.

use std::sync::LazyLock;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::oracle::{number_value, OracleType};
use crate::path::JsonPath;
use crate::spec::{extract_fields, ApiSpec, Datatype, ResponseField, SpecError};

const BUILTIN_TEMPLATES: &str = include_str!("../templates/prompts.v1.yaml");

static BUILTIN: LazyLock<PromptTemplates> =
    LazyLock::new(|| PromptTemplates::from_yaml_str(BUILTIN_TEMPLATES).expect("builtin templates are valid"));

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("field `{path}` has datatype {datatype}; only string, boolean, number and array fields are prompted")]
    UnsupportedDatatype { path: JsonPath, datatype: Datatype },
    #[error("invalid prompt templates: {0}")]
    Template(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Wording of one single-oracle question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub question: String,
    pub answer_type: String,
    pub no_oracle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subjects {
    pub field: String,
    pub element: String,
}

/// The full template file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub version: String,
    pub system: String,
    pub context: String,
    pub properties_header: String,
    pub task_introduction: String,
    pub question_line: String,
    pub response_format: String,
    pub subjects: Subjects,
    /// Keyed by base oracle key, e.g. `string_is_url`.
    pub questions: IndexMap<String, QuestionTemplate>,
}

impl PromptTemplates {
    pub fn builtin() -> &'static PromptTemplates {
        &BUILTIN
    }

    pub fn from_yaml_str(text: &str) -> Result<Self, PromptError> {
        let t: PromptTemplates = serde_yaml::from_str(text).map_err(|e| PromptError::Template(e.to_string()))?;
        for base in crate::oracle::BaseOracle::ALL {
            if !t.questions.contains_key(base.key()) {
                return Err(PromptError::Template(format!("missing question for `{}`", base.key())));
            }
        }
        Ok(t)
    }
}

/// One numbered question of the oracles section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleQuestion {
    pub index: usize,
    pub question: String,
    pub json_property: String,
    pub answer_type: String,
    pub no_oracle_encoding: String,
}

/// The prompt for one response field plus the metadata needed to dispatch
/// it and to read the answer back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptBundle {
    pub field_path: JsonPath,
    pub operation_id: String,
    pub api_name: String,
    pub field_name: String,
    pub datatype: Datatype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_datatype: Option<Datatype>,
    pub system_prompt: String,
    pub user_prompt: String,
    pub expected_keys: Vec<String>,
    pub questions: Vec<OracleQuestion>,
    /// The OpenAPI keywords listed in the properties section.
    pub properties: IndexMap<String, Value>,
    pub template_version: String,
}

impl PromptBundle {
    pub fn expected_types(&self) -> Vec<OracleType> {
        self.expected_keys.iter().filter_map(|k| OracleType::from_key(k)).collect()
    }
}

/// Build the prompt for one field with the builtin templates.
pub fn build_prompt(api_name: &str, operation_id: &str, field: &ResponseField) -> Result<PromptBundle, PromptError> {
    build_prompt_with(PromptTemplates::builtin(), api_name, operation_id, field)
}

pub fn build_prompt_with(
    templates: &PromptTemplates,
    api_name: &str,
    operation_id: &str,
    field: &ResponseField,
) -> Result<PromptBundle, PromptError> {
    let oracles = OracleType::applicable_to(field);
    if oracles.is_empty() {
        return Err(PromptError::UnsupportedDatatype { path: field.path.clone(), datatype: field.datatype });
    }
    let type_text = match (field.datatype, field.element_datatype) {
        (Datatype::Array, Some(e)) => format!("array of {}", e.unified()),
        (d, _) => d.unified().to_string(),
    };
    let context = templates
        .context
        .replace("{operation}", operation_id)
        .replace("{api}", api_name)
        .replace("{name}", &field.name)
        .replace("{type}", &type_text);

    let properties = field_properties(field);
    let mut props_text = templates.properties_header.clone();
    for (k, v) in &properties {
        props_text.push('\n');
        props_text.push_str(&format!("\"{k}\": {}", serde_json::to_string(v).expect("json value")));
    }

    let mut questions = Vec::with_capacity(oracles.len());
    for (i, ty) in oracles.iter().enumerate() {
        let t = &templates.questions[ty.base().key()];
        let subject = if ty.is_element() { &templates.subjects.element } else { &templates.subjects.field };
        questions.push(OracleQuestion {
            index: i + 1,
            question: t.question.replace("{subject}", subject),
            json_property: ty.key(),
            answer_type: t.answer_type.clone(),
            no_oracle_encoding: t.no_oracle.clone(),
        });
    }
    let expected_keys: Vec<String> = questions.iter().map(|q| q.json_property.clone()).collect();

    let mut oracles_text = templates.task_introduction.clone();
    for q in &questions {
        oracles_text.push('\n');
        oracles_text.push_str(
            &templates
                .question_line
                .replace("{index}", &q.index.to_string())
                .replace("{question}", &q.question)
                .replace("{key}", &q.json_property)
                .replace("{answer_type}", &q.answer_type)
                .replace("{no_oracle}", &q.no_oracle_encoding),
        );
    }
    let format_text = templates.response_format.replace("{keys}", &expected_keys.join(", "));

    Ok(PromptBundle {
        field_path: field.path.clone(),
        operation_id: operation_id.to_string(),
        api_name: api_name.to_string(),
        field_name: field.name.clone(),
        datatype: field.datatype,
        element_datatype: field.element_datatype,
        system_prompt: templates.system.clone(),
        user_prompt: [context, props_text, oracles_text, format_text].join("\n\n"),
        expected_keys,
        questions,
        properties,
        template_version: templates.version.clone(),
    })
}

/// One bundle per oracle-bearing field of the operation, in extraction order.
pub fn build_operation_prompts(spec: &ApiSpec, operation_id: &str) -> Result<Vec<PromptBundle>, PromptError> {
    build_operation_prompts_with(PromptTemplates::builtin(), spec, operation_id)
}

pub fn build_operation_prompts_with(
    templates: &PromptTemplates,
    spec: &ApiSpec,
    operation_id: &str,
) -> Result<Vec<PromptBundle>, PromptError> {
    extract_fields(spec, operation_id)?
        .iter()
        .filter(|f| f.is_oracle_bearing())
        .map(|f| build_prompt_with(templates, &spec.title, operation_id, f))
        .collect()
}

fn field_properties(field: &ResponseField) -> IndexMap<String, Value> {
    let mut out = IndexMap::new();
    out.insert("name".to_string(), Value::from(field.name.clone()));
    out.insert("type".to_string(), Value::from(field.datatype.as_str()));
    if let Some(d) = &field.description {
        out.insert("description".to_string(), Value::from(d.clone()));
    }
    if let Some(e) = &field.example {
        out.insert("example".to_string(), e.clone());
    }
    if let Some(f) = &field.format {
        out.insert("format".to_string(), Value::from(f.clone()));
    }
    if let Some(e) = &field.enum_values {
        out.insert("enum".to_string(), Value::Array(e.clone()));
    }
    if field.nullable {
        out.insert("nullable".to_string(), Value::Bool(true));
    }
    push_constraints(&mut out, &field.constraints);
    if let Some(el) = &field.element {
        let mut items = IndexMap::new();
        items.insert("type".to_string(), Value::from(el.datatype.as_str()));
        if let Some(f) = &el.format {
            items.insert("format".to_string(), Value::from(f.clone()));
        }
        if let Some(e) = &el.enum_values {
            items.insert("enum".to_string(), Value::Array(e.clone()));
        }
        if el.nullable {
            items.insert("nullable".to_string(), Value::Bool(true));
        }
        push_constraints(&mut items, &el.constraints);
        out.insert("items".to_string(), Value::Object(items.into_iter().collect()));
    }
    out
}

fn push_constraints(out: &mut IndexMap<String, Value>, c: &crate::spec::Constraints) {
    if let Value::Object(map) = serde_json::to_value(c).expect("constraints serialize") {
        for (k, v) in map {
            let v = match v.as_f64() {
                Some(x) if v.is_f64() => number_value(x),
                _ => v,
            };
            out.insert(k, v);
        }
    }
}
