//! Repair raw completions into per-field oracle records, then assemble the
//! records of an operation into an [`OracleSet`].
//!
//! Repairs, in application order: code fences are stripped, balanced JSON
//! objects are cut out of surrounding prose, small syntax slips are fixed,
//! multiple objects are merged (later keys win), values are coerced to the
//! shape each key expects, and missing keys get the no-oracle encoding.
//! Each repair is recorded so that no asserted value appears without a
//! trace back to the raw text.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::gateway::RawCompletion;
use crate::oracle::{OracleSet, OracleType, OracleValue, Provenance, SchemaMismatch, ValueKind};
use crate::path::JsonPath;
use crate::prompt::PromptBundle;
use crate::spec::ResponseField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Repair {
    StrippedFences,
    ExtractedJsonSubstring,
    RepairedSyntax,
    MergedObjects,
    CoercedType,
    DroppedInvalidValue,
    DefaultedMissingKey,
}

/// The normalized answers for one field.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FieldOracleRecord {
    pub field_path: JsonPath,
    /// One entry per expected key, in expected-key order.
    pub answers: IndexMap<String, OracleValue>,
    pub repairs: Vec<Repair>,
    pub rejected_keys: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormalizeError {
    #[error("no JSON object found in completion for `{field_path}`")]
    Unrecoverable { field_path: JsonPath },
    #[error("completion for `{completion}` does not belong to bundle `{bundle}`")]
    FieldMismatch { completion: JsonPath, bundle: JsonPath },
}

impl FieldOracleRecord {
    /// Every expected key answered with its no-oracle encoding.
    pub fn all_absent(bundle: &PromptBundle) -> Self {
        let answers = bundle
            .expected_types()
            .into_iter()
            .map(|t| (t.key(), OracleValue::absent(t.value_kind())))
            .collect();
        Self {
            field_path: bundle.field_path.clone(),
            answers,
            repairs: Vec::new(),
            rejected_keys: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Compact JSON object of the answers, in expected-key order.
    pub fn render(&self) -> String {
        let map: Map<String, Value> = self.answers.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        Value::Object(map).to_string()
    }

    pub fn asserted(&self) -> impl Iterator<Item = (&String, &OracleValue)> {
        self.answers.iter().filter(|(_, v)| v.is_asserted())
    }

    fn note_repair(&mut self, r: Repair) {
        if !self.repairs.contains(&r) {
            self.repairs.push(r);
        }
    }
}

/// Normalize a completion against the bundle it answers.
pub fn normalize(completion: &RawCompletion, bundle: &PromptBundle) -> Result<FieldOracleRecord, NormalizeError> {
    if completion.field_path != bundle.field_path {
        return Err(NormalizeError::FieldMismatch {
            completion: completion.field_path.clone(),
            bundle: bundle.field_path.clone(),
        });
    }
    normalize_text(&completion.text, bundle)
}

/// Normalize raw completion text against `bundle`.
pub fn normalize_text(text: &str, bundle: &PromptBundle) -> Result<FieldOracleRecord, NormalizeError> {
    let mut record = FieldOracleRecord {
        field_path: bundle.field_path.clone(),
        answers: IndexMap::new(),
        repairs: Vec::new(),
        rejected_keys: Vec::new(),
        notes: Vec::new(),
    };
    let unrecoverable = || NormalizeError::Unrecoverable { field_path: bundle.field_path.clone() };

    let (body, fenced, prose_outside) = strip_fences(text);
    let mut objects = parse_objects(&body, &mut record);
    if objects.is_empty() && fenced {
        objects = parse_objects(text, &mut record);
    } else if fenced {
        record.note_repair(Repair::StrippedFences);
        if prose_outside {
            record.note_repair(Repair::ExtractedJsonSubstring);
        }
    }
    if objects.is_empty() {
        return Err(unrecoverable());
    }
    // Re-order so the stripped-fences repair comes first when both apply.
    record.repairs.sort_by_key(|r| *r as u8);

    let mut merged = Map::new();
    if objects.len() > 1 {
        record.note_repair(Repair::MergedObjects);
    }
    for obj in objects {
        for (k, v) in obj {
            if let Some(old) = merged.get(&k) {
                if *old != v {
                    record.notes.push(format!("`{k}` answered twice; kept the later value {v}"));
                }
            }
            merged.insert(k, v);
        }
    }

    let expected = bundle.expected_types();
    for (k, raw) in &merged {
        let Some(ty) = expected.iter().find(|t| t.key() == *k) else {
            record.rejected_keys.push(k.clone());
            continue;
        };
        match coerce(ty.value_kind(), raw) {
            Some((value, coerced)) => {
                if coerced {
                    record.note_repair(Repair::CoercedType);
                    record.notes.push(format!("`{k}`: coerced {raw} to {value}"));
                }
                record.answers.insert(k.clone(), value);
            }
            None => {
                record.note_repair(Repair::DroppedInvalidValue);
                record.notes.push(format!("`{k}`: dropped invalid value {raw}"));
            }
        }
    }
    let mut answers = IndexMap::with_capacity(expected.len());
    for ty in &expected {
        let key = ty.key();
        match record.answers.swap_remove(&key) {
            Some(v) => {
                answers.insert(key, v);
            }
            None => {
                if !merged.contains_key(&key) {
                    record.note_repair(Repair::DefaultedMissingKey);
                }
                answers.insert(key, OracleValue::absent(ty.value_kind()));
            }
        }
    }
    record.answers = answers;
    record.repairs.sort_by_key(|r| *r as u8);
    Ok(record)
}

/// Contents of fenced code blocks, whether any fence was found, and whether
/// non-blank text sat outside the fences.
fn strip_fences(text: &str) -> (String, bool, bool) {
    if !text.contains("```") {
        return (text.to_string(), false, false);
    }
    let mut inside = false;
    let mut body = String::new();
    let mut outside = false;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("```") {
            if inside {
                inside = false;
                // Text after a closing fence on the same line.
                outside |= !rest.trim().is_empty();
            } else {
                inside = true;
                // A one-line block such as ```{"a": 1}```.
                if let Some(inner) = rest.strip_suffix("```") {
                    body.push_str(inner.trim_start_matches(|c: char| c.is_ascii_alphabetic()));
                    body.push('\n');
                    inside = false;
                }
            }
            continue;
        }
        if inside {
            body.push_str(line);
        } else {
            outside |= !trimmed.is_empty();
        }
    }
    (body, true, outside)
}

/// Parse every balanced top-level `{...}` in `text`.
fn parse_objects(text: &str, record: &mut FieldOracleRecord) -> Vec<Map<String, Value>> {
    let spans = object_spans(text);
    let mut covered = 0;
    let mut objects = Vec::new();
    let mut prose = false;
    for (start, end) in spans {
        prose |= !text[covered..start].trim().is_empty();
        covered = end;
        let slice = &text[start..end];
        match serde_json::from_str::<Map<String, Value>>(slice) {
            Ok(obj) => objects.push(obj),
            Err(_) => match serde_json::from_str::<Map<String, Value>>(&repair_syntax(slice)) {
                Ok(obj) => {
                    record.note_repair(Repair::RepairedSyntax);
                    objects.push(obj);
                }
                Err(e) => record.notes.push(format!("skipped unparseable object: {e}")),
            },
        }
    }
    prose |= !text[covered..].trim().is_empty();
    if prose && !objects.is_empty() {
        record.note_repair(Repair::ExtractedJsonSubstring);
    }
    objects
}

/// Byte spans of balanced top-level objects, ignoring braces in strings.
fn object_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in text.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' if depth > 0 => quote = Some('"'),
            '\'' if depth > 0 => quote = Some('\''),
            '{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            '}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    spans.push((start, i + 1));
                }
            }
            _ => {}
        }
    }
    spans
}

/// Fix trailing commas, Python literals and single-quoted strings.
fn repair_syntax(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '"' || c == '\'' {
            // Copy a string literal, re-quoting single-quoted ones.
            let q = c;
            out.push('"');
            i += 1;
            while i < chars.len() && chars[i] != q {
                if chars[i] == '\\' && i + 1 < chars.len() {
                    out.push(chars[i]);
                    out.push(chars[i + 1]);
                    i += 2;
                    continue;
                }
                if q == '\'' && chars[i] == '"' {
                    out.push('\\');
                }
                out.push(chars[i]);
                i += 1;
            }
            out.push('"');
            i += 1;
            continue;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                i += 1;
                continue;
            }
        }
        if c.is_ascii_alphabetic() {
            let word: String = chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').collect();
            let replacement = match word.as_str() {
                "True" => "true",
                "False" => "false",
                "None" => "null",
                w => w,
            };
            out.push_str(replacement);
            i += word.chars().count();
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

/// Coerce a raw answer to `kind`; the flag reports whether the raw value
/// had to change shape. `None` means the answer is unusable.
fn coerce(kind: ValueKind, raw: &Value) -> Option<(OracleValue, bool)> {
    if let Ok(v) = OracleValue::from_json(kind, raw) {
        return Some((v, false));
    }
    // A `false` or `null` answer to a non-flag question means "no oracle".
    if matches!(raw, Value::Bool(false) | Value::Null) {
        return Some((OracleValue::absent(kind), true));
    }
    let v = match kind {
        ValueKind::Flag => match raw.as_str().map(|s| s.trim().to_ascii_lowercase()).as_deref() {
            Some("true") => OracleValue::Flag(true),
            Some("false") => OracleValue::Flag(false),
            _ => return None,
        },
        ValueKind::Length => OracleValue::Length(Some(as_count(raw)?)),
        ValueKind::Bound => OracleValue::Bound(Some(as_number(raw)?)),
        ValueKind::StringSet => OracleValue::StringSet(
            as_list(raw)
                .iter()
                .map(|v| match v {
                    Value::String(s) => Some(s.clone()),
                    Value::Number(n) => Some(n.to_string()),
                    _ => None,
                })
                .collect::<Option<_>>()?,
        ),
        ValueKind::NumberSet => OracleValue::NumberSet(as_list(raw).iter().map(as_number).collect::<Option<_>>()?),
        ValueKind::SizeSet => OracleValue::SizeSet(as_list(raw).iter().map(as_count).collect::<Option<_>>()?),
    };
    Some((v, true))
}

fn as_list(raw: &Value) -> Vec<Value> {
    match raw {
        Value::Array(a) => a.clone(),
        other => vec![other.clone()],
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok().filter(|x| x.is_finite()),
        _ => None,
    }
}

fn as_count(v: &Value) -> Option<u64> {
    let x = as_number(v)?;
    (x >= 0.0 && x.fract() == 0.0 && x < 9.0e15).then_some(x as u64)
}

/// Warnings produced while assembling an operation's oracle set.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AssembleReport {
    pub mismatches: Vec<SchemaMismatch>,
    pub warnings: Vec<String>,
}

/// Build the operation's oracle set from normalized records.
///
/// Only asserted answers are kept; entries that do not fit the field list
/// are stripped and reported.
pub fn assemble(
    records: &[FieldOracleRecord],
    operation_id: &str,
    fields: &[ResponseField],
    provenance: Provenance,
) -> (OracleSet, AssembleReport) {
    let mut set = OracleSet::new(operation_id);
    let mut report = AssembleReport::default();
    for r in records {
        for (key, value) in r.asserted() {
            let Some(ty) = OracleType::from_key(key) else { continue };
            if matches!(value, OracleValue::Length(Some(0))) && ty.base() == crate::oracle::BaseOracle::StringFixedLength {
                report.warnings.push(format!("{}: {key} is 0, which only admits the empty string", r.field_path));
            }
            set.insert(r.field_path.clone(), ty, value.clone(), provenance);
        }
    }
    report.mismatches = set.strip_mismatches(fields);
    for m in &report.mismatches {
        report.warnings.push(format!("stripped: {m}"));
    }
    (set, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::build_operation_prompts;
    use crate::spec::{extract_fields, load_spec};
    use serde_json::json;

    const LISTING3: &str = "{\n   \"string_is_url\": false,\n   \"string_is_numeric\": false,\n   \"string_specific_values\": [ \"$\", \"$$\", \"$$$\", \"$$$$\" ],\n   \"string_is_email\": false,\n   \"string_is_date\": false,\n   \"string_fixed_length\": null,\n   \"string_is_time\": false\n}";

    fn yelp_bundles() -> Vec<PromptBundle> {
        let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp/openapi.yaml")).unwrap();
        build_operation_prompts(&spec, "getBusinesses").unwrap()
    }

    fn price() -> PromptBundle {
        yelp_bundles().into_iter().find(|b| b.field_name == "price").unwrap()
    }

    fn price_set() -> OracleValue {
        OracleValue::StringSet(vec!["$".into(), "$$".into(), "$$$".into(), "$$$$".into()])
    }

    #[test]
    fn listing3_needs_no_repair() {
        let r = normalize_text(LISTING3, &price()).unwrap();
        assert_eq!(r.answers.len(), 7);
        assert_eq!(r.answers["string_specific_values"], price_set());
        assert_eq!(r.answers["string_fixed_length"], OracleValue::Length(None));
        assert!(r.repairs.is_empty());
        assert!(r.rejected_keys.is_empty());
    }

    #[test]
    fn fenced_answer_with_prose() {
        let text = format!("```json\n{LISTING3}\n```\nLet me know if you need anything else.");
        let r = normalize_text(&text, &price()).unwrap();
        assert_eq!(r.repairs, [Repair::StrippedFences, Repair::ExtractedJsonSubstring]);
        assert_eq!(r.answers, normalize_text(LISTING3, &price()).unwrap().answers);
    }

    #[test]
    fn split_objects_merge_to_the_single_object() {
        let text = r#"{"string_is_url": false, "string_is_numeric": false, "string_specific_values": ["$", "$$", "$$$", "$$$$"]}
{"string_is_email": false, "string_is_date": false, "string_fixed_length": null, "string_is_time": false}"#;
        let r = normalize_text(text, &price()).unwrap();
        assert_eq!(r.repairs, [Repair::MergedObjects]);
        assert_eq!(r.answers, normalize_text(LISTING3, &price()).unwrap().answers);
    }

    #[test]
    fn coercions() {
        let text = r#"{"string_is_url": "true", "string_fixed_length": "2", "string_specific_values": "ES", "extra": 1}"#;
        let r = normalize_text(text, &price()).unwrap();
        assert_eq!(r.answers["string_is_url"], OracleValue::Flag(true));
        assert_eq!(r.answers["string_fixed_length"], OracleValue::Length(Some(2)));
        assert_eq!(r.answers["string_specific_values"], OracleValue::StringSet(vec!["ES".into()]));
        assert_eq!(r.rejected_keys, ["extra"]);
        assert_eq!(r.repairs, [Repair::CoercedType, Repair::DefaultedMissingKey]);
    }

    #[test]
    fn invalid_values_are_dropped_not_guessed() {
        let text = r#"{"string_fixed_length": -2, "string_is_url": "probably a url"}"#;
        let r = normalize_text(text, &price()).unwrap();
        assert_eq!(r.answers["string_fixed_length"], OracleValue::Length(None));
        assert_eq!(r.answers["string_is_url"], OracleValue::Flag(false));
        assert!(r.repairs.contains(&Repair::DroppedInvalidValue));
    }

    #[test]
    fn python_style_syntax_is_repaired() {
        let text = "{'string_is_url': True, 'string_fixed_length': None, 'string_specific_values': ['a', \"b\"],}";
        let r = normalize_text(text, &price()).unwrap();
        assert!(r.repairs.contains(&Repair::RepairedSyntax));
        assert_eq!(r.answers["string_is_url"], OracleValue::Flag(true));
        assert_eq!(r.answers["string_specific_values"], OracleValue::StringSet(vec!["a".into(), "b".into()]));
    }

    #[test]
    fn text_without_json_is_unrecoverable() {
        assert!(matches!(
            normalize_text("I cannot answer that.", &price()),
            Err(NormalizeError::Unrecoverable { .. })
        ));
        assert!(matches!(normalize_text("```\nnothing\n```", &price()), Err(NormalizeError::Unrecoverable { .. })));
    }

    #[test]
    fn braces_inside_strings_do_not_split_objects() {
        let text = r#"{"string_specific_values": ["{", "}"]} trailing"#;
        let r = normalize_text(text, &price()).unwrap();
        assert_eq!(r.answers["string_specific_values"], OracleValue::StringSet(vec!["{".into(), "}".into()]));
    }

    #[test]
    fn normalization_is_idempotent() {
        let b = price();
        for text in [LISTING3, r#"{"string_fixed_length": "2", "string_is_date": "TRUE"}"#] {
            let once = normalize_text(text, &b).unwrap();
            let twice = normalize_text(&once.render(), &b).unwrap();
            assert_eq!(twice.answers, once.answers);
            assert!(twice.repairs.is_empty());
        }
    }

    #[test]
    fn assemble_keeps_only_asserted_answers_and_screens_types() {
        let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp/openapi.yaml")).unwrap();
        let fields = extract_fields(&spec, "getBusinesses").unwrap();
        let bundles = yelp_bundles();
        let absent: Vec<FieldOracleRecord> = bundles.iter().map(FieldOracleRecord::all_absent).collect();
        let (set, report) = assemble(&absent, "getBusinesses", &fields, Provenance::Llm);
        assert!(set.is_empty());
        assert!(report.warnings.is_empty());

        let mut bogus = FieldOracleRecord::all_absent(bundles.iter().find(|b| b.field_name == "name").unwrap());
        bogus.answers.insert("number_min_value".into(), OracleValue::Bound(Some(0.0)));
        let (set, report) = assemble(&[bogus], "getBusinesses", &fields, Provenance::Llm);
        assert!(set.is_empty());
        assert_eq!(report.mismatches.len(), 1);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn zero_fixed_length_is_kept_with_a_warning() {
        let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/yelp/openapi.yaml")).unwrap();
        let fields = extract_fields(&spec, "getBusinesses").unwrap();
        let r = normalize_text(&json!({"string_fixed_length": 0}).to_string(), &price()).unwrap();
        let (set, report) = assemble(&[r], "getBusinesses", &fields, Provenance::Llm);
        assert_eq!(set.len(), 1);
        assert_eq!(report.warnings.len(), 1);
    }
}
