//! Offline oracle inference from OpenAPI keywords and description cues.
//!
//! The backend answers every expected key of a bundle. A key gets an
//! asserted value only when one of the rules in [`HEURISTIC_RULES`] fires;
//! everything else is answered with the no-oracle encoding.

use std::sync::LazyLock;

use indexmap::IndexMap;
use regex::Regex;
use serde_json::{Map, Value};

use crate::oracle::{BaseOracle, OracleType, OracleValue};
use crate::prompt::PromptBundle;

/// A documented heuristic: the cue it looks for and the oracle it asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicRule {
    pub cue: &'static str,
    pub asserts: &'static str,
}

pub const HEURISTIC_RULES: &[HeuristicRule] = &[
    HeuristicRule { cue: "format `uri`/`url`, or name ending in `url`/`href`", asserts: "string_is_url" },
    HeuristicRule { cue: "format `email`, or name containing `email`", asserts: "string_is_email" },
    HeuristicRule { cue: "format `date`, or name `date` / ending in `_date`", asserts: "string_is_date" },
    HeuristicRule { cue: "format `time`, or name ending in `_time`", asserts: "string_is_time" },
    HeuristicRule { cue: "format `decimal`/`numeric`, or description mentioning a numeric string", asserts: "string_is_numeric" },
    HeuristicRule { cue: "`enum`, or description `one of <v1>, <v2> (and|or|,) <vN>`", asserts: "*_specific_values" },
    HeuristicRule { cue: "`minLength` = `maxLength`, `alpha-2`/`alpha-3`, or `<N> characters`", asserts: "string_fixed_length" },
    HeuristicRule { cue: "`minimum`, `ranges from <a> ... <b>`, `from <a> to <b>`, `between <a> and <b>`", asserts: "number_min_value" },
    HeuristicRule { cue: "`maximum`, or the upper end of the same range phrases", asserts: "number_max_value" },
    HeuristicRule { cue: "name `latitude`/`lat` (±90) or `longitude`/`lng`/`lon` (±180)", asserts: "number_min_value, number_max_value" },
    HeuristicRule { cue: "description `always true` / `always false`", asserts: "boolean_always_true / boolean_always_false" },
    HeuristicRule { cue: "`minItems` / `maxItems`", asserts: "array_min_size / array_max_size" },
    HeuristicRule { cue: "description `ascending` / `descending`", asserts: "array_number_asc_order / array_number_desc_order" },
];

static ONE_OF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bone of\s*:?\s*(.+?)(?:\.\s|\.$|;|$)").unwrap());
static LIST_SEP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\s*,\s*(?:and\s+|or\s+)?|\s+(?:and|or)\s+").unwrap());
static RANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:ranges?\s+from|from|between)\s+(-?\d+(?:\.\d+)?)\s*(?:\.\.\.|…|\.\.|to|and|-|–)\s*(-?\d+(?:\.\d+)?)")
        .unwrap()
});
static CHARACTERS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(\d+)[\s-]+characters?\b").unwrap());
static LENGTH_QUALIFIER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:up to|at most|at least|max(?:imum)?|min(?:imum)?|less than|more than|fewer than|no more than)\s*$").unwrap());
static ALPHA: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\balpha-([23])\b").unwrap());

/// What the rules can see of one field, or of its elements.
struct Evidence<'a> {
    name: String,
    description: String,
    keywords: &'a Map<String, Value>,
}

impl Evidence<'_> {
    fn str_kw(&self, k: &str) -> Option<&str> {
        self.keywords.get(k).and_then(Value::as_str)
    }

    fn num_kw(&self, k: &str) -> Option<f64> {
        self.keywords.get(k).and_then(Value::as_f64)
    }

    fn format(&self) -> String {
        self.str_kw("format").unwrap_or("").to_ascii_lowercase()
    }

    fn name_ends(&self, suffix: &str) -> bool {
        self.name.ends_with(suffix)
    }
}

/// Answers for every expected key of `bundle`, in expected-key order.
pub fn heuristic_answers(bundle: &PromptBundle) -> IndexMap<String, OracleValue> {
    let field_kw: Map<String, Value> = bundle.properties.clone().into_iter().collect();
    let items_kw = field_kw.get("items").and_then(Value::as_object).cloned().unwrap_or_default();
    let name = bundle.field_name.to_ascii_lowercase();
    let description = field_kw.get("description").and_then(Value::as_str).unwrap_or("").to_string();
    let field = Evidence { name: name.clone(), description: description.clone(), keywords: &field_kw };
    let element = Evidence { name, description, keywords: &items_kw };

    let mut out = IndexMap::new();
    for key in &bundle.expected_keys {
        let Some(ty) = OracleType::from_key(key) else { continue };
        let ev = if ty.is_element() { &element } else { &field };
        let value = infer(ty.base(), ev).unwrap_or_else(|| OracleValue::absent(ty.value_kind()));
        out.insert(key.clone(), value);
    }
    out
}

fn infer(base: BaseOracle, ev: &Evidence) -> Option<OracleValue> {
    use BaseOracle::*;
    let flag = |b: bool| b.then_some(OracleValue::Flag(true));
    let format = ev.format();
    let desc = ev.description.to_ascii_lowercase();
    match base {
        StringIsUrl => flag(
            matches!(format.as_str(), "uri" | "url") || ev.name_ends("url") || ev.name_ends("href"),
        ),
        StringIsEmail => flag(format == "email" || ev.name.contains("email")),
        StringIsDate => flag(format == "date" || (format.is_empty() && (ev.name == "date" || ev.name_ends("_date")))),
        StringIsTime => flag(format == "time" || (format.is_empty() && ev.name_ends("_time"))),
        StringIsNumeric => flag(
            matches!(format.as_str(), "decimal" | "numeric")
                || desc.contains("numeric string")
                || desc.contains("string of digits"),
        ),
        StringSpecificValues => {
            let values = match ev.keywords.get("enum").and_then(Value::as_array) {
                Some(e) => e.iter().map(|v| v.as_str().map(str::to_string)).collect::<Option<Vec<_>>>()?,
                None => one_of(&ev.description)?,
            };
            (!values.is_empty()).then_some(OracleValue::StringSet(values))
        }
        NumberSpecificValues => {
            let values = match ev.keywords.get("enum").and_then(Value::as_array) {
                Some(e) => e.iter().map(Value::as_f64).collect::<Option<Vec<_>>>()?,
                None => one_of(&ev.description)?.iter().map(|s| s.parse::<f64>().ok()).collect::<Option<Vec<_>>>()?,
            };
            (!values.is_empty()).then_some(OracleValue::NumberSet(values))
        }
        StringFixedLength => {
            if let (Some(a), Some(b)) = (ev.num_kw("minLength"), ev.num_kw("maxLength")) {
                if a == b {
                    return Some(OracleValue::Length(Some(a as u64)));
                }
            }
            if let Some(c) = ALPHA.captures(&ev.description) {
                return Some(OracleValue::Length(Some(c[1].parse().ok()?)));
            }
            let c = CHARACTERS.captures(&ev.description)?;
            let before = &ev.description[..c.get(0)?.start()];
            if LENGTH_QUALIFIER.is_match(before) {
                return None;
            }
            Some(OracleValue::Length(Some(c[1].parse().ok()?)))
        }
        NumberMinValue | NumberMaxValue => {
            let is_min = base == NumberMinValue;
            let keyword = if is_min { "minimum" } else { "maximum" };
            let exclusive = if is_min { "exclusiveMinimum" } else { "exclusiveMaximum" };
            if let Some(x) = ev.num_kw(keyword) {
                let excl = ev.keywords.get(exclusive).and_then(Value::as_bool).unwrap_or(false);
                return (!excl).then_some(OracleValue::Bound(Some(x)));
            }
            if let Some((a, b)) = range(&ev.description) {
                return Some(OracleValue::Bound(Some(if is_min { a } else { b })));
            }
            let bound = match ev.name.as_str() {
                "latitude" | "lat" => 90.0,
                "longitude" | "lng" | "lon" | "long" => 180.0,
                _ => return None,
            };
            Some(OracleValue::Bound(Some(if is_min { -bound } else { bound })))
        }
        BooleanAlwaysTrue => flag(desc.contains("always true")),
        BooleanAlwaysFalse => flag(desc.contains("always false")),
        ArrayMinSize => ev.num_kw("minItems").map(|n| OracleValue::Length(Some(n as u64))),
        ArrayMaxSize => ev.num_kw("maxItems").map(|n| OracleValue::Length(Some(n as u64))),
        ArraySpecificSizes => None,
        ArrayNumberAscOrder => flag(desc.contains("ascending")),
        ArrayNumberDescOrder => flag(desc.contains("descending")),
    }
}

fn one_of(description: &str) -> Option<Vec<String>> {
    let c = ONE_OF.captures(description)?;
    let items: Vec<String> = LIST_SEP
        .split(c[1].trim())
        .map(|s| s.trim().trim_matches(|ch| matches!(ch, '\'' | '"' | '`')).to_string())
        .collect();
    // Long items mean the phrase was prose rather than a value list.
    if items.len() < 2 || items.iter().any(|s| s.is_empty() || s.split_whitespace().count() > 3) {
        return None;
    }
    Some(items)
}

fn range(description: &str) -> Option<(f64, f64)> {
    let c = RANGE.captures(description)?;
    let a: f64 = c[1].parse().ok()?;
    let b: f64 = c[2].parse().ok()?;
    (a <= b).then_some((a, b))
}

/// Render answers as a JSON object in the layout of the published example:
/// three-space indent, one key per line, inline arrays.
pub fn render_answers(bundle: &PromptBundle, answers: &IndexMap<String, OracleValue>) -> String {
    let mut lines = Vec::new();
    for key in &bundle.expected_keys {
        let Some(v) = answers.get(key) else { continue };
        let value = match v.to_json() {
            Value::Array(items) if items.is_empty() => "[]".to_string(),
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(Value::to_string).collect();
                format!("[ {} ]", parts.join(", "))
            }
            other => other.to_string(),
        };
        lines.push(format!("   {}: {}", Value::from(key.as_str()), value));
    }
    format!("{{\n{}\n}}", lines.join(",\n"))
}
