//! Postman collection emission.
//!
//! Each asserted oracle becomes one self-contained script block. The block
//! walks the response from `pm.response.json()` down to the field, skipping
//! missing keys and non-container values, loops over `[*]` segments, and
//! registers one `pm.test` per concrete location whose value has the
//! oracle's datatype. Test names are `<location> <oracle_key>`, so a failing
//! array element is identified by its index. The predicates use the same
//! grammars as [`crate::oracle::Checker`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{validate_set, BaseOracle, Checker, OracleSet, OracleType, OracleValue, SchemaMismatch, URL_PATTERN};
use crate::oracle::{EMAIL_PATTERN, NUMERIC_PATTERN, TIME_PATTERN};
use crate::path::{JsonPath, Segment};
use crate::spec::{extract_fields, ApiSpec, OperationRef};

pub const POSTMAN_SCHEMA_URL: &str = "https://schema.getpostman.com/json/collection/v2.1.0/collection.json";

const INDENT: &str = "    ";

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot emit {oracle} with value {value}")]
    UnsupportedOracle { oracle: OracleType, value: String },
    #[error("oracle set for `{operation_id}` does not match the spec: {}", .mismatches.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    ValidationFailed { operation_id: String, mismatches: Vec<SchemaMismatch> },
    #[error("oracle set refers to unknown operation `{0}`")]
    UnknownOperation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostmanCollection {
    pub info: PostmanInfo,
    pub item: Vec<PostmanItem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variable: Vec<PostmanVariable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostmanInfo {
    pub name: String,
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostmanItem {
    pub name: String,
    pub request: PostmanRequest,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub event: Vec<PostmanEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostmanRequest {
    pub method: String,
    pub header: Vec<PostmanHeader>,
    pub url: PostmanUrl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostmanHeader {
    pub key: String,
    pub value: String,
    #[serde(rename = "type")]
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostmanUrl {
    pub raw: String,
    pub host: Vec<String>,
    pub path: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variable: Vec<PostmanVariable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostmanVariable {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostmanEvent {
    pub listen: String,
    pub script: PostmanScript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostmanScript {
    #[serde(rename = "type")]
    pub kind: String,
    pub exec: Vec<String>,
}

impl PostmanCollection {
    /// Pretty JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("collection serializes");
        s.push('\n');
        s
    }

    pub fn item(&self, name: &str) -> Option<&PostmanItem> {
        self.item.iter().find(|i| i.name == name)
    }
}

impl PostmanItem {
    /// Lines of the test script, empty when there is none.
    pub fn test_script(&self) -> &[String] {
        self.event.iter().find(|e| e.listen == "test").map(|e| e.script.exec.as_slice()).unwrap_or(&[])
    }
}

/// Script lines asserting one oracle on every location `path` reaches.
pub fn emit_assertion(
    path: &JsonPath,
    oracle: OracleType,
    value: &OracleValue,
    checker: &Checker,
) -> Result<Vec<String>, EmitError> {
    if !value.is_asserted() || value.kind() != oracle.value_kind() {
        return Err(EmitError::UnsupportedOracle { oracle, value: value.to_string() });
    }
    let mut g = Gen { lines: vec!["{".to_string()], checker };
    g.line(1, "const body = pm.response.json()");
    g.walk(path.segments(), "body", &mut Vec::new(), 1, 0, oracle, value);
    g.lines.push("}".to_string());
    Ok(g.lines)
}

/// Script lines for every oracle of a set, ordered by path then type.
pub fn emit_script(oracles: &OracleSet, checker: &Checker) -> Result<Vec<String>, EmitError> {
    let mut lines = Vec::new();
    for (path, ty, value) in oracles.iter() {
        lines.extend(emit_assertion(path, ty, value, checker)?);
    }
    Ok(lines)
}

/// One request per operation of `spec`, carrying the assertions of the
/// matching oracle set, if any.
pub fn emit_collection(spec: &ApiSpec, sets: &[OracleSet], checker: &Checker) -> Result<PostmanCollection, EmitError> {
    for set in sets {
        let fields = extract_fields(spec, &set.operation_id)
            .map_err(|_| EmitError::UnknownOperation(set.operation_id.clone()))?;
        let mismatches = validate_set(set, &fields);
        if !mismatches.is_empty() {
            return Err(EmitError::ValidationFailed { operation_id: set.operation_id.clone(), mismatches });
        }
    }
    let mut item = Vec::with_capacity(spec.operations.len());
    for op in &spec.operations {
        let mut exec = Vec::new();
        for set in sets.iter().filter(|s| s.operation_id == op.operation_id) {
            exec.extend(emit_script(set, checker)?);
        }
        item.push(PostmanItem {
            name: op.operation_id.clone(),
            request: request_for(op),
            event: vec![PostmanEvent {
                listen: "test".into(),
                script: PostmanScript { kind: "text/javascript".into(), exec },
            }],
        });
    }
    Ok(PostmanCollection {
        info: PostmanInfo { name: spec.title.clone(), schema: POSTMAN_SCHEMA_URL.into(), description: None },
        item,
        variable: vec![
            PostmanVariable { key: "baseUrl".into(), value: spec.server_url.clone().unwrap_or_default() },
            PostmanVariable { key: "apiKey".into(), value: String::new() },
        ],
    })
}

fn request_for(op: &OperationRef) -> PostmanRequest {
    let mut path = Vec::new();
    let mut variable = Vec::new();
    for seg in op.path_template.split('/').filter(|s| !s.is_empty()) {
        match seg.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
            Some(name) => {
                path.push(format!(":{name}"));
                variable.push(PostmanVariable { key: name.to_string(), value: String::new() });
            }
            None => path.push(seg.to_string()),
        }
    }
    PostmanRequest {
        method: op.method.as_str().to_string(),
        header: vec![PostmanHeader {
            key: "Authorization".into(),
            value: "Bearer {{apiKey}}".into(),
            kind: "text".into(),
        }],
        url: PostmanUrl {
            raw: format!("{{{{baseUrl}}}}/{}", path.join("/")),
            host: vec!["{{baseUrl}}".into()],
            path,
            variable,
        },
    }
}

/// A piece of the runtime location string.
enum LocPart {
    Static(String),
    Index(String),
}

struct Gen<'a> {
    lines: Vec<String>,
    checker: &'a Checker,
}

impl Gen<'_> {
    fn line(&mut self, depth: usize, text: impl AsRef<str>) {
        self.lines.push(format!("{}{}", INDENT.repeat(depth), text.as_ref()));
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &mut self,
        segments: &[Segment],
        current: &str,
        loc: &mut Vec<LocPart>,
        indent: usize,
        depth: usize,
        oracle: OracleType,
        value: &OracleValue,
    ) {
        let Some((head, rest)) = segments.split_first() else {
            self.emit_test(current, loc, indent, oracle, value);
            return;
        };
        match head {
            Segment::Key(k) => {
                let key = js_string(k);
                let var = identifier_for(k, current, depth);
                self.line(
                    indent,
                    format!(
                        "if ({current} !== null && typeof {current} === \"object\" && !Array.isArray({current}) && Object.prototype.hasOwnProperty.call({current}, {key})) {{"
                    ),
                );
                self.line(indent + 1, format!("const {var} = {current}[{key}]"));
                let mut text = String::new();
                crate::path::write_key(&mut text, k, loc.is_empty());
                loc.push(LocPart::Static(text));
                self.walk(rest, &var, loc, indent + 1, depth + 1, oracle, value);
                loc.pop();
                self.line(indent, "}");
            }
            Segment::Wildcard => {
                let item = format!("item{depth}");
                let idx = format!("i{depth}");
                self.line(indent, format!("if (Array.isArray({current})) {{"));
                self.line(indent + 1, format!("{current}.forEach(({item}, {idx}) => {{"));
                loc.push(LocPart::Index(idx.clone()));
                self.walk(rest, &item, loc, indent + 2, depth + 1, oracle, value);
                loc.pop();
                self.line(indent + 1, "})");
                self.line(indent, "}");
            }
        }
    }

    fn emit_test(&mut self, var: &str, loc: &[LocPart], indent: usize, oracle: OracleType, value: &OracleValue) {
        let name = test_name(loc, &oracle.key());
        if oracle.is_element() {
            let base = oracle.base();
            self.line(indent, format!("if (Array.isArray({var})) {{"));
            self.line(indent + 1, format!("pm.test({name}, function () {{"));
            self.line(indent + 2, format!("{var}.forEach((el, idx) => {{"));
            let label = format!("{} + \"[\" + idx + \"]\"", location_expr(loc));
            self.line(indent + 3, format!("if ({}) {{", type_guard(base, "el")));
            for l in expectations(base, value, "el", Some(&label), self.checker) {
                self.line(indent + 4, l);
            }
            self.line(indent + 3, "}");
            self.line(indent + 2, "})");
            self.line(indent + 1, "})");
            self.line(indent, "}");
        } else {
            self.line(indent, format!("if ({}) {{", type_guard(oracle.base(), var)));
            self.line(indent + 1, format!("pm.test({name}, function () {{"));
            for l in expectations(oracle.base(), value, var, None, self.checker) {
                self.line(indent + 2, l);
            }
            self.line(indent + 1, "})");
            self.line(indent, "}");
        }
    }
}

fn type_guard(base: BaseOracle, var: &str) -> String {
    use BaseOracle::*;
    match base {
        ArrayNumberAscOrder | ArrayNumberDescOrder => {
            format!("Array.isArray({var}) && {var}.every((el) => typeof el === \"number\")")
        }
        ArrayMinSize | ArrayMaxSize | ArraySpecificSizes => format!("Array.isArray({var})"),
        BooleanAlwaysTrue | BooleanAlwaysFalse => format!("typeof {var} === \"boolean\""),
        NumberMinValue | NumberMaxValue | NumberSpecificValues => format!("typeof {var} === \"number\""),
        _ => format!("typeof {var} === \"string\""),
    }
}

/// The `pm.expect` lines for one base predicate applied to `x`.
fn expectations(base: BaseOracle, value: &OracleValue, x: &str, label: Option<&str>, checker: &Checker) -> Vec<String> {
    use BaseOracle::*;
    let eps = checker.config().epsilon;
    let expect = |subject: &str| match label {
        Some(l) => format!("pm.expect({subject}, {l})"),
        None => format!("pm.expect({subject})"),
    };
    let line = match (base, value) {
        (StringIsUrl, _) => format!("{}.to.match({})", expect(x), regex_literal(URL_PATTERN)),
        (StringIsEmail, _) => format!("{}.to.match({})", expect(x), regex_literal(EMAIL_PATTERN)),
        (StringIsNumeric, _) => format!("{}.to.match({})", expect(x), regex_literal(NUMERIC_PATTERN)),
        (StringIsTime, _) => format!("{}.to.match({})", expect(x), regex_literal(TIME_PATTERN)),
        (StringIsDate, _) => {
            let formats = &checker.config().date_formats;
            if formats.len() == 1 {
                format!("{}.to.match({})", expect(x), regex_literal(&formats[0]))
            } else {
                let res: Vec<String> = formats.iter().map(|f| regex_literal(f)).collect();
                format!("{}.to.be.true", expect(&format!("[{}].some((re) => re.test({x}))", res.join(", "))))
            }
        }
        (StringSpecificValues, OracleValue::StringSet(set)) => {
            let items: Vec<String> = set.iter().map(|s| js_string(s)).collect();
            format!("{}.to.be.true", expect(&format!("[{}].includes({x})", items.join(", "))))
        }
        (StringFixedLength, OracleValue::Length(Some(n))) => {
            format!("{}.to.equal({n})", expect(&format!("Array.from({x}).length")))
        }
        (BooleanAlwaysTrue, _) => format!("{}.to.be.true", expect(x)),
        (BooleanAlwaysFalse, _) => format!("{}.to.be.false", expect(x)),
        (NumberMinValue, OracleValue::Bound(Some(m))) => format!("{}.to.be.at.least({})", expect(x), js_number(m - eps)),
        (NumberMaxValue, OracleValue::Bound(Some(m))) => format!("{}.to.be.at.most({})", expect(x), js_number(m + eps)),
        (NumberSpecificValues, OracleValue::NumberSet(set)) => {
            let items: Vec<String> = set.iter().map(|v| js_number(*v)).collect();
            if eps == 0.0 {
                format!("{}.to.be.true", expect(&format!("[{}].includes({x})", items.join(", "))))
            } else {
                format!(
                    "{}.to.be.true",
                    expect(&format!("[{}].some((s) => Math.abs({x} - s) <= {})", items.join(", "), js_number(eps)))
                )
            }
        }
        (ArrayMinSize, OracleValue::Length(Some(n))) => format!("{}.to.be.at.least({n})", expect(&format!("{x}.length"))),
        (ArrayMaxSize, OracleValue::Length(Some(n))) => format!("{}.to.be.at.most({n})", expect(&format!("{x}.length"))),
        (ArraySpecificSizes, OracleValue::SizeSet(sizes)) => {
            let items: Vec<String> = sizes.iter().map(u64::to_string).collect();
            format!("{}.to.be.true", expect(&format!("[{}].includes({x}.length)", items.join(", "))))
        }
        (ArrayNumberAscOrder, _) => format!(
            "{}.to.be.true",
            expect(&format!("{x}.every((el, idx) => idx === 0 || {x}[idx - 1] <= el)"))
        ),
        (ArrayNumberDescOrder, _) => format!(
            "{}.to.be.true",
            expect(&format!("{x}.every((el, idx) => idx === 0 || {x}[idx - 1] >= el)"))
        ),
        _ => unreachable!("value kind checked by emit_assertion"),
    };
    vec![line]
}

fn test_name(loc: &[LocPart], key: &str) -> String {
    format!("{} + {}", location_expr(loc), js_string(&format!(" {key}")))
}

/// JS expression evaluating to the concrete location string.
fn location_expr(loc: &[LocPart]) -> String {
    if loc.is_empty() {
        return js_string("$");
    }
    let mut parts: Vec<String> = Vec::new();
    let mut pending = String::new();
    for p in loc {
        match p {
            LocPart::Static(s) => pending.push_str(s),
            LocPart::Index(var) => {
                pending.push('[');
                parts.push(js_string(&pending));
                pending.clear();
                parts.push(var.clone());
                pending.push(']');
            }
        }
    }
    if !pending.is_empty() {
        parts.push(js_string(&pending));
    }
    parts.join(" + ")
}

/// A double-quoted JS string literal.
fn js_string(s: &str) -> String {
    // JSON string syntax is valid JS; escape the two line separators that
    // older engines reject inside literals.
    serde_json::to_string(s).expect("strings serialize").replace('\u{2028}', "\\u2028").replace('\u{2029}', "\\u2029")
}

fn js_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x}")
}

/// `/pattern/` with unescaped slashes escaped.
fn regex_literal(pattern: &str) -> String {
    let mut out = String::from("/");
    let mut chars = pattern.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                out.push('\\');
                if let Some(n) = chars.next() {
                    out.push(n);
                }
            }
            '/' => out.push_str("\\/"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('/');
    out
}

const RESERVED: &[&str] = &[
    "body", "pm", "el", "idx", "re", "s", "arguments", "await", "break", "case", "catch", "class", "const", "continue",
    "debugger", "default", "delete", "do", "else", "enum", "eval", "export", "extends", "false", "finally", "for",
    "function", "if", "implements", "import", "in", "instanceof", "interface", "let", "new", "null", "package",
    "private", "protected", "public", "return", "static", "super", "switch", "this", "throw", "true", "try", "typeof",
    "var", "void", "while", "with", "yield", "undefined", "NaN", "Infinity", "Array", "Object", "Math", "JSON",
];

/// The key itself when it is a safe, unshadowing JS identifier, else `v<depth>`.
fn identifier_for(key: &str, parent: &str, depth: usize) -> String {
    let is_ident = key.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_' || c == '$')
        && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$');
    let generated = |prefix: &str| {
        key.strip_prefix(prefix).is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
    };
    if is_ident && key != parent && !RESERVED.contains(&key) && !generated("v") && !generated("item") && !generated("i")
    {
        key.to_string()
    } else {
        format!("v{depth}")
    }
}

/// Number of assertion blocks in a script.
pub fn assertion_blocks(script: &[String]) -> usize {
    script.iter().filter(|l| l.as_str() == "{").count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Provenance;
    use crate::spec::load_spec;

    fn p(s: &str) -> JsonPath {
        JsonPath::parse(s).unwrap()
    }

    fn price_set() -> OracleValue {
        OracleValue::StringSet(vec!["$".into(), "$$".into(), "$$$".into(), "$$$$".into()])
    }

    #[test]
    fn price_assertion_line_is_verbatim() {
        let lines = emit_assertion(
            &p("businesses[*].price"),
            OracleType::plain(BaseOracle::StringSpecificValues),
            &price_set(),
            &Checker::default(),
        )
        .unwrap();
        assert!(
            lines.iter().any(|l| l.trim() == r#"pm.expect(["$", "$$", "$$$", "$$$$"].includes(price)).to.be.true"#),
            "{}",
            lines.join("\n")
        );
        assert!(lines.iter().any(|l| l.contains(r#"pm.test("businesses[" + i1 + "].price" + " string_specific_values""#)));
    }

    #[test]
    fn min_bound_line() {
        let lines = emit_assertion(
            &p("total"),
            OracleType::plain(BaseOracle::NumberMinValue),
            &OracleValue::Bound(Some(0.0)),
            &Checker::default(),
        )
        .unwrap();
        assert!(lines.iter().any(|l| l.trim() == "pm.expect(total).to.be.at.least(0)"));
    }

    #[test]
    fn unasserted_values_are_refused() {
        let r = emit_assertion(&p("a"), OracleType::plain(BaseOracle::StringIsUrl), &OracleValue::Flag(false), &Checker::default());
        assert!(matches!(r, Err(EmitError::UnsupportedOracle { .. })));
    }

    #[test]
    fn regex_literals_escape_slashes() {
        assert_eq!(regex_literal("^a/b$"), r"/^a\/b$/");
        assert_eq!(regex_literal(r"^a\/b$"), r"/^a\/b$/");
        assert_eq!(regex_literal(r"^[0-9]{2}/[0-9]{2}$"), r"/^[0-9]{2}\/[0-9]{2}$/");
    }

    #[test]
    fn identifiers_avoid_shadowing_and_reserved_words() {
        assert_eq!(identifier_for("price", "item1", 2), "price");
        assert_eq!(identifier_for("body", "body", 0), "v0");
        assert_eq!(identifier_for("a", "a", 1), "v1");
        assert_eq!(identifier_for("image-url", "x", 3), "v3");
        assert_eq!(identifier_for("v1", "x", 0), "v0");
        assert_eq!(identifier_for("class", "x", 0), "v0");
    }

    #[test]
    fn collection_shape() {
        let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/catalog/openapi.yaml")).unwrap();
        let mut set = OracleSet::new("getProduct");
        set.insert(p("sku"), OracleType::plain(BaseOracle::StringFixedLength), OracleValue::Length(Some(8)), Provenance::Heuristic);
        let c = emit_collection(&spec, &[set], &Checker::default()).unwrap();
        assert_eq!(c.info.schema, POSTMAN_SCHEMA_URL);
        assert_eq!(c.item.len(), 2);
        let item = c.item("getProduct").unwrap();
        assert_eq!(item.request.url.raw, "{{baseUrl}}/products/:productId");
        assert_eq!(item.request.url.variable[0].key, "productId");
        assert_eq!(assertion_blocks(item.test_script()), 1);
        assert!(c.item("listProducts").unwrap().test_script().is_empty());
        assert_eq!(c.variable[0].value, "https://catalog.example.com/api");
        let again = emit_collection(&spec, &[c.item.iter().map(|_| OracleSet::new("getProduct")).next().unwrap()], &Checker::default()).unwrap();
        assert!(again.item("getProduct").unwrap().test_script().is_empty());
    }

    #[test]
    fn mismatched_sets_fail_validation() {
        let spec = load_spec(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/catalog/openapi.yaml")).unwrap();
        let mut set = OracleSet::new("getProduct");
        set.insert(p("sku"), OracleType::plain(BaseOracle::NumberMinValue), OracleValue::Bound(Some(1.0)), Provenance::Heuristic);
        assert!(matches!(emit_collection(&spec, &[set], &Checker::default()), Err(EmitError::ValidationFailed { .. })));
        assert!(matches!(
            emit_collection(&spec, &[OracleSet::new("nope")], &Checker::default()),
            Err(EmitError::UnknownOperation(_))
        ));
    }
}
