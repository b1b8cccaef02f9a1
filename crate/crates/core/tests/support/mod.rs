//! Shared fixtures and the Node sandbox driver for integration tests.
#![allow(dead_code)]

pub mod cells;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use restoracle::emit::emit_assertion;
use restoracle::oracle::{BaseOracle, Checker, OracleSet, OracleType, OracleValue, Provenance, Verdict};
use restoracle::path::{JsonPath, Segment};
use serde_json::{json, Value};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn read_json(rel: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture(rel)).unwrap()).unwrap()
}

/// The recorded Yelp responses, by file stem.
pub fn yelp_responses() -> Vec<(String, Value)> {
    ["listing2", "madrid", "lisbon", "sydney"]
        .iter()
        .map(|id| (id.to_string(), read_json(&format!("yelp/responses/getBusinesses/{id}.json"))))
        .collect()
}

pub fn catalog_responses() -> Vec<(String, Value)> {
    ["page1", "page2"]
        .iter()
        .map(|id| (id.to_string(), read_json(&format!("catalog/responses/listProducts/{id}.json"))))
        .collect()
}

const DEFAULT_CHAI: &str = "/usr/lib/node_modules/vitest/node_modules/chai/index.js";

/// `node` plus the Chai module to load, or `None` when Node is missing.
/// Chai comes from `CHAI_PATH`, else a known global install; without it
/// the sandbox falls back to its built-in shim.
pub fn node() -> Option<(PathBuf, Option<String>)> {
    let ok = Command::new("node").arg("--version").output().is_ok_and(|o| o.status.success());
    if !ok {
        return None;
    }
    let chai = std::env::var("CHAI_PATH").ok().or_else(|| Path::new(DEFAULT_CHAI).exists().then(|| DEFAULT_CHAI.to_string()));
    Some((PathBuf::from("node"), chai))
}

#[derive(Debug, Clone, serde::Deserialize)]
pub struct SandboxTest {
    pub name: String,
    pub passed: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone, serde::Deserialize)]
pub struct SandboxResult {
    pub id: String,
    pub tests: Vec<SandboxTest>,
    pub error: Option<String>,
}

/// Run `(id, script, response)` cases in one Node process.
pub fn run_sandbox(cases: &[(String, String, Value)]) -> Vec<SandboxResult> {
    let (node, chai) = node().expect("node is available");
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/support/sandbox.mjs");
    let mut cmd = Command::new(node);
    cmd.arg(script).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    match chai {
        Some(c) => cmd.env("CHAI_PATH", c),
        None => cmd.env_remove("CHAI_PATH"),
    };
    let mut child = cmd.spawn().expect("spawn node");
    let input = json!({"cases": cases.iter().map(|(id, s, r)| json!({"id": id, "script": s, "response": r})).collect::<Vec<_>>()});
    let mut stdin = child.stdin.take().unwrap();
    let payload = input.to_string();
    let writer = std::thread::spawn(move || stdin.write_all(payload.as_bytes()));
    let out = child.wait_with_output().expect("node ran");
    writer.join().unwrap().unwrap();
    assert!(out.status.success(), "sandbox failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("sandbox output is JSON")
}

/// Test name to pass/fail that a faithful script must register: one test
/// per concrete location whose native verdict is not "not applicable".
pub fn native_tests(checker: &Checker, set: &OracleSet, response: &Value) -> BTreeMap<String, bool> {
    let mut out = BTreeMap::new();
    for (path, ty, value) in set.iter() {
        for (loc, observed) in path.resolve(response) {
            match checker.check_detailed(ty, value, observed).0 {
                Verdict::NotApplicable => {}
                v => {
                    out.insert(format!("{loc} {}", ty.key()), v == Verdict::Pass);
                }
            }
        }
    }
    out
}

pub fn sandbox_tests(r: &SandboxResult) -> BTreeMap<String, bool> {
    r.tests.iter().map(|t| (t.name.clone(), t.passed)).collect()
}

fn key(k: &str) -> Segment {
    Segment::Key(k.to_string())
}

fn single(path: &JsonPath, ty: OracleType, value: OracleValue) -> OracleSet {
    let mut s = OracleSet::new("diff");
    assert!(s.insert(path.clone(), ty, value, Provenance::GroundTruth));
    s
}

fn strs(v: &[&str]) -> OracleValue {
    OracleValue::StringSet(v.iter().map(|s| s.to_string()).collect())
}

/// Single-entry oracle sets covering every oracle type, including paths
/// through awkward keys.
pub fn differential_oracles() -> Vec<OracleSet> {
    use BaseOracle::*;
    let p = |segs: Vec<Segment>| JsonPath::from_segments(segs);
    let s = p(vec![key("s")]);
    let n = p(vec![key("n")]);
    let b = p(vec![key("b")]);
    let tags = p(vec![key("tags")]);
    let nums = p(vec![key("nums")]);
    let flags = p(vec![key("flags")]);
    let item_s = p(vec![key("items"), Segment::Wildcard, key("s")]);
    let item_n = p(vec![key("items"), Segment::Wildcard, key("n")]);
    let odd = p(vec![key("odd key"), key("a.b"), Segment::Wildcard, key("q\"uote")]);
    let reserved = p(vec![key("body"), key("pm"), key("const")]);
    let plain = OracleType::plain;
    let el = |b| OracleType::element(b).unwrap();
    let url_set = strs(&["$", "$$", "a\"b", "ü", "😀", "\u{2028}", "</script>"]);
    vec![
        single(&s, plain(StringIsUrl), OracleValue::Flag(true)),
        single(&s, plain(StringIsNumeric), OracleValue::Flag(true)),
        single(&s, plain(StringIsEmail), OracleValue::Flag(true)),
        single(&s, plain(StringIsDate), OracleValue::Flag(true)),
        single(&s, plain(StringIsTime), OracleValue::Flag(true)),
        single(&s, plain(StringSpecificValues), url_set.clone()),
        single(&s, plain(StringFixedLength), OracleValue::Length(Some(2))),
        single(&s, plain(StringFixedLength), OracleValue::Length(Some(1))),
        single(&n, plain(NumberMinValue), OracleValue::Bound(Some(0.0))),
        single(&n, plain(NumberMaxValue), OracleValue::Bound(Some(10.0))),
        single(&n, plain(NumberMinValue), OracleValue::Bound(Some(-90.5))),
        single(&n, plain(NumberSpecificValues), OracleValue::NumberSet(vec![1.0, 2.5, -3.0, 0.1])),
        single(&b, plain(BooleanAlwaysTrue), OracleValue::Flag(true)),
        single(&b, plain(BooleanAlwaysFalse), OracleValue::Flag(true)),
        single(&tags, el(StringIsUrl), OracleValue::Flag(true)),
        single(&tags, el(StringFixedLength), OracleValue::Length(Some(2))),
        single(&tags, el(StringSpecificValues), url_set),
        single(&tags, el(StringIsDate), OracleValue::Flag(true)),
        single(&tags, plain(ArrayMinSize), OracleValue::Length(Some(1))),
        single(&tags, plain(ArrayMaxSize), OracleValue::Length(Some(2))),
        single(&tags, plain(ArraySpecificSizes), OracleValue::SizeSet(vec![0, 3])),
        single(&nums, el(NumberMinValue), OracleValue::Bound(Some(0.0))),
        single(&nums, el(NumberMaxValue), OracleValue::Bound(Some(5.0))),
        single(&nums, el(NumberSpecificValues), OracleValue::NumberSet(vec![1.0, 2.0, 3.0])),
        single(&nums, plain(ArrayNumberAscOrder), OracleValue::Flag(true)),
        single(&nums, plain(ArrayNumberDescOrder), OracleValue::Flag(true)),
        single(&flags, el(BooleanAlwaysTrue), OracleValue::Flag(true)),
        single(&flags, el(BooleanAlwaysFalse), OracleValue::Flag(true)),
        single(&item_s, plain(StringIsTime), OracleValue::Flag(true)),
        single(&item_s, plain(StringIsNumeric), OracleValue::Flag(true)),
        single(&item_n, plain(NumberMaxValue), OracleValue::Bound(Some(2.5))),
        single(&odd, plain(StringFixedLength), OracleValue::Length(Some(2))),
        single(&reserved, plain(NumberMinValue), OracleValue::Bound(Some(1.0))),
    ]
}

const STRINGS: &[&str] = &[
    "", "a", "ab", "$", "$$", "a\"b", "ü", "😀", "😀x", "e\u{301}", "\u{2028}", "</script>", "\\d", "line\nbreak",
    "https://example.com/a?b=c", "http://localhost:8080/x", "ftp://files.example.org", "https://", "not a url",
    "javascript:alert(1)", "user@example.com", "a@b", "first.last+tag@sub.example.co", "@example.com",
    "2023-12-31", "2024-02-30", "2024-13-01", "20240101", "12:30", "23:59:59", "24:00", "7:05", "12:30 ",
    "12", "-1.5", "+3", "1e5", " 12", "١٢", "12\n", "0x1F", "NaN",
];

const NUMBERS: &[f64] = &[0.0, 1.0, 2.5, -3.0, 10.0, 10.000001, -90.5, -91.0, 0.1, 0.30000000000000004, 1e308, -1e-9, 5.0, 4.999];

fn number(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

fn any_scalar(rng: &mut ChaCha8Rng) -> Value {
    match rng.gen_range(0..10) {
        0..=4 => json!(STRINGS.choose(rng).unwrap()),
        5..=7 => number(*NUMBERS.choose(rng).unwrap()),
        8 => json!(rng.gen_bool(0.5)),
        _ => Value::Null,
    }
}

/// A field value that is usually, but not always, of the expected type.
fn typed(rng: &mut ChaCha8Rng, kind: char) -> Value {
    if rng.gen_bool(0.15) {
        return any_scalar(rng);
    }
    match kind {
        's' => json!(STRINGS.choose(rng).unwrap()),
        'n' => number(*NUMBERS.choose(rng).unwrap()),
        'b' => json!(rng.gen_bool(0.5)),
        _ => unreachable!(),
    }
}

fn array(rng: &mut ChaCha8Rng, kind: char) -> Value {
    if rng.gen_bool(0.1) {
        return any_scalar(rng);
    }
    let len = rng.gen_range(0..5);
    let mut items: Vec<Value> = (0..len).map(|_| typed(rng, kind)).collect();
    if kind == 'n' && rng.gen_bool(0.4) {
        let mut xs: Vec<f64> = items.iter().filter_map(Value::as_f64).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if rng.gen_bool(0.5) {
            xs.reverse();
        }
        items = xs.into_iter().map(number).collect();
    }
    Value::Array(items)
}

/// Seeded adversarial response documents.
pub fn differential_responses(count: usize, seed: u64) -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut doc = serde_json::Map::new();
            let mut put = |k: &str, v: Value, rng: &mut ChaCha8Rng| {
                if !rng.gen_bool(0.05) {
                    doc.insert(k.to_string(), v);
                }
            };
            let v = typed(&mut rng, 's');
            put("s", v, &mut rng);
            let v = typed(&mut rng, 'n');
            put("n", v, &mut rng);
            let v = typed(&mut rng, 'b');
            put("b", v, &mut rng);
            let v = array(&mut rng, 's');
            put("tags", v, &mut rng);
            let v = array(&mut rng, 'n');
            put("nums", v, &mut rng);
            let v = array(&mut rng, 'b');
            put("flags", v, &mut rng);
            let items: Vec<Value> = (0..rng.gen_range(0..4))
                .map(|_| if rng.gen_bool(0.1) { Value::Null } else { json!({"s": typed(&mut rng, 's'), "n": typed(&mut rng, 'n')}) })
                .collect();
            put("items", Value::Array(items), &mut rng);
            let quoted: Vec<Value> = (0..rng.gen_range(0..3)).map(|_| json!({"q\"uote": typed(&mut rng, 's')})).collect();
            put("odd key", json!({"a.b": quoted}), &mut rng);
            let v = typed(&mut rng, 'n');
            put("body", json!({"pm": {"const": v}}), &mut rng);
            Value::Object(doc)
        })
        .collect()
}

/// Every (single-entry oracle set, response) pair of the differential corpus.
pub fn differential_pairs(responses: usize, seed: u64) -> Vec<(OracleSet, Value)> {
    let docs = differential_responses(responses, seed);
    let mut out = Vec::new();
    for set in differential_oracles() {
        for d in &docs {
            out.push((set.clone(), d.clone()));
        }
    }
    out
}

/// Emitted script text for a single-entry set.
pub fn script_for(checker: &Checker, set: &OracleSet) -> String {
    let (path, ty, value) = set.iter().next().expect("one entry");
    emit_assertion(path, ty, value, checker).unwrap().join("\n")
}

/// Outcome of running the differential corpus.
pub struct Differential {
    pub pairs: usize,
    pub verdicts: usize,
    pub disagreements: Vec<String>,
}

pub fn run_differential(checker: &Checker, pairs: &[(OracleSet, Value)]) -> Differential {
    let cases: Vec<(String, String, Value)> =
        pairs.iter().enumerate().map(|(i, (set, resp))| (i.to_string(), script_for(checker, set), resp.clone())).collect();
    let results = run_sandbox(&cases);
    assert_eq!(results.len(), pairs.len());
    let mut verdicts = 0;
    let mut disagreements = Vec::new();
    for ((set, resp), r) in pairs.iter().zip(&results) {
        let native = native_tests(checker, set, resp);
        let js = sandbox_tests(r);
        verdicts += native.len().max(js.len());
        if r.error.is_some() || native != js {
            let (p, t, _) = set.iter().next().unwrap();
            disagreements.push(format!("{p} {}: native {native:?} js {js:?} error {:?} response {resp}", t.key(), r.error));
        }
    }
    Differential { pairs: pairs.len(), verdicts, disagreements }
}

/// JSON Schema equivalent of an operation's success schema: `nullable`
/// becomes a `null` type alternative and `format` is not validated.
pub fn response_validator(spec_rel: &str, operation_id: &str) -> jsonschema::Validator {
    let spec = restoracle::spec::load_spec(fixture(spec_rel)).unwrap();
    let op = spec.operation(operation_id).unwrap();
    let mut root = json!({"allOf": [op.raw_success_schema.clone().unwrap()]});
    if let Some(c) = spec.document.get("components") {
        root["components"] = c.clone();
    }
    fn convert(v: &mut Value) {
        match v {
            Value::Object(m) => {
                if m.get("nullable") == Some(&Value::Bool(true)) {
                    if let Some(Value::String(t)) = m.get("type").cloned() {
                        m.insert("type".into(), json!([t, "null"]));
                    }
                }
                m.remove("nullable");
                m.remove("example");
                m.values_mut().for_each(convert);
            }
            Value::Array(a) => a.iter_mut().for_each(convert),
            _ => {}
        }
    }
    convert(&mut root);
    jsonschema::options().should_validate_formats(false).build(&root).unwrap()
}

/// The deepest location containing every difference between `a` and `b`,
/// or `None` when they are equal.
pub fn diff_location(a: &Value, b: &Value) -> Option<restoracle::path::Location> {
    use restoracle::path::Location;
    fn go(a: &Value, b: &Value, at: Location) -> Option<Location> {
        if a == b {
            return None;
        }
        match (a, b) {
            (Value::Object(x), Value::Object(y)) if x.len() == y.len() && x.keys().all(|k| y.contains_key(k)) => {
                let diffs: Vec<&String> = x.keys().filter(|k| x[*k] != y[*k]).collect();
                match diffs.as_slice() {
                    [k] => go(&x[*k], &y[*k], at.key(k.as_str())),
                    _ => Some(at),
                }
            }
            (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
                let diffs: Vec<usize> = (0..x.len()).filter(|i| x[*i] != y[*i]).collect();
                match diffs.as_slice() {
                    [i] => go(&x[*i], &y[*i], at.index(*i)),
                    _ => Some(at),
                }
            }
            _ => Some(at),
        }
    }
    go(a, b, Location::root())
}
