//! Addressing of response fields.
//!
//! A [`JsonPath`] is a sequence of object keys and array wildcards, rendered as
//! `businesses[*].location.country`. The empty path addresses the document root
//! and renders as `$`. Keys that are not plain identifiers are bracket-quoted
//! with JSON string escaping (`["a.b"]`), so every path round-trips through its
//! string form.
//!
//! A [`Location`] is the concrete counterpart produced by resolution, with array
//! indices in place of wildcards (`businesses[0].location.country`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid path `{input}` at byte {offset}: {reason}")]
pub struct PathParseError {
    pub input: String,
    pub offset: usize,
    pub reason: &'static str,
}

/// One step of a [`JsonPath`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    Key(String),
    Wildcard,
}

/// Canonical address of a response field, with `[*]` for array traversal.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JsonPath {
    segments: Vec<Segment>,
}

/// One step of a [`Location`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Key(String),
    Index(usize),
}

/// A concrete position inside one JSON document.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    steps: Vec<Step>,
}

impl JsonPath {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_segments(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn key(&self, key: impl Into<String>) -> Self {
        let mut segments = self.segments.clone();
        segments.push(Segment::Key(key.into()));
        Self { segments }
    }

    pub fn wildcard(&self) -> Self {
        let mut segments = self.segments.clone();
        segments.push(Segment::Wildcard);
        Self { segments }
    }

    /// The last object key of the path, if any.
    pub fn last_key(&self) -> Option<&str> {
        self.segments.iter().rev().find_map(|s| match s {
            Segment::Key(k) => Some(k.as_str()),
            Segment::Wildcard => None,
        })
    }

    pub fn parse(input: &str) -> Result<Self, PathParseError> {
        let raw = parse_raw(input)?;
        let mut segments = Vec::with_capacity(raw.len());
        for (offset, step) in raw {
            match step {
                RawStep::Key(k) => segments.push(Segment::Key(k)),
                RawStep::Wildcard => segments.push(Segment::Wildcard),
                RawStep::Index(_) => {
                    return Err(PathParseError {
                        input: input.to_string(),
                        offset,
                        reason: "array indices are not allowed in field paths",
                    })
                }
            }
        }
        Ok(Self { segments })
    }

    /// Every value addressed by this path in `document`, in document order.
    ///
    /// Missing keys and type mismatches (a key applied to a non-object, a
    /// wildcard applied to a non-array) simply yield no match.
    pub fn resolve<'a>(&self, document: &'a Value) -> Vec<(Location, &'a Value)> {
        let mut out = Vec::new();
        let mut steps = Vec::new();
        resolve_into(&self.segments, document, &mut steps, &mut out);
        out
    }
}

fn resolve_into<'a>(
    segments: &[Segment],
    value: &'a Value,
    steps: &mut Vec<Step>,
    out: &mut Vec<(Location, &'a Value)>,
) {
    let Some((head, rest)) = segments.split_first() else {
        out.push((Location { steps: steps.clone() }, value));
        return;
    };
    match (head, value) {
        (Segment::Key(k), Value::Object(map)) => {
            if let Some(child) = map.get(k) {
                steps.push(Step::Key(k.clone()));
                resolve_into(rest, child, steps, out);
                steps.pop();
            }
        }
        (Segment::Wildcard, Value::Array(items)) => {
            for (i, child) in items.iter().enumerate() {
                steps.push(Step::Index(i));
                resolve_into(rest, child, steps, out);
                steps.pop();
            }
        }
        _ => {}
    }
}

/// Free function form of [`JsonPath::resolve`].
pub fn resolve_path<'a>(path: &JsonPath, document: &'a Value) -> Vec<(Location, &'a Value)> {
    path.resolve(document)
}

impl Location {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_steps(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn key(&self, key: impl Into<String>) -> Self {
        let mut steps = self.steps.clone();
        steps.push(Step::Key(key.into()));
        Self { steps }
    }

    pub fn index(&self, index: usize) -> Self {
        let mut steps = self.steps.clone();
        steps.push(Step::Index(index));
        Self { steps }
    }

    pub fn parse(input: &str) -> Result<Self, PathParseError> {
        let raw = parse_raw(input)?;
        let mut steps = Vec::with_capacity(raw.len());
        for (offset, step) in raw {
            match step {
                RawStep::Key(k) => steps.push(Step::Key(k)),
                RawStep::Index(i) => steps.push(Step::Index(i)),
                RawStep::Wildcard => {
                    return Err(PathParseError {
                        input: input.to_string(),
                        offset,
                        reason: "wildcards are not allowed in concrete locations",
                    })
                }
            }
        }
        Ok(Self { steps })
    }

    /// The field path this location is an instance of.
    pub fn generalize(&self) -> JsonPath {
        JsonPath::from_segments(
            self.steps
                .iter()
                .map(|s| match s {
                    Step::Key(k) => Segment::Key(k.clone()),
                    Step::Index(_) => Segment::Wildcard,
                })
                .collect(),
        )
    }

    pub fn get<'a>(&self, document: &'a Value) -> Option<&'a Value> {
        let mut current = document;
        for step in &self.steps {
            current = match (step, current) {
                (Step::Key(k), Value::Object(map)) => map.get(k)?,
                (Step::Index(i), Value::Array(items)) => items.get(*i)?,
                _ => return None,
            };
        }
        Some(current)
    }

    pub fn get_mut<'a>(&self, document: &'a mut Value) -> Option<&'a mut Value> {
        let mut current = document;
        for step in &self.steps {
            current = match (step, current) {
                (Step::Key(k), Value::Object(map)) => map.get_mut(k)?,
                (Step::Index(i), Value::Array(items)) => items.get_mut(*i)?,
                _ => return None,
            };
        }
        Some(current)
    }
}

pub(crate) fn is_plain_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

pub(crate) fn write_key(out: &mut String, key: &str, first: bool) {
    if is_plain_key(key) {
        if !first {
            out.push('.');
        }
        out.push_str(key);
    } else {
        out.push('[');
        out.push_str(&serde_json::to_string(key).expect("strings always serialize"));
        out.push(']');
    }
}

impl fmt::Display for JsonPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.segments.is_empty() {
            return f.write_str("$");
        }
        let mut out = String::new();
        for (i, seg) in self.segments.iter().enumerate() {
            match seg {
                Segment::Key(k) => write_key(&mut out, k, i == 0),
                Segment::Wildcard => out.push_str("[*]"),
            }
        }
        f.write_str(&out)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("$");
        }
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                Step::Key(k) => write_key(&mut out, k, i == 0),
                Step::Index(n) => {
                    out.push('[');
                    out.push_str(&n.to_string());
                    out.push(']');
                }
            }
        }
        f.write_str(&out)
    }
}

enum RawStep {
    Key(String),
    Index(usize),
    Wildcard,
}

fn parse_raw(input: &str) -> Result<Vec<(usize, RawStep)>, PathParseError> {
    let err = |offset: usize, reason: &'static str| PathParseError {
        input: input.to_string(),
        offset,
        reason,
    };
    let bytes = input.as_bytes();
    let mut pos = 0;
    let mut out = Vec::new();

    if bytes.first() == Some(&b'$') {
        pos = 1;
        if pos == bytes.len() {
            return Ok(out);
        }
        if bytes[pos] == b'.' {
            pos += 1;
            if pos == bytes.len() {
                return Err(err(pos, "expected a key after `.`"));
            }
        } else if bytes[pos] != b'[' {
            // A bare key that merely starts with `$` is never produced by
            // rendering, but `$` alone is the root.
            return Err(err(pos, "expected `.` or `[` after `$`"));
        }
    } else if input.is_empty() {
        return Err(err(0, "empty path"));
    }

    let mut expect_key = bytes.get(pos) != Some(&b'[');
    while pos < bytes.len() {
        if expect_key {
            let start = pos;
            while pos < bytes.len() && bytes[pos] != b'.' && bytes[pos] != b'[' {
                pos += 1;
            }
            let key = &input[start..pos];
            if !is_plain_key(key) {
                return Err(err(start, "keys outside brackets must be [A-Za-z0-9_-]+"));
            }
            out.push((start, RawStep::Key(key.to_string())));
            expect_key = false;
            continue;
        }
        match bytes[pos] {
            b'.' => {
                pos += 1;
                if pos == bytes.len() {
                    return Err(err(pos, "trailing `.`"));
                }
                expect_key = true;
            }
            b'[' => {
                let start = pos;
                pos += 1;
                match bytes.get(pos) {
                    Some(b'*') => {
                        if bytes.get(pos + 1) != Some(&b']') {
                            return Err(err(pos, "expected `]` after `*`"));
                        }
                        pos += 2;
                        out.push((start, RawStep::Wildcard));
                    }
                    Some(b'"') => {
                        let mut stream = serde_json::Deserializer::from_str(&input[pos..])
                            .into_iter::<String>();
                        let key = match stream.next() {
                            Some(Ok(k)) => k,
                            _ => return Err(err(pos, "malformed quoted key")),
                        };
                        pos += stream.byte_offset();
                        if bytes.get(pos) != Some(&b']') {
                            return Err(err(pos, "expected `]` after quoted key"));
                        }
                        pos += 1;
                        out.push((start, RawStep::Key(key)));
                    }
                    Some(b) if b.is_ascii_digit() => {
                        let digits = pos;
                        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                            pos += 1;
                        }
                        if bytes.get(pos) != Some(&b']') {
                            return Err(err(pos, "expected `]` after index"));
                        }
                        let n = input[digits..pos]
                            .parse()
                            .map_err(|_| err(digits, "index out of range"))?;
                        pos += 1;
                        out.push((start, RawStep::Index(n)));
                    }
                    _ => return Err(err(pos, "expected `*`, an index or a quoted key")),
                }
            }
            _ => return Err(err(pos, "expected `.` or `[`")),
        }
    }
    Ok(out)
}

impl FromStr for JsonPath {
    type Err = PathParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl FromStr for Location {
    type Err = PathParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for JsonPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for JsonPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Location {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Location {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn listing_two() -> Value {
        json!({
            "total": 1,
            "businesses": [{
                "id": "7dzGDH1BtzEjhZh1FeeaqA",
                "price": "$",
                "location": {"city": "Seville", "country": "ES"}
            }]
        })
    }

    #[test]
    fn renders_canonical_forms() {
        let p = JsonPath::root().key("businesses").wildcard().key("price");
        assert_eq!(p.to_string(), "businesses[*].price");
        assert_eq!(JsonPath::root().to_string(), "$");
        assert_eq!(JsonPath::root().wildcard().key("id").to_string(), "[*].id");
        assert_eq!(JsonPath::root().key("a.b").key("c").to_string(), r#"["a.b"].c"#);
    }

    #[test]
    fn parses_dollar_prefixed_forms() {
        let p = JsonPath::parse("$.businesses[*].price").unwrap();
        assert_eq!(p, JsonPath::parse("businesses[*].price").unwrap());
        assert!(JsonPath::parse("$").unwrap().is_root());
        assert_eq!(JsonPath::parse("$[*]").unwrap(), JsonPath::root().wildcard());
    }

    #[test]
    fn rejects_malformed_paths() {
        for bad in ["", "a.", "a..b", "a[", "a[*", "a[x]", "a b", "$x", r#"["unterminated]"#] {
            assert!(JsonPath::parse(bad).is_err(), "{bad} should not parse");
        }
        assert!(JsonPath::parse("a[0]").is_err());
        assert!(Location::parse("a[*]").is_err());
    }

    #[test]
    fn resolves_listing_two_country() {
        let doc = listing_two();
        let path = JsonPath::parse("businesses[*].location.country").unwrap();
        let hits = path.resolve(&doc);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0.to_string(), "businesses[0].location.country");
        assert_eq!(hits[0].1, &json!("ES"));
    }

    #[test]
    fn empty_document_has_no_matches() {
        let doc = json!({});
        for p in ["total", "businesses[*].price", "a.b.c"] {
            assert!(JsonPath::parse(p).unwrap().resolve(&doc).is_empty());
        }
        assert_eq!(JsonPath::root().resolve(&doc).len(), 1);
    }

    #[test]
    fn wildcard_skips_elements_missing_the_key() {
        let doc = json!({"items": [{"x": 1}, {"y": 2}, {"x": 3}, {}, {"x": null}]});
        // Brute-force index walk over the five elements.
        let mut expected = Vec::new();
        for i in 0..5 {
            if let Some(v) = doc["items"][i].as_object().and_then(|o| o.get("x")) {
                expected.push((format!("items[{i}].x"), v.clone()));
            }
        }
        let got: Vec<_> = JsonPath::parse("items[*].x")
            .unwrap()
            .resolve(&doc)
            .into_iter()
            .map(|(l, v)| (l.to_string(), v.clone()))
            .collect();
        assert_eq!(got.len(), 3);
        assert_eq!(got, expected);
    }

    #[test]
    fn location_get_and_generalize() {
        let doc = listing_two();
        let loc = Location::parse("businesses[0].location.city").unwrap();
        assert_eq!(loc.get(&doc), Some(&json!("Seville")));
        assert_eq!(loc.generalize().to_string(), "businesses[*].location.city");
        assert_eq!(Location::parse("businesses[3].id").unwrap().get(&doc), None);
    }

    fn arb_segment() -> impl Strategy<Value = Segment> {
        prop_oneof![
            Just(Segment::Wildcard),
            "[a-z_]{1,6}".prop_map(Segment::Key),
            any::<String>().prop_map(Segment::Key),
        ]
    }

    proptest! {
        #[test]
        fn path_round_trips(segments in prop::collection::vec(arb_segment(), 0..6)) {
            let p = JsonPath::from_segments(segments);
            let rendered = p.to_string();
            prop_assert_eq!(JsonPath::parse(&rendered).unwrap(), p);
        }

        #[test]
        fn location_round_trips(steps in prop::collection::vec(
            prop_oneof![any::<usize>().prop_map(Step::Index), any::<String>().prop_map(Step::Key)], 0..6)) {
            let l = Location::from_steps(steps);
            prop_assert_eq!(Location::parse(&l.to_string()).unwrap(), l);
        }
    }
}
