//! Scoring of predicted oracle sets against annotated ground truth.
//!
//! Every (field, oracle type) pair of an operation is one cell. A cell is a
//! true positive when both sides assert the same value, a true negative when
//! neither asserts anything, and otherwise a false positive and/or false
//! negative depending on the [`MismatchPolicy`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::oracle::{BaseOracle, OracleSet, OracleType, OracleValue};
use crate::path::JsonPath;
use crate::spec::ResponseField;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("predicted set is for `{predicted}` but ground truth is for `{truth}`")]
    OperationMismatch { predicted: String, truth: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed ground truth: {0}")]
    Shape(String),
}

/// Expected oracles of one operation, including explicit "no oracle" labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub operation_id: String,
    labels: BTreeMap<(JsonPath, OracleType), OracleValue>,
}

impl GroundTruth {
    pub fn new(operation_id: impl Into<String>) -> Self {
        Self { operation_id: operation_id.into(), labels: BTreeMap::new() }
    }

    /// Label a cell. Unasserted values record that no oracle is expected.
    /// Returns `false` if the value has the wrong shape for the type.
    pub fn label(&mut self, path: JsonPath, oracle: OracleType, value: OracleValue) -> bool {
        if value.kind() != oracle.value_kind() {
            return false;
        }
        self.labels.insert((path, oracle), value);
        true
    }

    pub fn get(&self, path: &JsonPath, oracle: OracleType) -> Option<&OracleValue> {
        self.labels.get(&(path.clone(), oracle))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&JsonPath, OracleType, &OracleValue)> {
        self.labels.iter().map(|((p, t), v)| (p, *t, v))
    }

    /// Number of labeled cells.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn asserted_count(&self) -> usize {
        self.labels.values().filter(|v| v.is_asserted()).count()
    }

    /// The asserted labels as an oracle set.
    pub fn to_oracle_set(&self) -> OracleSet {
        let mut set = OracleSet::new(&self.operation_id);
        for ((p, t), v) in &self.labels {
            set.insert(p.clone(), *t, v.clone(), crate::oracle::Provenance::GroundTruth);
        }
        set
    }

    /// Truth whose asserted labels are `set`, with every other applicable
    /// cell of `fields` labeled as "no oracle".
    pub fn from_oracle_set(set: &OracleSet, fields: &[ResponseField]) -> Self {
        let mut gt = Self::new(&set.operation_id);
        for f in fields {
            for t in OracleType::applicable_to(f) {
                gt.labels.insert((f.path.clone(), t), OracleValue::absent(t.value_kind()));
            }
        }
        for (p, t, v) in set.iter() {
            gt.labels.insert((p.clone(), t), v.clone());
        }
        gt
    }

    /// Applicable cells of `fields` that carry no label.
    pub fn coverage_gaps(&self, fields: &[ResponseField]) -> Vec<(JsonPath, OracleType)> {
        fields
            .iter()
            .flat_map(|f| OracleType::applicable_to(f).into_iter().map(move |t| (f.path.clone(), t)))
            .filter(|k| !self.labels.contains_key(k))
            .collect()
    }

    /// Same layout as an oracle set file; no-oracle labels keep their
    /// `false` / `null` / `[]` encodings.
    pub fn to_json(&self) -> Value {
        let mut fields: Map<String, Value> = Map::new();
        for ((p, t), v) in &self.labels {
            let entry = fields.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
            entry.as_object_mut().expect("object").insert(t.key(), v.to_json());
        }
        serde_json::json!({ "operationId": self.operation_id, "fields": fields })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json values serialize");
        s.push('\n');
        s
    }

    pub fn from_json(value: &Value) -> Result<Self, MetricsError> {
        let shape = |m: String| MetricsError::Shape(m);
        let operation_id = value
            .get("operationId")
            .and_then(Value::as_str)
            .ok_or_else(|| shape("missing string `operationId`".into()))?;
        let mut gt = Self::new(operation_id);
        let Some(fields) = value.get("fields") else { return Ok(gt) };
        let fields = fields.as_object().ok_or_else(|| shape("`fields` must be an object".into()))?;
        for (raw_path, cells) in fields {
            let path = JsonPath::parse(raw_path).map_err(|e| shape(format!("{raw_path}: {e}")))?;
            let cells = cells.as_object().ok_or_else(|| shape(format!("{raw_path}: expected an object")))?;
            for (key, raw) in cells {
                let t = OracleType::from_key(key).ok_or_else(|| shape(format!("{raw_path}.{key}: unknown oracle type")))?;
                let v = OracleValue::from_json(t.value_kind(), raw).map_err(|e| shape(format!("{raw_path}.{key}: {e}")))?;
                gt.labels.insert((path.clone(), t), v);
            }
        }
        Ok(gt)
    }

    pub fn from_json_str(text: &str) -> Result<Self, MetricsError> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| MetricsError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text)
    }
}

/// How a cell where both sides assert different values is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MismatchPolicy {
    /// One false positive and one false negative.
    #[default]
    FpAndFn,
    /// One false positive only.
    FpOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.tn += o.tn;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

impl Counts {
    /// Counts of one cell.
    pub fn classify(predicted: Option<&OracleValue>, truth: Option<&OracleValue>, policy: MismatchPolicy) -> Self {
        let p = predicted.filter(|v| v.is_asserted());
        let t = truth.filter(|v| v.is_asserted());
        let mut c = Self::default();
        match (p, t) {
            (None, None) => c.tn = 1,
            (Some(_), None) => c.fp = 1,
            (None, Some(_)) => c.fn_ = 1,
            (Some(a), Some(b)) if a.same_as(b) => c.tp = 1,
            (Some(_), Some(_)) => {
                c.fp = 1;
                c.fn_ = usize::from(policy == MismatchPolicy::FpAndFn);
            }
        }
        c
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; undefined when either is.
    pub fn f1(&self) -> Option<f64> {
        let (p, r) = (self.precision()?, self.recall()?);
        Some(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
    }
}

fn ratio(n: usize, d: usize) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

/// Counts plus derived rates, as fractions in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl From<Counts> for ScoreRow {
    fn from(counts: Counts) -> Self {
        Self { counts, precision: counts.precision(), recall: counts.recall(), f1: counts.f1() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoreReport {
    pub operation_ids: Vec<String>,
    pub policy: MismatchPolicy,
    /// One row per oracle type key, primitive and lifted kept apart.
    pub per_oracle: IndexMap<String, ScoreRow>,
    /// One row per base oracle, merging each type with its lifted variant.
    pub per_type: IndexMap<String, ScoreRow>,
    pub overall: ScoreRow,
    pub warnings: Vec<String>,
}

/// Per-type counts of one operation plus warnings.
fn cell_counts(
    predicted: &OracleSet,
    truth: &GroundTruth,
    policy: MismatchPolicy,
) -> Result<(BTreeMap<OracleType, Counts>, Vec<String>), MetricsError> {
    if predicted.operation_id != truth.operation_id {
        return Err(MetricsError::OperationMismatch {
            predicted: predicted.operation_id.clone(),
            truth: truth.operation_id.clone(),
        });
    }
    let mut counts: BTreeMap<OracleType, Counts> = BTreeMap::new();
    let mut warnings = Vec::new();
    for ((p, t), v) in &truth.labels {
        *counts.entry(*t).or_default() += Counts::classify(predicted.get(p, *t), Some(v), policy);
    }
    let known: BTreeSet<&JsonPath> = truth.labels.keys().map(|(p, _)| p).collect();
    for (p, t, v) in predicted.iter() {
        if truth.labels.contains_key(&(p.clone(), t)) {
            continue;
        }
        if known.contains(p) {
            warnings.push(format!("{}: {p} has no `{}` label; counted as a false positive", truth.operation_id, t.key()));
        } else {
            warnings.push(format!("{}: unknown path {p}; counted as a false positive", truth.operation_id));
        }
        *counts.entry(t).or_default() += Counts::classify(Some(v), None, policy);
    }
    Ok((counts, warnings))
}

fn report(operation_ids: Vec<String>, policy: MismatchPolicy, counts: &BTreeMap<OracleType, Counts>, warnings: Vec<String>) -> ScoreReport {
    let per_oracle = counts.iter().map(|(t, c)| (t.key(), ScoreRow::from(*c))).collect();
    let mut merged: BTreeMap<BaseOracle, Counts> = BTreeMap::new();
    let mut overall = Counts::default();
    for (t, c) in counts {
        *merged.entry(t.base()).or_default() += *c;
        overall += *c;
    }
    let per_type = merged.iter().map(|(b, c)| (b.key().to_string(), ScoreRow::from(*c))).collect();
    ScoreReport { operation_ids, policy, per_oracle, per_type, overall: overall.into(), warnings }
}

/// Score one predicted set against the ground truth of the same operation.
pub fn score(predicted: &OracleSet, truth: &GroundTruth, policy: MismatchPolicy) -> Result<ScoreReport, MetricsError> {
    score_many(&[(predicted, truth)], policy)
}

/// Score several operations at once; counts are summed cell-wise.
pub fn score_many(pairs: &[(&OracleSet, &GroundTruth)], policy: MismatchPolicy) -> Result<ScoreReport, MetricsError> {
    let mut total: BTreeMap<OracleType, Counts> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut ids = Vec::new();
    for (p, t) in pairs {
        let (c, w) = cell_counts(p, t, policy)?;
        for (k, v) in c {
            *total.entry(k).or_default() += v;
        }
        warnings.extend(w);
        ids.push(t.operation_id.clone());
    }
    Ok(report(ids, policy, &total, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlapCounts {
    pub only_a: usize,
    pub only_b: usize,
    pub both: usize,
    /// Truth-asserted oracles neither set recalled.
    pub neither: usize,
}

impl OverlapCounts {
    pub fn total(&self) -> usize {
        self.only_a + self.only_b + self.both + self.neither
    }

    pub fn recall_a(&self) -> Option<f64> {
        ratio(self.only_a + self.both, self.total())
    }

    pub fn recall_b(&self) -> Option<f64> {
        ratio(self.only_b + self.both, self.total())
    }

    /// The same counts with the roles of the two sets exchanged.
    pub fn swapped(&self) -> Self {
        Self { only_a: self.only_b, only_b: self.only_a, ..*self }
    }

    fn add(&mut self, a: bool, b: bool) {
        match (a, b) {
            (true, true) => self.both += 1,
            (true, false) => self.only_a += 1,
            (false, true) => self.only_b += 1,
            (false, false) => self.neither += 1,
        }
    }
}

/// Which of two predicted sets recalled each truth-asserted oracle.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlapReport {
    pub overall: OverlapCounts,
    pub by_type: IndexMap<String, OverlapCounts>,
    pub by_operation: IndexMap<String, OverlapCounts>,
}

pub fn overlap(a: &OracleSet, b: &OracleSet, truth: &GroundTruth) -> Result<OverlapReport, MetricsError> {
    overlap_many(&[(a, b, truth)])
}

pub fn overlap_many(triples: &[(&OracleSet, &OracleSet, &GroundTruth)]) -> Result<OverlapReport, MetricsError> {
    let mut overall = OverlapCounts::default();
    let mut by_type: BTreeMap<BaseOracle, OverlapCounts> = BTreeMap::new();
    let mut by_operation: IndexMap<String, OverlapCounts> = IndexMap::new();
    for (a, b, truth) in triples {
        for set in [a, b] {
            if set.operation_id != truth.operation_id {
                return Err(MetricsError::OperationMismatch {
                    predicted: set.operation_id.clone(),
                    truth: truth.operation_id.clone(),
                });
            }
        }
        let op = by_operation.entry(truth.operation_id.clone()).or_default();
        for ((p, t), v) in truth.labels.iter().filter(|(_, v)| v.is_asserted()) {
            let hit = |s: &OracleSet| s.get(p, *t).is_some_and(|x| x.same_as(v));
            let (ha, hb) = (hit(a), hit(b));
            overall.add(ha, hb);
            op.add(ha, hb);
            by_type.entry(t.base()).or_default().add(ha, hb);
        }
    }
    Ok(OverlapReport {
        overall,
        by_type: by_type.into_iter().map(|(k, v)| (k.key().to_string(), v)).collect(),
        by_operation,
    })
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{:.1}", v * 100.0))
}

/// Aligned text table with one block of columns per named report: P, R
/// and F1 in percent followed by TP, TN, FP and FN. Undefined rates print
/// as `-`. Rows are the merged oracle types present in any report, then
/// the overall row.
pub fn render_table(reports: &[(&str, &ScoreReport)]) -> String {
    const COLS: [&str; 7] = ["P", "R", "F1", "TP", "TN", "FP", "FN"];
    let mut names: Vec<&str> = BaseOracle::ALL
        .iter()
        .map(|b| b.key())
        .filter(|k| reports.iter().any(|(_, r)| r.per_type.contains_key(*k)))
        .collect();
    names.push("overall");
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["oracle".to_string()];
    for (label, _) in reports {
        header.extend(COLS.iter().map(|c| format!("{label} {c}")));
    }
    rows.push(header);
    for name in &names {
        let mut row = vec![name.to_string()];
        for (_, r) in reports {
            let s = if *name == "overall" { Some(&r.overall) } else { r.per_type.get(*name) };
            match s {
                Some(s) => {
                    let c = s.counts;
                    row.extend([pct(s.precision), pct(s.recall), pct(s.f1)]);
                    row.extend([c.tp, c.tn, c.fp, c.fn_].map(|n| n.to_string()));
                }
                None => row.extend(COLS.iter().map(|_| "-".to_string())),
            }
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len()).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, cell)| if i == 0 { format!("{cell:<w$}", w = widths[i]) } else { format!("{cell:>w$}", w = widths[i]) })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Provenance;

    fn p(s: &str) -> JsonPath {
        JsonPath::parse(s).unwrap()
    }

    fn t(k: &str) -> OracleType {
        OracleType::from_key(k).unwrap()
    }

    fn strings(v: &[&str]) -> OracleValue {
        OracleValue::StringSet(v.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn value_mismatch_is_fp_and_fn() {
        let mut gt = GroundTruth::new("op");
        gt.label(p("price"), t("string_specific_values"), strings(&["$", "$$", "$$$", "$$$$"]));
        let mut pred = OracleSet::new("op");
        pred.insert(p("price"), t("string_specific_values"), strings(&["$", "$$"]), Provenance::Llm);
        let r = score(&pred, &gt, MismatchPolicy::FpAndFn).unwrap();
        assert_eq!(r.overall.counts, Counts { tp: 0, tn: 0, fp: 1, fn_: 1 });
        assert_eq!(r.overall.f1, Some(0.0));
        let r = score(&pred, &gt, MismatchPolicy::FpOnly).unwrap();
        assert_eq!(r.overall.counts, Counts { tp: 0, tn: 0, fp: 1, fn_: 0 });
        assert_eq!(r.overall.recall, None);
        assert_eq!(r.overall.f1, None);
    }

    #[test]
    fn set_order_does_not_matter() {
        let mut gt = GroundTruth::new("op");
        gt.label(p("s"), t("string_specific_values"), strings(&["a", "b"]));
        let mut pred = OracleSet::new("op");
        pred.insert(p("s"), t("string_specific_values"), strings(&["b", "a"]), Provenance::Llm);
        assert_eq!(score(&pred, &gt, MismatchPolicy::FpAndFn).unwrap().overall.counts.tp, 1);
    }

    #[test]
    fn operation_mismatch() {
        let err = score(&OracleSet::new("a"), &GroundTruth::new("b"), MismatchPolicy::FpAndFn).unwrap_err();
        assert!(matches!(err, MetricsError::OperationMismatch { .. }));
    }

    #[test]
    fn unknown_predicted_path_is_fp_with_warning() {
        let mut gt = GroundTruth::new("op");
        gt.label(p("a"), t("string_is_url"), OracleValue::Flag(false));
        let mut pred = OracleSet::new("op");
        pred.insert(p("zzz"), t("string_is_url"), OracleValue::Flag(true), Provenance::Llm);
        let r = score(&pred, &gt, MismatchPolicy::FpAndFn).unwrap();
        assert_eq!(r.overall.counts, Counts { tp: 0, tn: 1, fp: 1, fn_: 0 });
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn json_round_trip_keeps_absence() {
        let mut gt = GroundTruth::new("op");
        gt.label(p("a"), t("string_is_url"), OracleValue::Flag(false));
        gt.label(p("a"), t("string_fixed_length"), OracleValue::Length(None));
        gt.label(p("n"), t("number_min_value"), OracleValue::Bound(Some(-90.0)));
        let back = GroundTruth::from_json_str(&gt.to_json_string()).unwrap();
        assert_eq!(back, gt);
        assert_eq!(back.asserted_count(), 1);
        assert_eq!(back.to_oracle_set().len(), 1);
    }

    #[test]
    fn table_marks_undefined() {
        let mut gt = GroundTruth::new("op");
        gt.label(p("a"), t("string_is_url"), OracleValue::Flag(false));
        let r = score(&OracleSet::new("op"), &gt, MismatchPolicy::FpAndFn).unwrap();
        let table = render_table(&[("x", &r)]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("string_is_url"));
        assert!(lines[2].split_whitespace().skip(1).take(3).all(|c| c == "-"), "{table}");
    }

    #[test]
    fn overlap_swaps() {
        let mut gt = GroundTruth::new("op");
        gt.label(p("a"), t("string_is_url"), OracleValue::Flag(true));
        gt.label(p("b"), t("string_is_url"), OracleValue::Flag(true));
        let mut a = OracleSet::new("op");
        a.insert(p("a"), t("string_is_url"), OracleValue::Flag(true), Provenance::Llm);
        let mut b = OracleSet::new("op");
        b.insert(p("b"), t("string_is_url"), OracleValue::Flag(true), Provenance::Llm);
        let ab = overlap(&a, &b, &gt).unwrap();
        let ba = overlap(&b, &a, &gt).unwrap();
        assert_eq!(ab.overall, OverlapCounts { only_a: 1, only_b: 1, both: 0, neither: 0 });
        assert_eq!(ab.overall.swapped(), ba.overall);
    }
}
