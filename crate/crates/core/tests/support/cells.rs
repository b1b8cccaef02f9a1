//! Micro-fixtures for scoring: a few labeled cells, two predicted sets.

use restoracle::metrics::{Counts, GroundTruth, MismatchPolicy};
use restoracle::oracle::{OracleSet, OracleType, OracleValue, Provenance};
use restoracle::path::JsonPath;

fn p(s: &str) -> JsonPath {
    JsonPath::parse(s).unwrap()
}

fn t(k: &str) -> OracleType {
    OracleType::from_key(k).unwrap()
}

pub const CELLS: &[(&str, &str)] = &[
    ("s", "string_is_url"),
    ("s", "string_specific_values"),
    ("s", "string_fixed_length"),
    ("n", "number_min_value"),
    ("n", "number_max_value"),
    ("n", "number_specific_values"),
    ("tags", "array_string_fixed_length"),
    ("tags", "array_min_size"),
    ("nums", "array_number_min_value"),
    ("nums", "array_number_asc_order"),
    ("b", "boolean_always_true"),
];

/// A value of the right kind for `ty`, determined by `choice`.
pub fn value(ty: OracleType, choice: u8) -> OracleValue {
    use restoracle::oracle::ValueKind::*;
    let c = choice as u64;
    match ty.value_kind() {
        Flag => OracleValue::Flag(true),
        Length => OracleValue::Length(Some(c + 1)),
        Bound => OracleValue::Bound(Some(c as f64 - 1.5)),
        StringSet => OracleValue::StringSet((0..=c).map(|i| format!("v{i}")).collect()),
        NumberSet => OracleValue::NumberSet((0..=c).map(|i| i as f64).collect()),
        SizeSet => OracleValue::SizeSet((0..=c).collect()),
    }
}

/// Per cell: truth (None = no oracle, Some(v)), and for each predicted set
/// 0 = absent, 1 = same value as truth (or any value if truth absent), 2 = another value.
pub type Cell = (Option<u8>, u8, u8);

pub fn build(cells: &[Cell]) -> (GroundTruth, OracleSet, OracleSet) {
    let mut gt = GroundTruth::new("op");
    let mut a = OracleSet::new("op");
    let mut b = OracleSet::new("op");
    for ((path, key), (truth, pa, pb)) in CELLS.iter().zip(cells) {
        let ty = t(key);
        let tv = truth.map(|c| value(ty, c)).unwrap_or_else(|| OracleValue::absent(ty.value_kind()));
        gt.label(p(path), ty, tv.clone());
        for (set, choice) in [(&mut a, *pa), (&mut b, *pb)] {
            let v = match (choice, truth) {
                (0, _) => continue,
                (1, Some(_)) => tv.clone(),
                (_, Some(c)) => match ty.value_kind() {
                    restoracle::oracle::ValueKind::Flag => continue,
                    _ => value(ty, (c + 1) % 3),
                },
                (_, None) => value(ty, choice),
            };
            set.insert(p(path), ty, v, Provenance::Llm);
        }
    }
    (gt, a, b)
}

/// Counts by direct enumeration of the labeled cells.
pub fn brute_force(gt: &GroundTruth, pred: &OracleSet, policy: MismatchPolicy) -> Counts {
    let mut c = Counts::default();
    for (path, ty, tv) in gt.iter() {
        let pv = pred.get(path, ty);
        match (pv, tv.is_asserted()) {
            (None, false) => c.tn += 1,
            (Some(_), false) => c.fp += 1,
            (None, true) => c.fn_ += 1,
            (Some(v), true) if v.same_as(tv) => c.tp += 1,
            (Some(_), true) => {
                c.fp += 1;
                if policy == MismatchPolicy::FpAndFn {
                    c.fn_ += 1;
                }
            }
        }
    }
    c
}
