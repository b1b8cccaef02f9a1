use serde::Serialize;
use serde_json::Value;

use super::check::{default_checker, Verdict};
use super::predicates::Checker;
use super::set::OracleSet;
use super::types::{OracleType, OracleValue};
use crate::path::{JsonPath, Location};

/// One failed oracle check against a concrete response.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub path: JsonPath,
    pub concrete_location: Location,
    pub oracle_type: OracleType,
    pub expected: OracleValue,
    pub observed: Value,
    pub message: String,
}

/// Evaluate every asserted oracle against `response` with default grammars.
pub fn evaluate(oracles: &OracleSet, response: &Value) -> Vec<Violation> {
    evaluate_with(default_checker(), oracles, response)
}

/// Violations ordered by path, oracle type, then document order.
pub fn evaluate_with(checker: &Checker, oracles: &OracleSet, response: &Value) -> Vec<Violation> {
    let mut out = Vec::new();
    for (path, oracle, expected) in oracles.iter() {
        for (location, observed) in path.resolve(response) {
            let (verdict, failing) = checker.check_detailed(oracle, expected, observed);
            if verdict != Verdict::Fail {
                continue;
            }
            let message = if oracle.is_element() {
                let idx: Vec<String> = failing.iter().map(usize::to_string).collect();
                format!("{location}: elements [{}] violate {oracle} {expected}", idx.join(", "))
            } else {
                format!("{location}: {observed} violates {oracle} {expected}")
            };
            out.push(Violation {
                path: path.clone(),
                concrete_location: location,
                oracle_type: oracle,
                expected: expected.clone(),
                observed: observed.clone(),
                message,
            });
        }
    }
    out
}

/// Whether any oracle of `oracles` fails on `response`; stops at the first.
pub fn detects(checker: &Checker, oracles: &OracleSet, response: &Value) -> bool {
    oracles.iter().any(|(path, oracle, expected)| {
        path.resolve(response).into_iter().any(|(_, v)| checker.check(oracle, expected, v) == Verdict::Fail)
    })
}
