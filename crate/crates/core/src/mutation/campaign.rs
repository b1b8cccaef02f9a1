//! Fault-detection campaigns over a set of valid responses.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{mutate, MutantRecord, MutationError, MutationOperator};
use crate::oracle::{detects, evaluate_with, Checker, OracleSet, Violation};
use crate::spec::ResponseField;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OperatorStats {
    pub mutants: usize,
    pub detected: usize,
    pub fdr_percent: f64,
}

/// Fault detection rate of one oracle set over one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FdrReport {
    pub operation_id: String,
    pub seed: u64,
    pub repetitions: usize,
    pub responses: usize,
    pub total_mutants: usize,
    pub detected: usize,
    pub fdr_percent: f64,
    pub per_operator: BTreeMap<MutationOperator, OperatorStats>,
}

/// A mutant together with whether the oracles caught it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MutantOutcome {
    #[serde(flatten)]
    pub record: MutantRecord,
    pub detected: bool,
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub report: FdrReport,
    /// In (repetition, response) order.
    pub mutants: Vec<MutantOutcome>,
}

#[derive(Debug, Error)]
pub enum CampaignError {
    /// An unmutated response already violates the oracles, so detection
    /// would be meaningless.
    #[error("response `{response_id}` violates {} oracle(s) before mutation", violations.len())]
    NotGreen { response_id: String, violations: Vec<Violation> },
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error("mutant of `{0}` does not apply to any known response")]
    UnknownResponse(String),
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the mutant for response `idx` in repetition `rep`.
pub fn derive_seed(seed: u64, rep: usize, idx: usize) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(rep as u64)) ^ idx as u64)
}

fn percent(detected: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * detected as f64 / total as f64
    }
}

/// Mutate every response `repetitions` times and count the mutants the
/// oracles detect. The result is identical for identical inputs regardless
/// of thread count.
pub fn run_campaign(
    checker: &Checker,
    oracles: &OracleSet,
    responses: &[(String, Value)],
    fields: &[ResponseField],
    repetitions: usize,
    seed: u64,
) -> Result<CampaignOutcome, CampaignError> {
    for (id, resp) in responses {
        let violations = evaluate_with(checker, oracles, resp);
        if !violations.is_empty() {
            return Err(CampaignError::NotGreen { response_id: id.clone(), violations });
        }
    }
    let jobs: Vec<(usize, usize)> = (0..repetitions).flat_map(|r| (0..responses.len()).map(move |i| (r, i))).collect();
    let mutants = jobs
        .par_iter()
        .map(|&(rep, idx)| {
            let (id, resp) = &responses[idx];
            let record = mutate(id, resp, fields, derive_seed(seed, rep, idx))?;
            let mutant = record.apply_to(resp).expect("mutant location comes from this response");
            let detected = detects(checker, oracles, &mutant);
            Ok(MutantOutcome { record, detected })
        })
        .collect::<Result<Vec<_>, MutationError>>()?;

    let mut per_operator: BTreeMap<MutationOperator, OperatorStats> = BTreeMap::new();
    for m in &mutants {
        let s = per_operator.entry(m.record.operator).or_default();
        s.mutants += 1;
        s.detected += usize::from(m.detected);
    }
    for s in per_operator.values_mut() {
        s.fdr_percent = percent(s.detected, s.mutants);
    }
    let detected = mutants.iter().filter(|m| m.detected).count();
    let report = FdrReport {
        operation_id: oracles.operation_id.clone(),
        seed,
        repetitions,
        responses: responses.len(),
        total_mutants: mutants.len(),
        detected,
        fdr_percent: percent(detected, mutants.len()),
        per_operator,
    };
    Ok(CampaignOutcome { report, mutants })
}

/// Re-evaluate stored mutants against `oracles`; returns the detected count.
pub fn recount(
    checker: &Checker,
    oracles: &OracleSet,
    responses: &[(String, Value)],
    mutants: &[MutantRecord],
) -> Result<usize, CampaignError> {
    let by_id: BTreeMap<&str, &Value> = responses.iter().map(|(id, v)| (id.as_str(), v)).collect();
    mutants
        .par_iter()
        .map(|m| {
            let resp = by_id.get(m.response_id.as_str()).ok_or_else(|| CampaignError::UnknownResponse(m.response_id.clone()))?;
            let mutant = m.apply_to(resp).ok_or_else(|| CampaignError::UnknownResponse(m.response_id.clone()))?;
            Ok(usize::from(detects(checker, oracles, &mutant)))
        })
        .sum()
}
