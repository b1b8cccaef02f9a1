//! Single-fault, schema-preserving mutation of JSON responses.
//!
//! A mutant changes exactly one location of a response with one of twelve
//! operators. Operators keep the value's JSON type, never produce `null`,
//! keep enum-constrained values inside their enum, and respect the length,
//! bound, pattern and item-count keywords of the location's schema.
//! `format` is treated as an annotation, so a mutated date may stop looking
//! like a date; that is exactly the kind of fault oracles should catch.

mod campaign;

pub use campaign::{derive_seed, recount, run_campaign, CampaignError, CampaignOutcome, FdrReport, MutantOutcome, OperatorStats};

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};
use thiserror::Error;

use crate::path::Location;
use crate::spec::{Constraints, Datatype, ResponseField};

const ALPHANUMERIC: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
/// Random attempts per candidate before it is given up.
const TRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MutationOperator {
    /// Boolean to its negation.
    BoolFlip,
    /// Number plus a nonzero integer in [-10, 10].
    NumAddDelta,
    /// Nonzero number to its negation.
    NumNegate,
    /// Number to another enum member, or to a random value within bounds.
    NumReplaceRandom,
    /// One character of a non-empty string replaced by a different alphanumeric.
    StrMutateChar,
    /// String to another enum member, or to random alphanumerics of the same length.
    StrReplaceRandom,
    /// Non-empty string to `""`.
    StrEmpty,
    /// Case of every cased character swapped.
    StrCaseToggle,
    /// One element removed from a non-empty array.
    ArrRemoveElement,
    /// One element repeated right after itself.
    ArrDuplicateElement,
    /// Two adjacent, different elements swapped.
    ArrSwapAdjacent,
    /// Elements permuted into a different order.
    ArrShuffle,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 12] = [
        Self::BoolFlip,
        Self::NumAddDelta,
        Self::NumNegate,
        Self::NumReplaceRandom,
        Self::StrMutateChar,
        Self::StrReplaceRandom,
        Self::StrEmpty,
        Self::StrCaseToggle,
        Self::ArrRemoveElement,
        Self::ArrDuplicateElement,
        Self::ArrSwapAdjacent,
        Self::ArrShuffle,
    ];

    /// Operators defined over a JSON datatype.
    pub fn for_datatype(d: Datatype) -> &'static [MutationOperator] {
        use MutationOperator::*;
        match d.unified() {
            Datatype::Boolean => &[BoolFlip],
            Datatype::Number => &[NumAddDelta, NumNegate, NumReplaceRandom],
            Datatype::String => &[StrMutateChar, StrReplaceRandom, StrEmpty, StrCaseToggle],
            Datatype::Array => &[ArrRemoveElement, ArrDuplicateElement, ArrSwapAdjacent, ArrShuffle],
            _ => &[],
        }
    }

    /// Whether the operator can change `value` at a location with `schema`,
    /// before any randomness is drawn.
    pub fn applicable(self, value: &Value, schema: &SlotSchema) -> bool {
        use MutationOperator::*;
        let in_enum = schema.enum_values.is_some();
        match (self, value) {
            (BoolFlip, Value::Bool(b)) => schema.enum_values.is_none_or(|e| e.contains(&Value::Bool(!b))),
            (NumReplaceRandom, Value::Number(_)) if in_enum => other_members(value, schema).next().is_some(),
            (NumAddDelta, Value::Number(_)) => !in_enum,
            (NumNegate, Value::Number(n)) => !in_enum && n.as_f64().is_some_and(|x| x != 0.0),
            (NumReplaceRandom, Value::Number(_)) => true,
            (StrReplaceRandom, Value::String(_)) if in_enum => other_members(value, schema).next().is_some(),
            (StrMutateChar | StrReplaceRandom | StrEmpty, Value::String(s)) => !in_enum && !s.is_empty(),
            (StrCaseToggle, Value::String(s)) => !in_enum && toggle_case(s) != *s,
            (ArrRemoveElement, Value::Array(a)) => !a.is_empty(),
            (ArrDuplicateElement, Value::Array(a)) => !a.is_empty() && !schema.constraints.unique_items,
            (ArrSwapAdjacent | ArrShuffle, Value::Array(a)) => a.windows(2).any(|w| w[0] != w[1]),
            _ => false,
        }
    }

    /// A mutated copy of `value`, or `None` when the draw produced nothing new.
    fn apply(self, value: &Value, schema: &SlotSchema, rng: &mut ChaCha8Rng) -> Option<Value> {
        use MutationOperator::*;
        let out = match (self, value) {
            (BoolFlip, Value::Bool(b)) => Value::Bool(!b),
            (NumReplaceRandom | StrReplaceRandom, _) if schema.enum_values.is_some() => {
                let others: Vec<&Value> = other_members(value, schema).collect();
                (*others.choose(rng)?).clone()
            }
            (NumAddDelta, Value::Number(n)) => {
                let mut d: i64 = rng.gen_range(-10..=9);
                if d >= 0 {
                    d += 1;
                }
                match n.as_i64() {
                    Some(i) => Value::from(i.checked_add(d)?),
                    None => number(n.as_f64()? + d as f64)?,
                }
            }
            (NumNegate, Value::Number(n)) => match n.as_i64() {
                Some(i) => Value::from(i.checked_neg()?),
                None => number(-n.as_f64()?)?,
            },
            (NumReplaceRandom, Value::Number(n)) => {
                let lo = schema.constraints.minimum.unwrap_or(-1000.0);
                let hi = schema.constraints.maximum.unwrap_or(1000.0);
                if n.is_f64() && schema.datatype != Datatype::Integer {
                    if lo > hi {
                        return None;
                    }
                    number((rng.gen_range(lo..=hi) * 100.0).round() / 100.0)?
                } else {
                    let (lo, hi) = (lo.ceil() as i64, hi.floor() as i64);
                    if lo > hi {
                        return None;
                    }
                    Value::from(rng.gen_range(lo..=hi))
                }
            }
            (StrMutateChar, Value::String(s)) => {
                let mut chars: Vec<char> = s.chars().collect();
                let i = rng.gen_range(0..chars.len());
                let c = loop {
                    let c = *ALPHANUMERIC.choose(rng)? as char;
                    if c != chars[i] {
                        break c;
                    }
                };
                chars[i] = c;
                Value::String(chars.into_iter().collect())
            }
            (StrReplaceRandom, Value::String(s)) => {
                let len = s.chars().count();
                Value::String((0..len).map(|_| *ALPHANUMERIC.choose(rng).expect("non-empty") as char).collect())
            }
            (StrEmpty, Value::String(_)) => Value::String(String::new()),
            (StrCaseToggle, Value::String(s)) => Value::String(toggle_case(s)),
            (ArrRemoveElement, Value::Array(a)) => {
                let mut a = a.clone();
                a.remove(rng.gen_range(0..a.len()));
                Value::Array(a)
            }
            (ArrDuplicateElement, Value::Array(a)) => {
                let mut a = a.clone();
                let i = rng.gen_range(0..a.len());
                a.insert(i + 1, a[i].clone());
                Value::Array(a)
            }
            (ArrSwapAdjacent, Value::Array(a)) => {
                let pairs: Vec<usize> = (0..a.len() - 1).filter(|&i| a[i] != a[i + 1]).collect();
                let i = *pairs.choose(rng)?;
                let mut a = a.clone();
                a.swap(i, i + 1);
                Value::Array(a)
            }
            (ArrShuffle, Value::Array(a)) => {
                let mut a = a.clone();
                a.shuffle(rng);
                Value::Array(a)
            }
            _ => return None,
        };
        (out != *value).then_some(out)
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn other_members<'a>(value: &'a Value, schema: &'a SlotSchema) -> impl Iterator<Item = &'a Value> {
    schema.enum_values.into_iter().flatten().filter(move |m| !same_json(m, value) && m.is_string() == value.is_string())
}

fn same_json(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

fn number(x: f64) -> Option<Value> {
    Number::from_f64(x).map(Value::Number)
}

fn toggle_case(s: &str) -> String {
    s.chars()
        .flat_map(|c| {
            let v: Vec<char> = if c.is_lowercase() {
                c.to_uppercase().collect()
            } else if c.is_uppercase() {
                c.to_lowercase().collect()
            } else {
                vec![c]
            };
            v
        })
        .collect()
}

/// Schema facts governing one mutable location.
#[derive(Debug, Clone)]
pub struct SlotSchema<'a> {
    pub datatype: Datatype,
    pub enum_values: Option<&'a Vec<Value>>,
    pub constraints: &'a Constraints,
    /// For array elements, the constraints of the enclosing array.
    pub parent: Option<&'a Constraints>,
}

impl SlotSchema<'_> {
    fn admits(&self, value: &Value) -> bool {
        if value.is_null() || !self.datatype.matches(value) {
            return false;
        }
        if let Some(e) = self.enum_values {
            if !e.iter().any(|m| same_json(m, value)) {
                return false;
            }
        }
        self.constraints.admits(value)
    }
}

/// A mutable location in a concrete response.
#[derive(Debug, Clone)]
pub struct Slot<'a> {
    pub location: Location,
    pub schema: SlotSchema<'a>,
}

/// Every location of `response` addressed by `fields`, including the
/// elements of primitive arrays, in field order then document order.
/// Null values and values that do not match their declared type are skipped.
pub fn mutable_slots<'a>(response: &Value, fields: &'a [ResponseField]) -> Vec<Slot<'a>> {
    let mut out = Vec::new();
    for f in fields {
        for (location, value) in f.path.resolve(response) {
            if value.is_null() || !f.datatype.matches(value) {
                continue;
            }
            out.push(Slot {
                location: location.clone(),
                schema: SlotSchema {
                    datatype: f.datatype,
                    enum_values: f.enum_values.as_ref(),
                    constraints: &f.constraints,
                    parent: None,
                },
            });
            if let (Some(el), Value::Array(items)) = (&f.element, value) {
                for (i, item) in items.iter().enumerate() {
                    if item.is_null() || !el.datatype.matches(item) {
                        continue;
                    }
                    out.push(Slot {
                        location: location.index(i),
                        schema: SlotSchema {
                            datatype: el.datatype,
                            enum_values: el.enum_values.as_ref(),
                            constraints: &el.constraints,
                            parent: Some(&f.constraints),
                        },
                    });
                }
            }
        }
    }
    out
}

/// A reproducible single-fault mutant, stored as its one changed location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MutantRecord {
    pub response_id: String,
    pub seed: u64,
    pub operator: MutationOperator,
    pub path: Location,
    pub before: Value,
    pub after: Value,
}

impl MutantRecord {
    /// The mutated response. `None` if `response` has nothing at `path`.
    pub fn apply_to(&self, response: &Value) -> Option<Value> {
        let mut out = response.clone();
        *self.path.get_mut(&mut out)? = self.after.clone();
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("response `{0}` has no location any operator can mutate")]
    NoMutableLocation(String),
}

/// One seeded mutant of `response`.
///
/// The applicable (location, operator) pairs are shuffled with a ChaCha8
/// generator seeded by `seed`; the first pair whose draw changes the value
/// and stays schema-valid wins.
pub fn mutate(
    response_id: &str,
    response: &Value,
    fields: &[ResponseField],
    seed: u64,
) -> Result<MutantRecord, MutationError> {
    let slots = mutable_slots(response, fields);
    let mut candidates: Vec<(&Slot, &Value, MutationOperator)> = Vec::new();
    for slot in &slots {
        let value = slot.location.get(response).expect("slot resolved from this response");
        for op in MutationOperator::for_datatype(slot.schema.datatype) {
            if op.applicable(value, &slot.schema) {
                candidates.push((slot, value, *op));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    for (slot, value, op) in candidates {
        for _ in 0..TRIES {
            let Some(after) = op.apply(value, &slot.schema, &mut rng) else { continue };
            if !slot.schema.admits(&after) {
                continue;
            }
            if let Some(parent) = slot.schema.parent {
                let mut doc = response.clone();
                *slot.location.get_mut(&mut doc).expect("slot exists") = after.clone();
                let array_loc = Location::from_steps(slot.location.steps()[..slot.location.steps().len() - 1].to_vec());
                if !parent.admits(array_loc.get(&doc).expect("parent exists")) {
                    continue;
                }
            }
            return Ok(MutantRecord {
                response_id: response_id.to_string(),
                seed,
                operator: op,
                path: slot.location.clone(),
                before: value.clone(),
                after,
            });
        }
    }
    Err(MutationError::NoMutableLocation(response_id.to_string()))
}
