//! The oracle catalog: types, values, predicate semantics, oracle sets and
//! native evaluation against JSON responses.

mod check;
mod evaluate;
mod predicates;
mod set;
mod types;

pub use check::{check_value, Verdict};
pub use evaluate::{detects, evaluate, evaluate_with, Violation};
pub use predicates::{CheckConfig, Checker, EMAIL_PATTERN, ISO_DATE_PATTERN, NUMERIC_PATTERN, TIME_PATTERN, URL_PATTERN};
pub use set::{validate_set, Diagnostic, FieldOracles, OracleSet, OracleSetError, Provenance, SchemaMismatch};
pub use types::{BaseOracle, OracleType, OracleValue, ValueKind, ValueShapeError};

pub(crate) use types::number_value;
