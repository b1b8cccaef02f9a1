use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::predicates::Checker;
use super::types::{BaseOracle, OracleType, OracleValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

static DEFAULT_CHECKER: LazyLock<Checker> = LazyLock::new(Checker::default);

pub(crate) fn default_checker() -> &'static Checker {
    &DEFAULT_CHECKER
}

/// Check one oracle against one observed value with the default grammars.
pub fn check_value(oracle: OracleType, value: &OracleValue, observed: &Value) -> Verdict {
    DEFAULT_CHECKER.check(oracle, value, observed)
}

impl Checker {
    /// Pure verdict for one oracle on one observed value.
    ///
    /// Returns `NotApplicable` when the value is not an asserted oracle of the
    /// right shape, when `observed` is `null`, or when its JSON type differs
    /// from the type the oracle is defined over.
    pub fn check(&self, oracle: OracleType, value: &OracleValue, observed: &Value) -> Verdict {
        self.check_detailed(oracle, value, observed).0
    }

    /// Like [`Checker::check`], also returning the failing element indices of
    /// element-wise oracles.
    pub fn check_detailed(&self, oracle: OracleType, value: &OracleValue, observed: &Value) -> (Verdict, Vec<usize>) {
        if value.kind() != oracle.value_kind() || !value.is_asserted() {
            return (Verdict::NotApplicable, Vec::new());
        }
        if !oracle.is_element() {
            return (self.check_base(oracle.base(), value, observed), Vec::new());
        }
        let Value::Array(items) = observed else {
            return (Verdict::NotApplicable, Vec::new());
        };
        let failing: Vec<usize> = items
            .iter()
            .enumerate()
            .filter(|(_, item)| self.check_base(oracle.base(), value, item) == Verdict::Fail)
            .map(|(i, _)| i)
            .collect();
        let verdict = if failing.is_empty() { Verdict::Pass } else { Verdict::Fail };
        (verdict, failing)
    }

    fn check_base(&self, base: BaseOracle, value: &OracleValue, observed: &Value) -> Verdict {
        use BaseOracle::*;
        let eps = self.config().epsilon;
        let verdict = |ok: bool| if ok { Verdict::Pass } else { Verdict::Fail };
        match (base, value, observed) {
            (StringIsUrl, _, Value::String(s)) => verdict(self.is_url(s)),
            (StringIsNumeric, _, Value::String(s)) => verdict(self.is_numeric(s)),
            (StringIsEmail, _, Value::String(s)) => verdict(self.is_email(s)),
            (StringIsDate, _, Value::String(s)) => verdict(self.is_date(s)),
            (StringIsTime, _, Value::String(s)) => verdict(self.is_time(s)),
            (StringSpecificValues, OracleValue::StringSet(set), Value::String(s)) => verdict(set.contains(s)),
            (StringFixedLength, OracleValue::Length(Some(n)), Value::String(s)) => {
                verdict(s.chars().count() as u64 == *n)
            }
            (BooleanAlwaysTrue, _, Value::Bool(b)) => verdict(*b),
            (BooleanAlwaysFalse, _, Value::Bool(b)) => verdict(!*b),
            (NumberMinValue, OracleValue::Bound(Some(min)), Value::Number(n)) => {
                verdict(n.as_f64().is_some_and(|x| x >= min - eps))
            }
            (NumberMaxValue, OracleValue::Bound(Some(max)), Value::Number(n)) => {
                verdict(n.as_f64().is_some_and(|x| x <= max + eps))
            }
            (NumberSpecificValues, OracleValue::NumberSet(set), Value::Number(n)) => {
                let x = n.as_f64().unwrap_or(f64::NAN);
                verdict(set.iter().any(|s| if eps == 0.0 { *s == x } else { (x - s).abs() <= eps }))
            }
            (ArrayMinSize, OracleValue::Length(Some(n)), Value::Array(a)) => verdict(a.len() as u64 >= *n),
            (ArrayMaxSize, OracleValue::Length(Some(n)), Value::Array(a)) => verdict(a.len() as u64 <= *n),
            (ArraySpecificSizes, OracleValue::SizeSet(sizes), Value::Array(a)) => {
                verdict(sizes.contains(&(a.len() as u64)))
            }
            (ArrayNumberAscOrder | ArrayNumberDescOrder, _, Value::Array(a)) => {
                let Some(xs) = a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>() else {
                    return Verdict::NotApplicable;
                };
                let ascending = base == ArrayNumberAscOrder;
                verdict(xs.windows(2).all(|w| if ascending { w[0] <= w[1] } else { w[0] >= w[1] }))
            }
            _ => Verdict::NotApplicable,
        }
    }
}
