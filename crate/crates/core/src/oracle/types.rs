use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::spec::{Datatype, ResponseField};

/// The seventeen base oracle kinds, in catalog row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseOracle {
    StringIsUrl,
    StringIsNumeric,
    StringSpecificValues,
    StringIsEmail,
    StringIsDate,
    StringFixedLength,
    StringIsTime,
    BooleanAlwaysTrue,
    BooleanAlwaysFalse,
    NumberMinValue,
    NumberMaxValue,
    NumberSpecificValues,
    ArrayMinSize,
    ArrayMaxSize,
    ArraySpecificSizes,
    ArrayNumberAscOrder,
    ArrayNumberDescOrder,
}

/// Shape of the value an oracle carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Flag,
    Length,
    Bound,
    StringSet,
    NumberSet,
    SizeSet,
}

impl BaseOracle {
    pub const ALL: [BaseOracle; 17] = [
        Self::StringIsUrl,
        Self::StringIsNumeric,
        Self::StringSpecificValues,
        Self::StringIsEmail,
        Self::StringIsDate,
        Self::StringFixedLength,
        Self::StringIsTime,
        Self::BooleanAlwaysTrue,
        Self::BooleanAlwaysFalse,
        Self::NumberMinValue,
        Self::NumberMaxValue,
        Self::NumberSpecificValues,
        Self::ArrayMinSize,
        Self::ArrayMaxSize,
        Self::ArraySpecificSizes,
        Self::ArrayNumberAscOrder,
        Self::ArrayNumberDescOrder,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Self::StringIsUrl => "string_is_url",
            Self::StringIsNumeric => "string_is_numeric",
            Self::StringSpecificValues => "string_specific_values",
            Self::StringIsEmail => "string_is_email",
            Self::StringIsDate => "string_is_date",
            Self::StringFixedLength => "string_fixed_length",
            Self::StringIsTime => "string_is_time",
            Self::BooleanAlwaysTrue => "boolean_always_true",
            Self::BooleanAlwaysFalse => "boolean_always_false",
            Self::NumberMinValue => "number_min_value",
            Self::NumberMaxValue => "number_max_value",
            Self::NumberSpecificValues => "number_specific_values",
            Self::ArrayMinSize => "array_min_size",
            Self::ArrayMaxSize => "array_max_size",
            Self::ArraySpecificSizes => "array_specific_sizes",
            Self::ArrayNumberAscOrder => "array_number_asc_order",
            Self::ArrayNumberDescOrder => "array_number_desc_order",
        }
    }

    /// The datatype this oracle is defined over (`number` covers integers).
    pub fn datatype(self) -> Datatype {
        use BaseOracle::*;
        match self {
            StringIsUrl | StringIsNumeric | StringSpecificValues | StringIsEmail | StringIsDate
            | StringFixedLength | StringIsTime => Datatype::String,
            BooleanAlwaysTrue | BooleanAlwaysFalse => Datatype::Boolean,
            NumberMinValue | NumberMaxValue | NumberSpecificValues => Datatype::Number,
            ArrayMinSize | ArrayMaxSize | ArraySpecificSizes | ArrayNumberAscOrder
            | ArrayNumberDescOrder => Datatype::Array,
        }
    }

    pub fn value_kind(self) -> ValueKind {
        use BaseOracle::*;
        match self {
            StringIsUrl | StringIsNumeric | StringIsEmail | StringIsDate | StringIsTime
            | BooleanAlwaysTrue | BooleanAlwaysFalse | ArrayNumberAscOrder
            | ArrayNumberDescOrder => ValueKind::Flag,
            StringFixedLength | ArrayMinSize | ArrayMaxSize => ValueKind::Length,
            NumberMinValue | NumberMaxValue => ValueKind::Bound,
            StringSpecificValues => ValueKind::StringSet,
            NumberSpecificValues => ValueKind::NumberSet,
            ArraySpecificSizes => ValueKind::SizeSet,
        }
    }

    /// String, boolean and number oracles can also be applied per array element.
    pub fn is_liftable(self) -> bool {
        self.datatype() != Datatype::Array
    }

    pub fn for_datatype(datatype: Datatype) -> impl Iterator<Item = BaseOracle> {
        let target = datatype.unified();
        Self::ALL.into_iter().filter(move |b| b.datatype() == target)
    }
}

impl fmt::Display for BaseOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// A base oracle, optionally lifted to apply to every element of an array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OracleType {
    base: BaseOracle,
    element: bool,
}

impl OracleType {
    pub const fn plain(base: BaseOracle) -> Self {
        Self { base, element: false }
    }

    /// Element-wise variant; `None` for array-level oracles.
    pub fn element(base: BaseOracle) -> Option<Self> {
        base.is_liftable().then_some(Self { base, element: true })
    }

    pub fn base(self) -> BaseOracle {
        self.base
    }

    pub fn is_element(self) -> bool {
        self.element
    }

    pub fn value_kind(self) -> ValueKind {
        self.base.value_kind()
    }

    /// Datatype of the observed JSON value this oracle is checked against.
    pub fn observed_datatype(self) -> Datatype {
        if self.element {
            Datatype::Array
        } else {
            self.base.datatype()
        }
    }

    pub fn key(self) -> String {
        if self.element {
            format!("array_{}", self.base.key())
        } else {
            self.base.key().to_string()
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        if let Some(base) = BaseOracle::ALL.iter().find(|b| b.key() == key) {
            return Some(Self::plain(*base));
        }
        let inner = key.strip_prefix("array_")?;
        BaseOracle::ALL
            .iter()
            .find(|b| b.is_liftable() && b.key() == inner)
            .map(|b| Self { base: *b, element: true })
    }

    /// All 29 oracle types: the 17 base ones plus 12 element-wise liftings.
    pub fn all() -> Vec<Self> {
        let mut out: Vec<Self> = BaseOracle::ALL.iter().map(|b| Self::plain(*b)).collect();
        out.extend(BaseOracle::ALL.iter().filter_map(|b| Self::element(*b)));
        out.sort();
        out
    }

    /// The oracle types asked about for a field, in question order: the
    /// datatype's catalog row, and for primitive arrays the element row
    /// followed by size and (numeric elements only) order oracles.
    pub fn applicable_to(field: &ResponseField) -> Vec<Self> {
        Self::applicable_to_datatype(field.datatype, field.element_datatype)
    }

    pub fn applicable_to_datatype(datatype: Datatype, element: Option<Datatype>) -> Vec<Self> {
        match datatype {
            Datatype::Object => Vec::new(),
            Datatype::Array => {
                let Some(element) = element.filter(|e| e.is_primitive()) else {
                    return Vec::new();
                };
                let mut out: Vec<Self> = BaseOracle::for_datatype(element).filter_map(Self::element).collect();
                out.extend(
                    [BaseOracle::ArrayMinSize, BaseOracle::ArrayMaxSize, BaseOracle::ArraySpecificSizes]
                        .map(Self::plain),
                );
                if element.unified() == Datatype::Number {
                    out.push(Self::plain(BaseOracle::ArrayNumberAscOrder));
                    out.push(Self::plain(BaseOracle::ArrayNumberDescOrder));
                }
                out
            }
            primitive => BaseOracle::for_datatype(primitive).map(Self::plain).collect(),
        }
    }

    /// Whether this oracle may be asserted on `field`. Size oracles are also
    /// accepted on arrays of objects, which receive no prompt of their own.
    pub fn compatible_with(self, field: &ResponseField) -> bool {
        match field.datatype {
            Datatype::Object => false,
            Datatype::Array => {
                let element = field.element_datatype.map(Datatype::unified);
                if self.element {
                    element == Some(self.base.datatype())
                } else {
                    match self.base {
                        BaseOracle::ArrayMinSize | BaseOracle::ArrayMaxSize | BaseOracle::ArraySpecificSizes => true,
                        BaseOracle::ArrayNumberAscOrder | BaseOracle::ArrayNumberDescOrder => {
                            element == Some(Datatype::Number)
                        }
                        _ => false,
                    }
                }
            }
            primitive => !self.element && self.base.datatype() == primitive.unified(),
        }
    }
}

impl fmt::Display for OracleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.element {
            f.write_str("array_")?;
        }
        f.write_str(self.base.key())
    }
}

impl Serialize for OracleType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OracleType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::from_key(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown oracle type `{s}`")))
    }
}

/// The value attached to an oracle.
///
/// `Flag(false)`, `None` bounds/lengths and empty sets are the "no oracle"
/// encodings; see [`OracleValue::is_asserted`].
#[derive(Debug, Clone, PartialEq)]
pub enum OracleValue {
    Flag(bool),
    Length(Option<u64>),
    Bound(Option<f64>),
    StringSet(Vec<String>),
    NumberSet(Vec<f64>),
    SizeSet(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected {expected}, found {found}")]
pub struct ValueShapeError {
    pub expected: &'static str,
    pub found: String,
}

impl OracleValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            Self::Flag(_) => ValueKind::Flag,
            Self::Length(_) => ValueKind::Length,
            Self::Bound(_) => ValueKind::Bound,
            Self::StringSet(_) => ValueKind::StringSet,
            Self::NumberSet(_) => ValueKind::NumberSet,
            Self::SizeSet(_) => ValueKind::SizeSet,
        }
    }

    pub fn is_asserted(&self) -> bool {
        match self {
            Self::Flag(b) => *b,
            Self::Length(n) => n.is_some(),
            Self::Bound(x) => x.is_some(),
            Self::StringSet(v) => !v.is_empty(),
            Self::NumberSet(v) => !v.is_empty(),
            Self::SizeSet(v) => !v.is_empty(),
        }
    }

    /// The "no oracle" encoding for a value kind.
    pub fn absent(kind: ValueKind) -> Self {
        match kind {
            ValueKind::Flag => Self::Flag(false),
            ValueKind::Length => Self::Length(None),
            ValueKind::Bound => Self::Bound(None),
            ValueKind::StringSet => Self::StringSet(Vec::new()),
            ValueKind::NumberSet => Self::NumberSet(Vec::new()),
            ValueKind::SizeSet => Self::SizeSet(Vec::new()),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Self::Flag(b) => Value::Bool(*b),
            Self::Length(n) => n.map(Value::from).unwrap_or(Value::Null),
            Self::Bound(x) => x.map(number_value).unwrap_or(Value::Null),
            Self::StringSet(v) => Value::from(v.clone()),
            Self::NumberSet(v) => Value::Array(v.iter().map(|x| number_value(*x)).collect()),
            Self::SizeSet(v) => Value::from(v.clone()),
        }
    }

    /// Strict decoding of the JSON form written by [`OracleValue::to_json`].
    pub fn from_json(kind: ValueKind, value: &Value) -> Result<Self, ValueShapeError> {
        let shape_err = |expected: &'static str| ValueShapeError { expected, found: value.to_string() };
        match kind {
            ValueKind::Flag => value.as_bool().map(Self::Flag).ok_or_else(|| shape_err("a boolean")),
            ValueKind::Length => match value {
                Value::Null => Ok(Self::Length(None)),
                v => v.as_u64().map(|n| Self::Length(Some(n))).ok_or_else(|| shape_err("a non-negative integer or null")),
            },
            ValueKind::Bound => match value {
                Value::Null => Ok(Self::Bound(None)),
                v => v.as_f64().map(|x| Self::Bound(Some(x))).ok_or_else(|| shape_err("a number or null")),
            },
            ValueKind::StringSet => value
                .as_array()
                .and_then(|a| a.iter().map(|v| v.as_str().map(str::to_string)).collect::<Option<Vec<_>>>())
                .map(Self::StringSet)
                .ok_or_else(|| shape_err("an array of strings")),
            ValueKind::NumberSet => value
                .as_array()
                .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
                .map(Self::NumberSet)
                .ok_or_else(|| shape_err("an array of numbers")),
            ValueKind::SizeSet => value
                .as_array()
                .and_then(|a| a.iter().map(Value::as_u64).collect::<Option<Vec<_>>>())
                .map(Self::SizeSet)
                .ok_or_else(|| shape_err("an array of non-negative integers")),
        }
    }

    /// Semantic equality: sets compare as sets, numbers numerically.
    pub fn same_as(&self, other: &Self) -> bool {
        fn set_eq<T: PartialEq>(a: &[T], b: &[T]) -> bool {
            a.iter().all(|x| b.contains(x)) && b.iter().all(|x| a.contains(x))
        }
        match (self, other) {
            (Self::StringSet(a), Self::StringSet(b)) => set_eq(a, b),
            (Self::NumberSet(a), Self::NumberSet(b)) => set_eq(a, b),
            (Self::SizeSet(a), Self::SizeSet(b)) => set_eq(a, b),
            (a, b) => a == b,
        }
    }
}

impl Serialize for OracleValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl fmt::Display for OracleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

/// JSON number for `x`, written as an integer when it is integral.
pub(crate) fn number_value(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Value::from(x as i64)
    } else {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::JsonPath;
    use serde_json::json;

    fn field(datatype: Datatype, element: Option<Datatype>) -> ResponseField {
        ResponseField {
            path: JsonPath::root().key("f"),
            name: "f".into(),
            datatype,
            element_datatype: element,
            description: None,
            example: None,
            format: None,
            enum_values: None,
            nullable: false,
            constraints: Default::default(),
            element: None,
        }
    }

    #[test]
    fn catalog_has_17_base_and_29_total_types() {
        assert_eq!(BaseOracle::ALL.len(), 17);
        let all = OracleType::all();
        assert_eq!(all.len(), 29);
        for t in &all {
            assert_eq!(OracleType::from_key(&t.key()), Some(*t));
        }
        assert_eq!(OracleType::from_key("array_array_min_size"), None);
        assert_eq!(OracleType::from_key("is_url"), None);
    }

    #[test]
    fn applicable_key_counts_follow_catalog_rows() {
        let count = |d, e| OracleType::applicable_to(&field(d, e)).len();
        assert_eq!(count(Datatype::String, None), 7);
        assert_eq!(count(Datatype::Boolean, None), 2);
        assert_eq!(count(Datatype::Integer, None), 3);
        // Array row (3 element number oracles + 3 size) plus 2 order oracles.
        assert_eq!(count(Datatype::Array, Some(Datatype::Number)), 8);
        assert_eq!(count(Datatype::Array, Some(Datatype::String)), 10);
        assert_eq!(count(Datatype::Array, Some(Datatype::Boolean)), 5);
        assert_eq!(count(Datatype::Array, Some(Datatype::Object)), 0);
        assert_eq!(count(Datatype::Object, None), 0);
    }

    #[test]
    fn every_applicable_type_is_compatible() {
        for (d, e) in [
            (Datatype::String, None),
            (Datatype::Boolean, None),
            (Datatype::Number, None),
            (Datatype::Integer, None),
            (Datatype::Array, Some(Datatype::Integer)),
            (Datatype::Array, Some(Datatype::String)),
            (Datatype::Array, Some(Datatype::Boolean)),
        ] {
            let f = field(d, e);
            for t in OracleType::all() {
                let applicable = OracleType::applicable_to(&f).contains(&t);
                assert_eq!(applicable, t.compatible_with(&f), "{t} on {d:?}/{e:?}");
            }
        }
        let objects = field(Datatype::Array, Some(Datatype::Object));
        assert!(OracleType::plain(BaseOracle::ArrayMinSize).compatible_with(&objects));
        assert!(!OracleType::plain(BaseOracle::ArrayNumberAscOrder).compatible_with(&objects));
    }

    #[test]
    fn absent_encodings_are_not_asserted() {
        for kind in [ValueKind::Flag, ValueKind::Length, ValueKind::Bound, ValueKind::StringSet, ValueKind::NumberSet, ValueKind::SizeSet] {
            let v = OracleValue::absent(kind);
            assert!(!v.is_asserted());
            assert_eq!(OracleValue::from_json(kind, &v.to_json()).unwrap(), v);
        }
        assert!(OracleValue::Length(Some(0)).is_asserted());
    }

    #[test]
    fn strict_decoding_rejects_wrong_shapes() {
        assert!(OracleValue::from_json(ValueKind::Length, &json!(-1)).is_err());
        assert!(OracleValue::from_json(ValueKind::Length, &json!("2")).is_err());
        assert!(OracleValue::from_json(ValueKind::StringSet, &json!(["a", 1])).is_err());
        assert_eq!(
            OracleValue::from_json(ValueKind::NumberSet, &json!([1, 2.5])).unwrap(),
            OracleValue::NumberSet(vec![1.0, 2.5])
        );
    }

    #[test]
    fn set_equality_ignores_order_and_duplicates() {
        let a = OracleValue::StringSet(vec!["$".into(), "$$".into()]);
        let b = OracleValue::StringSet(vec!["$$".into(), "$".into(), "$".into()]);
        assert!(a.same_as(&b));
        assert!(!a.same_as(&OracleValue::StringSet(vec!["$".into()])));
        assert!(OracleValue::NumberSet(vec![1.0]).same_as(&OracleValue::NumberSet(vec![1.0, 1.0])));
    }
}
