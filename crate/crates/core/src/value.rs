//! Typed values and signatures for the driver wire protocol.
//!
//! JSON numbers are ambiguous between `int`, `long` and `double`, so decoding
//! is always driven by a [`ValueType`] taken from the case signature.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

/// Absolute term of the float comparison tolerance.
pub const FLOAT_ABS_TOL: f64 = 1e-9;
/// Relative term of the float comparison tolerance.
pub const FLOAT_REL_TOL: f64 = 1e-6;

/// Type tag for arguments and return values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueType {
    Int,
    Long,
    Double,
    Bool,
    Char,
    String,
    List(Box<ValueType>),
}

impl ValueType {
    /// Type string used in the corpus JSON schema: `int`, `long`, `double`,
    /// `bool`, `char`, `string`, `list<T>`.
    pub fn type_string(&self) -> String {
        match self {
            ValueType::Int => "int".into(),
            ValueType::Long => "long".into(),
            ValueType::Double => "double".into(),
            ValueType::Bool => "bool".into(),
            ValueType::Char => "char".into(),
            ValueType::String => "string".into(),
            ValueType::List(inner) => format!("list<{}>", inner.type_string()),
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.type_string())
    }
}

impl FromStr for ValueType {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("list<") {
            let inner = rest
                .strip_suffix('>')
                .ok_or_else(|| ValueError::BadType(s.to_string()))?;
            return Ok(ValueType::List(Box::new(inner.parse()?)));
        }
        match s {
            "int" => Ok(ValueType::Int),
            "long" => Ok(ValueType::Long),
            "double" => Ok(ValueType::Double),
            "bool" => Ok(ValueType::Bool),
            "char" => Ok(ValueType::Char),
            "string" => Ok(ValueType::String),
            _ => Err(ValueError::BadType(s.to_string())),
        }
    }
}

impl Serialize for ValueType {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.type_string())
    }
}

impl<'de> Deserialize<'de> for ValueType {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A concrete value carrying exactly one type tag.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Long(i64),
    Double(f64),
    Bool(bool),
    Char(char),
    Str(String),
    List(ValueType, Vec<Value>),
}

#[derive(Debug, Error)]
pub enum ValueError {
    #[error("unknown type string `{0}`")]
    BadType(String),
    #[error("expected {expected}, got JSON value `{got}`")]
    TypeMismatch { expected: ValueType, got: Json },
    #[error("char values must be exactly one character, got `{0}`")]
    BadChar(String),
    #[error("number out of range for {0}: {1}")]
    OutOfRange(ValueType, String),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Int(_) => ValueType::Int,
            Value::Long(_) => ValueType::Long,
            Value::Double(_) => ValueType::Double,
            Value::Bool(_) => ValueType::Bool,
            Value::Char(_) => ValueType::Char,
            Value::Str(_) => ValueType::String,
            Value::List(inner, _) => ValueType::List(Box::new(inner.clone())),
        }
    }

    /// Decode a JSON value under the authoritative signature type.
    pub fn from_json(json: &Json, ty: &ValueType) -> Result<Value, ValueError> {
        let mismatch = || ValueError::TypeMismatch {
            expected: ty.clone(),
            got: json.clone(),
        };
        match ty {
            ValueType::Int | ValueType::Long => {
                let n = json.as_i64().ok_or_else(mismatch)?;
                if *ty == ValueType::Int && (n > i64::from(i32::MAX) || n < i64::from(i32::MIN)) {
                    return Err(ValueError::OutOfRange(ty.clone(), n.to_string()));
                }
                Ok(if *ty == ValueType::Int {
                    Value::Int(n)
                } else {
                    Value::Long(n)
                })
            }
            ValueType::Double => {
                let n = json.as_f64().ok_or_else(mismatch)?;
                Ok(Value::Double(n))
            }
            ValueType::Bool => Ok(Value::Bool(json.as_bool().ok_or_else(mismatch)?)),
            ValueType::Char => {
                let s = json.as_str().ok_or_else(mismatch)?;
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(Value::Char(c)),
                    _ => Err(ValueError::BadChar(s.to_string())),
                }
            }
            ValueType::String => Ok(Value::Str(json.as_str().ok_or_else(mismatch)?.to_string())),
            ValueType::List(inner) => {
                let items = json.as_array().ok_or_else(mismatch)?;
                let values = items
                    .iter()
                    .map(|item| Value::from_json(item, inner))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Value::List((**inner).clone(), values))
            }
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Int(n) | Value::Long(n) => Json::from(*n),
            Value::Double(x) => serde_json::Number::from_f64(*x)
                .map(Json::Number)
                .unwrap_or(Json::Null),
            Value::Bool(b) => Json::from(*b),
            Value::Char(c) => Json::from(c.to_string()),
            Value::Str(s) => Json::from(s.clone()),
            Value::List(_, items) => Json::Array(items.iter().map(Value::to_json).collect()),
        }
    }

    /// Equality policy used by the judge: ints/longs/bools/chars/strings
    /// exact, doubles within `|a-b| <= 1e-9 + 1e-6 * |b|`, lists elementwise.
    pub fn matches(&self, expected: &Value) -> bool {
        match (self, expected) {
            (Value::Int(a), Value::Int(b)) | (Value::Long(a), Value::Long(b)) => a == b,
            (Value::Double(a), Value::Double(b)) => {
                (a - b).abs() <= FLOAT_ABS_TOL + FLOAT_REL_TOL * b.abs()
            }
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Char(a), Value::Char(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::List(_, a), Value::List(_, b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.matches(y))
            }
            _ => false,
        }
    }
}

/// Typed signature of the function under test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub params: Vec<TypeRef>,
    pub returns: TypeRef,
}

/// Wrapper matching the on-disk `{"type": "..."} ` shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRef {
    #[serde(rename = "type")]
    pub ty: ValueType,
}

impl From<ValueType> for TypeRef {
    fn from(ty: ValueType) -> Self {
        TypeRef { ty }
    }
}

impl Signature {
    pub fn new(params: Vec<ValueType>, returns: ValueType) -> Self {
        Signature {
            params: params.into_iter().map(TypeRef::from).collect(),
            returns: TypeRef::from(returns),
        }
    }

    pub fn param_types(&self) -> Vec<&ValueType> {
        self.params.iter().map(|p| &p.ty).collect()
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}
