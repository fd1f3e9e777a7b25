//! Runtime values flowing through action results and conditions.

use crate::model::{Comparator, Literal};
use crate::registry::ValueType;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Number(f64),
    Text(String),
    /// Image / point-cloud payloads are opaque tokens carrying the capture
    /// position and invocation index.
    Opaque(String),
    Unit,
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    /// Default value of a type when no scripted rule matches.
    pub fn default_for(ty: ValueType, action: &str, pos: [f64; 3], invocation: u64) -> Value {
        match ty {
            ValueType::Bool => Value::Bool(false),
            ValueType::Number => Value::Number(0.0),
            ValueType::Text => Value::Text(String::new()),
            ValueType::Image | ValueType::PointCloud => Value::Opaque(format!(
                "{action}@[{:.2},{:.2},{:.2}]#{invocation}",
                pos[0], pos[1], pos[2]
            )),
            ValueType::Unit => Value::Unit,
        }
    }

    /// Converts a scripted JSON output to a typed value, falling back to the
    /// type default when the JSON shape does not match.
    pub fn from_script(
        json: &serde_json::Value,
        ty: ValueType,
        action: &str,
        pos: [f64; 3],
        invocation: u64,
    ) -> Value {
        let converted = match ty {
            ValueType::Bool => json.as_bool().map(Value::Bool),
            ValueType::Number => json.as_f64().map(Value::Number),
            ValueType::Text => json.as_str().map(|s| Value::Text(s.to_string())),
            ValueType::Image | ValueType::PointCloud => {
                json.as_str().map(|s| Value::Opaque(s.to_string()))
            }
            ValueType::Unit => Some(Value::Unit),
        };
        converted.unwrap_or_else(|| Value::default_for(ty, action, pos, invocation))
    }
}

/// Compares a runtime value against a literal. Ordering comparators require
/// numbers (guaranteed by the analyzer); equality is exact.
pub fn compare(value: &Value, cmp: Comparator, reference: &Literal) -> bool {
    if cmp.is_ordering() {
        let (Some(a), Some(b)) = (value.as_number(), reference.as_number()) else {
            return false;
        };
        return match cmp {
            Comparator::Lt => a < b,
            Comparator::Le => a <= b,
            Comparator::Gt => a > b,
            Comparator::Ge => a >= b,
            _ => unreachable!(),
        };
    }
    let eq = match (value, reference) {
        (Value::Bool(a), Literal::Bool(b)) => a == b,
        (Value::Number(a), Literal::Number(b)) => a == b,
        (Value::Text(a), Literal::Text(b)) => a == b,
        (Value::Opaque(a), Literal::Text(b)) => a == b,
        _ => false,
    };
    match cmp {
        Comparator::Eq => eq,
        Comparator::Ne => !eq,
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eq_is_reflexive() {
        for v in [
            Value::Bool(true),
            Value::Number(2.5),
            Value::Text("x".into()),
        ] {
            let lit = match &v {
                Value::Bool(b) => Literal::Bool(*b),
                Value::Number(n) => Literal::Number(*n),
                Value::Text(s) => Literal::Text(s.clone()),
                _ => unreachable!(),
            };
            assert!(compare(&v, Comparator::Eq, &lit));
            assert!(!compare(&v, Comparator::Ne, &lit));
        }
    }

    #[test]
    fn ordering_is_exact() {
        let v = Value::Number(25.0);
        assert!(compare(&v, Comparator::Lt, &Literal::Number(30.0)));
        assert!(!compare(&v, Comparator::Ge, &Literal::Number(30.0)));
        assert!(compare(&v, Comparator::Le, &Literal::Number(25.0)));
    }

    #[test]
    fn script_conversion_falls_back_to_default() {
        let v = Value::from_script(
            &serde_json::json!("not a number"),
            ValueType::Number,
            "read_sensor",
            [0.0; 3],
            1,
        );
        assert_eq!(v, Value::Number(0.0));
    }
}
