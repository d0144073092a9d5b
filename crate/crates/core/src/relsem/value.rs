//! The lifted value universe: undefined, unit, numbers and constructor terms.

use std::cmp::Ordering;
use std::fmt;

use serde_json::json;

use crate::ast::Ident;

/// An element of the lifted universe `V ⊎ {⊥}`.
///
/// Numbers are IEEE doubles; integers are represented exactly up to 2^53.
/// Equality and ordering use `f64::total_cmp`, so values can live in ordered
/// sets and `NaN` equals itself.
#[derive(Clone, Debug)]
pub enum Value {
    Bot,
    Unit,
    Num(f64),
    Term(Ident, Vec<Value>),
}

impl Value {
    pub fn num(n: impl Into<f64>) -> Value {
        Value::Num(n.into())
    }

    pub fn cons(name: &str, args: Vec<Value>) -> Value {
        Value::Term(Ident::new(name), args)
    }

    /// A nullary constructor term `C()`.
    pub fn atom(name: &str) -> Value {
        Value::Term(Ident::new(name), Vec::new())
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Value::Bot)
    }

    pub fn is_defined(&self) -> bool {
        !self.is_bot()
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(n) => Some(*n),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Bot => 0,
            Value::Unit => 1,
            Value::Num(_) => 2,
            Value::Term(..) => 3,
        }
    }

    /// JSON encoding used by relation dumps and domain specs: `null` for ⊥,
    /// `true` for the unit value, plain numbers, and
    /// `{"cons": name, "args": [...]}` for terms.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Bot => serde_json::Value::Null,
            Value::Unit => serde_json::Value::Bool(true),
            Value::Num(n) => {
                if n.fract() == 0.0 && n.abs() < 9.0e15 {
                    json!(*n as i64)
                } else {
                    json!(n)
                }
            }
            Value::Term(c, args) => json!({
                "cons": c.as_str(),
                "args": args.iter().map(Value::to_json).collect::<Vec<_>>(),
            }),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Value, String> {
        match v {
            serde_json::Value::Null => Ok(Value::Bot),
            serde_json::Value::Bool(true) => Ok(Value::Unit),
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(Value::Num)
                .ok_or_else(|| format!("number out of range: {n}")),
            serde_json::Value::Object(map) => {
                let cons = map
                    .get("cons")
                    .and_then(|c| c.as_str())
                    .ok_or_else(|| "term object needs a \"cons\" string".to_string())?;
                let args = match map.get("args") {
                    None => Vec::new(),
                    Some(serde_json::Value::Array(items)) => items
                        .iter()
                        .map(Value::from_json)
                        .collect::<Result<Vec<_>, _>>()?,
                    Some(other) => return Err(format!("\"args\" must be an array, got {other}")),
                };
                if args.iter().any(Value::is_bot) {
                    return Err(format!("term {cons} has an undefined argument"));
                }
                Ok(Value::Term(Ident::new(cons), args))
            }
            other => Err(format!("not a value encoding: {other}")),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a.total_cmp(b),
            (Value::Term(c, xs), Value::Term(d, ys)) => c.cmp(d).then_with(|| xs.cmp(ys)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bot => f.write_str("_|_"),
            Value::Unit => f.write_str("T"),
            Value::Num(n) => write!(f, "{n}"),
            Value::Term(c, args) => {
                write!(f, "{c}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Formats a tuple of values as `(a, b, c)`.
pub fn show_tuple(vs: &[Value]) -> String {
    let parts: Vec<String> = vs.iter().map(Value::to_string).collect();
    format!("({})", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_total_and_ranked() {
        let mut vs = vec![
            Value::atom("S"),
            Value::num(2),
            Value::Bot,
            Value::Unit,
            Value::num(-1),
            Value::atom("H"),
        ];
        vs.sort();
        assert_eq!(
            vs,
            vec![
                Value::Bot,
                Value::Unit,
                Value::num(-1),
                Value::num(2),
                Value::atom("H"),
                Value::atom("S"),
            ]
        );
    }

    #[test]
    fn json_roundtrip() {
        let v = Value::cons("P", vec![Value::num(1), Value::atom("A")]);
        assert_eq!(Value::from_json(&v.to_json()).unwrap(), v);
        assert_eq!(Value::Bot.to_json(), serde_json::Value::Null);
        assert_eq!(Value::num(0.5).to_json(), json!(0.5));
        assert_eq!(Value::num(3).to_json(), json!(3));
    }

    #[test]
    fn bot_inside_term_rejected() {
        let j = json!({"cons": "P", "args": [null]});
        assert!(Value::from_json(&j).is_err());
    }

    #[test]
    fn display_matches_concrete_syntax() {
        assert_eq!(Value::atom("S").to_string(), "S()");
        assert_eq!(Value::num(0.25).to_string(), "0.25");
        assert_eq!(Value::num(4).to_string(), "4");
        assert_eq!(Value::Bot.to_string(), "_|_");
    }
}
