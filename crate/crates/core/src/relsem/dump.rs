//! JSON-lines relation dumps.

use super::relation::{Row, StepRelation};
use super::Value;

fn tuple(vs: &[Value]) -> serde_json::Value {
    serde_json::Value::Array(vs.iter().map(Value::to_json).collect())
}

/// Encodes a row with keys in port order `s`, `x`, `y`, `s_`.
pub fn row_json(r: &Row) -> String {
    format!(r#"{{"s":{},"x":{},"y":{},"s_":{}}}"#, tuple(&r.s), tuple(&r.x), tuple(&r.y), tuple(&r.s_))
}

/// One `{"s":[…],"x":[…],"y":[…],"s_":[…]}` object per line, rows sorted.
pub fn dump_jsonl(r: &StepRelation) -> String {
    let mut out = String::new();
    for row in r.rows() {
        out.push_str(&row_json(&row));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_encoding() {
        let r = Row { s: vec![Value::num(0)], x: vec![Value::num(1), Value::atom("S")], y: vec![Value::Bot], s_: vec![] };
        assert_eq!(
            row_json(&r),
            r#"{"s":[0],"x":[1,{"args":[],"cons":"S"}],"y":[null],"s_":[]}"#
        );
    }
}
