//! Execution traces and their CSV and JSON-lines encodings.

use crate::ast::{ExprKind, Ident, OpRef};
use crate::frontend::parse_expr;
use crate::relsem::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    State,
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// A row-major table of values, one row per step.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
    /// State after the last step.
    pub final_state: Vec<Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("row {row}, column `{column}`: undefined values cannot be written to CSV")]
    BotInCsv { row: usize, column: String },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV header lacks input column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: {msg}")]
    BadValue { row: usize, column: String, msg: String },
}

impl Trace {
    pub fn new(columns: Vec<Column>) -> Trace {
        Trace { columns, rows: Vec::new(), final_state: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn indices(&self, kind: ColumnKind) -> Vec<usize> {
        self.columns.iter().enumerate().filter(|(_, c)| c.kind == kind).map(|(i, _)| i).collect()
    }

    /// The values of column `name`.
    pub fn column(&self, name: &str) -> Option<Vec<Value>> {
        let i = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[i].clone()).collect())
    }

    /// Output tuples, one per step.
    pub fn outputs(&self) -> Vec<Vec<Value>> {
        let idx = self.indices(ColumnKind::Output);
        self.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect()
    }

    /// CSV with a header of column names; fails on undefined values.
    pub fn to_csv(&self) -> Result<String, TraceError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for (r, row) in self.rows.iter().enumerate() {
            if let Some(i) = row.iter().position(Value::is_bot) {
                return Err(TraceError::BotInCsv { row: r, column: self.columns[i].name.clone() });
            }
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| TraceError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }

    /// One JSON object per step, keys in column order after `step`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(&format!("{{\"step\":{r}"));
            for (c, v) in self.columns.iter().zip(row) {
                out.push_str(&format!(",{}:{}", serde_json::Value::String(c.name.clone()), v.to_json()));
            }
            out.push_str("}\n");
        }
        out
    }
}

/// Parses a value in concrete syntax: a number, `_|_`, or a constructor
/// term such as `S()` or `Pair(1, T())`.
pub fn parse_value(text: &str) -> Result<Value, String> {
    let e = parse_expr(text.trim()).map_err(|e| e.to_string())?;
    expr_value(&e)
}

pub(crate) fn expr_value(e: &crate::ast::Expr) -> Result<Value, String> {
    match &e.kind {
        ExprKind::Lit(v) => Ok(v.clone()),
        ExprKind::Unit => Ok(Value::Unit),
        ExprKind::Var(k) if k.as_str().starts_with(|c: char| c.is_ascii_uppercase()) => Ok(Value::cons(k.as_str(), Vec::new())),
        ExprKind::Apply { op: OpRef::Cons(k) | OpRef::Fun(k), state, arg } if state.is_empty() => {
            let args = arg.flatten().into_iter().map(expr_value).collect::<Result<Vec<_>, _>>()?;
            Ok(Value::cons(k.as_str(), args))
        }
        _ => Err(format!("not a value: `{}`", crate::frontend::print_expr(e))),
    }
}

/// Reads input rows from CSV, picking the columns named `inputs` in order.
pub fn read_csv(text: &str, inputs: &[Ident]) -> Result<Vec<Vec<Value>>, TraceError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    let idx = inputs
        .iter()
        .map(|v| header.iter().position(|h| h == v.as_str()).ok_or_else(|| TraceError::MissingColumn(v.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = idx
            .iter()
            .zip(inputs)
            .map(|(&i, v)| {
                parse_value(rec.get(i).unwrap_or("")).map_err(|msg| TraceError::BadValue { row: n, column: v.to_string(), msg })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace() -> Trace {
        let mut t = Trace::new(vec![
            Column { name: "x".into(), kind: ColumnKind::Input },
            Column { name: "t".into(), kind: ColumnKind::Input },
            Column { name: "y".into(), kind: ColumnKind::Output },
        ]);
        t.push(vec![Value::num(1.5), Value::atom("S"), Value::num(1.5)]);
        t.push(vec![Value::num(-2.0), Value::cons("P", vec![Value::num(1.0), Value::atom("H")]), Value::num(1.5)]);
        t
    }

    #[test]
    fn csv_roundtrip() {
        let t = trace();
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("x,t,y\n1.5,S(),1.5\n"));
        let rows = read_csv(&csv, &[Ident::new("t"), Ident::new("x")]).unwrap();
        assert_eq!(rows[1], vec![Value::cons("P", vec![Value::num(1.0), Value::atom("H")]), Value::num(-2.0)]);
    }

    #[test]
    fn bot_is_not_written_to_csv() {
        let mut t = trace();
        t.rows[1][2] = Value::Bot;
        assert!(matches!(t.to_csv(), Err(TraceError::BotInCsv { row: 1, .. })));
    }

    #[test]
    fn jsonl_keeps_column_order() {
        let line = trace().to_jsonl().lines().next().unwrap().to_string();
        assert!(line.starts_with("{\"step\":0,\"x\":1.5,\"t\":"), "{line}");
    }

    #[test]
    fn values() {
        assert_eq!(parse_value("_|_").unwrap(), Value::Bot);
        assert_eq!(parse_value(" -0.25 ").unwrap(), Value::num(-0.25));
        assert!(parse_value("x").is_err());
        assert_eq!(parse_value("S").unwrap(), Value::atom("S"));
    }
}
