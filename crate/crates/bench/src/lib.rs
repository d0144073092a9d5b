//! Shared inputs for the pipeline benchmarks.

use streamcore::relsem::Value;

/// A unit impulse of `len` samples as single-input rows.
pub fn impulse(len: usize) -> Vec<Vec<Value>> {
    (0..len).map(|i| vec![Value::num(if i == 0 { 1.0 } else { 0.0 })]).collect()
}
