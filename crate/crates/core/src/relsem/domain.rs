//! Finite domains for enumeration.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::Value;
use crate::ast::Ident;
use crate::normalize::Signature;

/// Default bound on the number of candidate assignments explored.
pub const DEFAULT_LIMIT: u64 = 10_000_000;

/// Per-variable finite value sets. Variables without an entry range over
/// the default carrier; `Bot` is added to every set when `lift_bot` holds.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDomain {
    pub carrier: Vec<Value>,
    pub vars: BTreeMap<Ident, Vec<Value>>,
    pub lift_bot: bool,
    pub limit: u64,
}

impl Default for FiniteDomain {
    fn default() -> Self {
        FiniteDomain::numeric(&[0.0, 1.0, 2.0])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("domain too large: {size} candidate assignments exceed the bound {limit}")]
    TooLarge { size: u128, limit: u64 },
    #[error("invalid domain spec: {0}")]
    Spec(String),
}

/// JSON form of a domain:
/// `{"numbers": [0,1,2], "values": [...], "constructors": 1,
///   "vars": {"t": [{"cons":"S","args":[]}]}, "bot": true, "limit": 10000000}`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default)]
    pub numbers: Option<Vec<f64>>,
    #[serde(default)]
    pub values: Vec<serde_json::Value>,
    /// Term depth of generated constructor terms; 0 disables them.
    #[serde(default)]
    pub constructors: usize,
    #[serde(default)]
    pub vars: BTreeMap<String, Vec<serde_json::Value>>,
    #[serde(default = "yes")]
    pub bot: bool,
    #[serde(default)]
    pub limit: Option<u64>,
}

fn yes() -> bool {
    true
}

impl FiniteDomain {
    pub fn numeric(ns: &[f64]) -> FiniteDomain {
        FiniteDomain {
            carrier: ns.iter().copied().map(Value::Num).collect(),
            vars: BTreeMap::new(),
            lift_bot: true,
            limit: DEFAULT_LIMIT,
        }
    }

    pub fn with_var(mut self, name: &str, values: Vec<Value>) -> FiniteDomain {
        self.vars.insert(Ident::new(name), values);
        self
    }

    pub fn without_bot(mut self) -> FiniteDomain {
        self.lift_bot = false;
        self
    }

    /// Values of `v`, `Bot` first when lifted.
    pub fn values(&self, v: &Ident) -> Vec<Value> {
        let base = self.vars.get(v).unwrap_or(&self.carrier);
        let mut out = Vec::with_capacity(base.len() + 1);
        if self.lift_bot {
            out.push(Value::Bot);
        }
        for x in base {
            if !out.contains(x) {
                out.push(x.clone());
            }
        }
        out
    }

    /// All tuples over the given variables, in lexicographic order of the
    /// per-variable value lists.
    pub fn tuples(&self, vars: &[Ident]) -> Result<Vec<Vec<Value>>, DomainError> {
        let sets: Vec<Vec<Value>> = vars.iter().map(|v| self.values(v)).collect();
        let size: u128 = sets.iter().map(|s| s.len() as u128).product();
        if size > self.limit as u128 {
            return Err(DomainError::TooLarge { size, limit: self.limit });
        }
        let mut out = vec![Vec::new()];
        for s in &sets {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    s.iter().map(move |x| {
                        let mut t = prefix.clone();
                        t.push(x.clone());
                        t
                    })
                })
                .collect();
        }
        Ok(out)
    }

    pub fn from_spec(spec: &DomainSpec, sig: &Signature) -> Result<FiniteDomain, DomainError> {
        let decode = |vs: &[serde_json::Value]| -> Result<Vec<Value>, DomainError> {
            vs.iter().map(|j| Value::from_json(j).map_err(DomainError::Spec)).collect()
        };
        let mut carrier: Vec<Value> = spec
            .numbers
            .clone()
            .unwrap_or_else(|| vec![0.0, 1.0, 2.0])
            .into_iter()
            .map(Value::Num)
            .collect();
        carrier.extend(decode(&spec.values)?);
        let base = carrier.clone();
        for _ in 0..spec.constructors {
            let mut next = base.clone();
            for c in &sig.cons_order {
                let arity = sig.conses[c];
                let mut args = vec![Vec::new()];
                for _ in 0..arity {
                    args = args
                        .into_iter()
                        .flat_map(|p: Vec<Value>| {
                            carrier.iter().map(move |x| {
                                let mut q = p.clone();
                                q.push(x.clone());
                                q
                            })
                        })
                        .collect();
                }
                next.extend(args.into_iter().map(|a| Value::cons(c.as_str(), a)));
            }
            next.dedup();
            carrier = next;
        }
        let mut vars = BTreeMap::new();
        for (k, vs) in &spec.vars {
            vars.insert(Ident::new(k), decode(vs)?);
        }
        Ok(FiniteDomain { carrier, vars, lift_bot: spec.bot, limit: spec.limit.unwrap_or(DEFAULT_LIMIT) })
    }

    pub fn from_json(text: &str, sig: &Signature) -> Result<FiniteDomain, DomainError> {
        let spec: DomainSpec = serde_json::from_str(text).map_err(|e| DomainError::Spec(e.to_string()))?;
        FiniteDomain::from_spec(&spec, sig)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifted_values_put_bot_first() {
        let d = FiniteDomain::numeric(&[0.0, 1.0]);
        assert_eq!(d.values(&Ident::new("x")), vec![Value::Bot, Value::num(0), Value::num(1)]);
        assert_eq!(d.clone().without_bot().values(&Ident::new("x")).len(), 2);
    }

    #[test]
    fn tuples_enumerate_the_product() {
        let d = FiniteDomain::numeric(&[0.0, 1.0]).with_var("t", vec![Value::atom("S")]);
        let ts = d.tuples(&[Ident::new("x"), Ident::new("t")]).unwrap();
        assert_eq!(ts.len(), 6);
        assert!(d.tuples(&[]).unwrap() == vec![Vec::<Value>::new()]);
    }

    #[test]
    fn limit_is_enforced() {
        let mut d = FiniteDomain::numeric(&[0.0, 1.0, 2.0]);
        d.limit = 10;
        assert!(matches!(d.tuples(&[Ident::new("a"), Ident::new("b")]), Err(DomainError::TooLarge { size: 16, .. })));
    }

    #[test]
    fn spec_generates_constructor_terms() {
        let sig = Signature {
            conses: [(Ident::new("S"), 0), (Ident::new("P"), 1)].into(),
            cons_order: vec![Ident::new("S"), Ident::new("P")],
            prims: BTreeMap::new(),
        };
        let d = FiniteDomain::from_json(r#"{"numbers": [0], "constructors": 1, "bot": false}"#, &sig).unwrap();
        assert_eq!(d.carrier, vec![Value::num(0), Value::atom("S"), Value::cons("P", vec![Value::num(0)])]);
    }
}
