//! Generated input streams for demonstrations and tests.
//!
//! A generator spec assigns one generator to each input column:
//! `x=impulse; t=runs(S(), 3, H(), 2)`. Generators:
//!
//! | generator              | stream                                           |
//! |------------------------|--------------------------------------------------|
//! | `impulse`              | `1, 0, 0, ...`                                   |
//! | `step`                 | `1, 1, 1, ...`                                   |
//! | `ramp`                 | `0, 1, 2, ...`                                   |
//! | `const(v)`             | `v, v, v, ...`                                   |
//! | `cycle(v1, ..., vk)`   | `v1, ..., vk, v1, ...`                           |
//! | `runs(v1, n1, ...)`    | `n1` copies of `v1`, then `n2` of `v2`, cyclically |
//! | `uniform(a, b)`        | seeded uniform reals in `[a, b)`                 |
//! | `choice(v1, ..., vk)`  | seeded uniform picks among the values            |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::trace::expr_value as value_of;
use crate::ast::{Expr, ExprKind, Ident, OpRef};
use crate::frontend::parse_expr;
use crate::relsem::Value;

#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Impulse,
    Step,
    Ramp,
    Cycle(Vec<Value>),
    Runs(Vec<(Value, usize)>),
    Uniform(f64, f64),
    Choice(Vec<Value>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InputError {
    #[error("generator for `{column}`: {msg}")]
    Bad { column: String, msg: String },
    #[error("no generator for input `{0}`")]
    Missing(String),
    #[error("generator for unknown input `{0}`")]
    Unknown(String),
}

impl Generator {
    pub fn parse(text: &str) -> Result<Generator, String> {
        let e = parse_expr(text.trim()).map_err(|e| e.to_string())?;
        let (name, args): (&str, Vec<&Expr>) = match &e.kind {
            ExprKind::Var(v) => (v.as_str(), Vec::new()),
            ExprKind::Apply { op: OpRef::Fun(f) | OpRef::Cons(f), state, arg } if state.is_empty() => {
                (f.as_str(), arg.flatten())
            }
            _ => return Err(format!("not a generator: `{}`", text.trim())),
        };
        let values = || args.iter().map(|a| value_of(a)).collect::<Result<Vec<_>, _>>();
        let num = |e: &Expr| value_of(e)?.as_num().ok_or_else(|| "expected a number".to_string());
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("`{name}` takes {n} arguments"))
            }
        };
        Ok(match name {
            "impulse" => arity(0).map(|_| Generator::Impulse)?,
            "step" => arity(0).map(|_| Generator::Step)?,
            "ramp" => arity(0).map(|_| Generator::Ramp)?,
            "const" => {
                arity(1)?;
                Generator::Cycle(values()?)
            }
            "cycle" | "choice" => {
                let vs = values()?;
                if vs.is_empty() {
                    return Err(format!("`{name}` needs at least one value"));
                }
                if name == "cycle" {
                    Generator::Cycle(vs)
                } else {
                    Generator::Choice(vs)
                }
            }
            "runs" => {
                if args.is_empty() || args.len() % 2 != 0 {
                    return Err("`runs` takes value, count pairs".into());
                }
                let mut runs = Vec::new();
                for pair in args.chunks(2) {
                    let n = num(pair[1])?;
                    if n < 1.0 || n.fract() != 0.0 {
                        return Err("run lengths are positive integers".into());
                    }
                    runs.push((value_of(pair[0])?, n as usize));
                }
                Generator::Runs(runs)
            }
            "uniform" => {
                arity(2)?;
                let (a, b) = (num(args[0])?, num(args[1])?);
                if !(a < b) {
                    return Err("`uniform(a, b)` needs a < b".into());
                }
                Generator::Uniform(a, b)
            }
            _ => return Err(format!("unknown generator `{name}`")),
        })
    }

    /// The first `n` elements; `rng` is only consulted by random generators.
    pub fn take(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Value> {
        match self {
            Generator::Impulse => (0..n).map(|i| Value::num(if i == 0 { 1.0 } else { 0.0 })).collect(),
            Generator::Step => vec![Value::num(1.0); n],
            Generator::Ramp => (0..n).map(|i| Value::num(i as f64)).collect(),
            Generator::Cycle(vs) => vs.iter().cycle().take(n).cloned().collect(),
            Generator::Runs(rs) => {
                rs.iter().flat_map(|(v, k)| std::iter::repeat_n(v.clone(), *k)).cycle().take(n).collect()
            }
            Generator::Uniform(a, b) => (0..n).map(|_| Value::num(rng.gen_range(*a..*b))).collect(),
            Generator::Choice(vs) => (0..n).map(|_| vs[rng.gen_range(0..vs.len())].clone()).collect(),
        }
    }
}

/// Parses `col=gen; col=gen` and generates `steps` rows for `inputs`.
/// Column `i` draws from an independent stream of the seeded generator.
pub fn generate_inputs(spec: &str, inputs: &[Ident], steps: usize, seed: u64) -> Result<Vec<Vec<Value>>, InputError> {
    let mut gens: Vec<Option<Generator>> = vec![None; inputs.len()];
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (col, g) = part
            .split_once('=')
            .ok_or_else(|| InputError::Bad { column: part.to_string(), msg: "expected `column=generator`".into() })?;
        let col = col.trim();
        let i = inputs.iter().position(|v| v.as_str() == col).ok_or_else(|| InputError::Unknown(col.to_string()))?;
        gens[i] = Some(Generator::parse(g).map_err(|msg| InputError::Bad { column: col.to_string(), msg })?);
    }
    let mut columns = Vec::with_capacity(inputs.len());
    for (i, (g, v)) in gens.iter().zip(inputs).enumerate() {
        let g = g.as_ref().ok_or_else(|| InputError::Missing(v.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        columns.push(g.take(steps, &mut rng));
    }
    Ok((0..steps).map(|r| columns.iter().map(|c| c[r].clone()).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::vars;

    #[test]
    fn deterministic_generators() {
        let rows = generate_inputs("x = impulse; t = runs(S(), 2, H(), 1)", &vars(&["x", "t"]), 5, 0).unwrap();
        let t: Vec<String> = rows.iter().map(|r| r[1].to_string()).collect();
        assert_eq!(t, ["S()", "S()", "H()", "S()", "S()"]);
        assert_eq!(rows[0][0], Value::num(1.0));
        assert_eq!(rows[1][0], Value::num(0.0));
    }

    #[test]
    fn seeded_generators_are_reproducible() {
        let a = generate_inputs("x=uniform(-1, 1)", &vars(&["x"]), 20, 7).unwrap();
        assert_eq!(a, generate_inputs("x=uniform(-1, 1)", &vars(&["x"]), 20, 7).unwrap());
        assert_ne!(a, generate_inputs("x=uniform(-1, 1)", &vars(&["x"]), 20, 8).unwrap());
        assert!(a.iter().all(|r| (-1.0..1.0).contains(&r[0].as_num().unwrap())));
    }

    #[test]
    fn errors() {
        assert_eq!(generate_inputs("", &vars(&["x"]), 1, 0), Err(InputError::Missing("x".into())));
        assert_eq!(generate_inputs("y=step", &vars(&["x"]), 1, 0), Err(InputError::Unknown("y".into())));
        assert!(generate_inputs("x=wobble", &vars(&["x"]), 1, 0).is_err());
    }
}
