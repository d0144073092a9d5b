//! Semantic building blocks: primitives, constructors and their inverses,
//! guards and joins.

use std::collections::BTreeSet;

use super::Value;
use crate::ast::{Builtin, PrimDecl};

fn truth(b: bool) -> Value {
    Value::atom(if b { "True" } else { "False" })
}

/// Applies a builtin; strict in `Bot`, and `Bot` outside the mathematical
/// domain (division by zero, non-numeric arguments).
pub fn eval_builtin(b: &Builtin, args: &[Value]) -> Value {
    if args.iter().any(Value::is_bot) {
        return Value::Bot;
    }
    if let Builtin::Id = b {
        return args[0].clone();
    }
    if let Builtin::Eq = b {
        return truth(args[0] == args[1]);
    }
    let Some(xs) = args.iter().map(Value::as_num).collect::<Option<Vec<f64>>>() else {
        return Value::Bot;
    };
    let r = match b {
        Builtin::Add => xs[0] + xs[1],
        Builtin::Sub => xs[0] - xs[1],
        Builtin::Mul => xs[0] * xs[1],
        Builtin::Div if xs[1] == 0.0 => return Value::Bot,
        Builtin::Div => xs[0] / xs[1],
        Builtin::Mod if xs[1] == 0.0 => return Value::Bot,
        Builtin::Mod => xs[0].rem_euclid(xs[1]),
        Builtin::Neg => -xs[0],
        Builtin::Min => xs[0].min(xs[1]),
        Builtin::Max => xs[0].max(xs[1]),
        Builtin::Lt => return truth(xs[0] < xs[1]),
        Builtin::Le => return truth(xs[0] <= xs[1]),
        Builtin::Gt => return truth(xs[0] > xs[1]),
        Builtin::Ge => return truth(xs[0] >= xs[1]),
        Builtin::Sum => xs.iter().sum(),
        Builtin::Linear(cs) => cs.iter().zip(&xs).fold(0.0, |acc, (c, x)| acc + c * x),
        Builtin::Id | Builtin::Eq => unreachable!(),
    };
    if r.is_finite() {
        Value::Num(r)
    } else {
        Value::Bot
    }
}

/// Applies a declared primitive; the result has the primitive's output arity.
pub fn eval_prim(f: &PrimDecl, args: &[Value]) -> Vec<Value> {
    vec![eval_builtin(&f.builtin, args)]
}

/// Constructor application; `Bot` if any argument is `Bot`.
pub fn eval_cons(name: &str, args: &[Value]) -> Value {
    if args.iter().any(Value::is_bot) {
        Value::Bot
    } else {
        Value::cons(name, args.to_vec())
    }
}

/// Inverse constructor: the components and a unit control on a match,
/// all `Bot` otherwise.
pub fn eval_cons_inv(name: &str, arity: usize, arg: &Value) -> (Vec<Value>, Value) {
    match arg {
        Value::Term(c, args) if c.as_str() == name && args.len() == arity => (args.clone(), Value::Unit),
        _ => (vec![Value::Bot; arity], Value::Bot),
    }
}

/// Guard: passes `x` iff no control is `Bot`.
pub fn eval_gamma(x: &Value, controls: &[Value]) -> Value {
    if controls.iter().any(Value::is_bot) {
        Value::Bot
    } else {
        x.clone()
    }
}

/// Join: the defined inputs, or `{Bot}` if there are none.
pub fn eval_phi(xs: &[Value]) -> BTreeSet<Value> {
    let defined: BTreeSet<Value> = xs.iter().filter(|v| v.is_defined()).cloned().collect();
    if defined.is_empty() {
        [Value::Bot].into()
    } else {
        defined
    }
}
