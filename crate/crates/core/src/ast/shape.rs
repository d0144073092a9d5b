//! Arity ("shape") checking. Commas add arities, applications check their
//! argument against the operator's input arity, assignments check the target
//! count against the right-hand side.

use std::collections::BTreeMap;
use std::fmt;

use super::{Abs, Expr, ExprKind, Form, FormKind, Ident, OpRef, Pat, PatKind, RuleTree, Shape, Span};
use crate::frontend::ProgramDB;

/// Where operator arities come from.
pub trait ShapeEnv {
    fn cons_arity(&self, name: &Ident) -> Option<usize>;
    /// Shape of a primitive or user function; `state` is the number of
    /// state variables its second form threads.
    fn fun_shape(&self, name: &Ident) -> Option<Shape>;
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: shape error in {context}: expected arity {expected}, found {found}")]
pub struct ShapeError {
    pub span: Span,
    pub context: String,
    pub expected: usize,
    pub found: usize,
}

impl ShapeError {
    fn new(span: Span, context: impl fmt::Display, expected: usize, found: usize) -> ShapeError {
        ShapeError { span, context: context.to_string(), expected, found }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShapeTable {
    pub defs: BTreeMap<Ident, Shape>,
    /// Right-hand-side arity of every checked assignment, per definition.
    pub assignments: Vec<(Ident, Span, usize)>,
}

struct TableEnv<'a> {
    db: &'a ProgramDB,
    funs: &'a BTreeMap<Ident, Shape>,
}

impl ShapeEnv for TableEnv<'_> {
    fn cons_arity(&self, name: &Ident) -> Option<usize> {
        self.db.cons(name).map(|c| c.arity)
    }

    fn fun_shape(&self, name: &Ident) -> Option<Shape> {
        self.funs
            .get(name)
            .copied()
            .or_else(|| self.db.prim(name).map(|p| p.shape))
    }
}

/// Shape-checks every definition in program order.
pub fn check_shape(program: &ProgramDB) -> Result<ShapeTable, ShapeError> {
    let mut table = ShapeTable::default();
    for def in program.funs() {
        let env = TableEnv { db: program, funs: &table.defs };
        let mut checker = Checker { env: &env, assignments: Vec::new() };
        let shape = checker.abs(&def.abs)?;
        table
            .assignments
            .extend(checker.assignments.into_iter().map(|(s, n)| (def.name.clone(), s, n)));
        table.defs.insert(def.name.clone(), shape);
    }
    Ok(table)
}

/// Output arity of an expression.
pub fn expr_arity(e: &Expr, env: &dyn ShapeEnv) -> Result<usize, ShapeError> {
    Checker { env, assignments: Vec::new() }.expr(e)
}

/// Shape of an abstraction under `env`.
pub fn abs_shape(abs: &Abs, env: &dyn ShapeEnv) -> Result<Shape, ShapeError> {
    Checker { env, assignments: Vec::new() }.abs(abs)
}

struct Checker<'a> {
    env: &'a dyn ShapeEnv,
    assignments: Vec<(Span, usize)>,
}

impl Checker<'_> {
    fn abs(&mut self, abs: &Abs) -> Result<Shape, ShapeError> {
        match abs {
            Abs::Lambda(rules) => {
                let (ins, outs) = self.rules(rules)?;
                let state = self.implicit_state_rules(rules);
                Ok(Shape { state, ins, outs })
            }
            Abs::Box(b) => {
                let face = &b.face;
                if face.pre_state.len() != face.post_state.len() {
                    return Err(ShapeError::new(
                        b.body.span,
                        "face post-state",
                        face.pre_state.len(),
                        face.post_state.len(),
                    ));
                }
                if !face.init.is_empty() && face.init.len() != face.pre_state.len() {
                    return Err(ShapeError::new(
                        b.body.span,
                        "face state initializers",
                        face.pre_state.len(),
                        face.init.len(),
                    ));
                }
                self.form(&b.body)?;
                let state = face.pre_state.len() + self.implicit_state_form(&b.body);
                Ok(Shape { state, ins: face.inputs.len(), outs: face.outputs.len() })
            }
        }
    }

    fn form(&mut self, f: &Form) -> Result<(), ShapeError> {
        match &f.kind {
            FormKind::Top | FormKind::Bot | FormKind::IsBot(_) | FormKind::IsNotBot(_) => Ok(()),
            FormKind::And(l, r) | FormKind::Or(l, r) => {
                self.form(l)?;
                self.form(r)
            }
            FormKind::Exists(_, body) => self.form(body),
            FormKind::Assign { targets, post_state, rhs } => {
                let n = self.expr(rhs)?;
                if n != targets.len() {
                    return Err(ShapeError::new(f.span, "assignment", targets.len(), n));
                }
                let explicit = match &rhs.kind {
                    ExprKind::Apply { state, .. } => state.len(),
                    _ => 0,
                };
                if post_state.len() != explicit {
                    return Err(ShapeError::new(f.span, "assignment post-state", explicit, post_state.len()));
                }
                self.assignments.push((f.span, n));
                Ok(())
            }
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<usize, ShapeError> {
        match &e.kind {
            ExprKind::Unit => Ok(0),
            ExprKind::Comma(l, r) => Ok(self.expr(l)? + self.expr(r)?),
            ExprKind::Var(_) | ExprKind::Lit(_) => Ok(1),
            ExprKind::Apply { op, state, arg } => {
                let n = self.expr(arg)?;
                self.apply(op, state.len(), n, e.span)
            }
            ExprKind::Let { binder, bound, body } => {
                let n = self.expr(bound)?;
                if n != binder.len() {
                    return Err(ShapeError::new(e.span, "let binding", binder.len(), n));
                }
                self.expr(body)
            }
            ExprKind::Case { scrutinee, rules } => {
                let n = self.expr(scrutinee)?;
                let (ins, outs) = self.rules(rules)?;
                if ins != n {
                    return Err(ShapeError::new(e.span, "case scrutinee", ins, n));
                }
                Ok(outs)
            }
        }
    }

    fn apply(&mut self, op: &OpRef, explicit_state: usize, n: usize, span: Span) -> Result<usize, ShapeError> {
        let ctx = |what: &str| format!("application of {what}");
        match op {
            OpRef::Fun(f) => {
                let sh = self
                    .env
                    .fun_shape(f)
                    .ok_or_else(|| ShapeError::new(span, format!("unknown function {f}"), 0, 0))?;
                if explicit_state != 0 && explicit_state != sh.state {
                    return Err(ShapeError::new(span, ctx(&format!("{f} (state)")), sh.state, explicit_state));
                }
                if n != sh.ins {
                    return Err(ShapeError::new(span, ctx(f.as_str()), sh.ins, n));
                }
                Ok(sh.outs)
            }
            OpRef::Cons(c) => {
                let k = self.cons(c, span)?;
                if n != k {
                    return Err(ShapeError::new(span, ctx(c.as_str()), k, n));
                }
                Ok(1)
            }
            OpRef::ConsInv(c) => {
                let k = self.cons(c, span)?;
                if n != 1 {
                    return Err(ShapeError::new(span, ctx(&format!("~{c}")), 1, n));
                }
                Ok(k + 1)
            }
            OpRef::Delta(init) => {
                if !init.is_empty() && init.len() != n {
                    return Err(ShapeError::new(span, "delay initializer", n, init.len()));
                }
                Ok(n)
            }
            OpRef::Gamma | OpRef::Phi => {
                if n == 0 {
                    return Err(ShapeError::new(span, ctx(if *op == OpRef::Gamma { "gamma" } else { "phi" }), 1, 0));
                }
                Ok(1)
            }
        }
    }

    fn cons(&self, c: &Ident, span: Span) -> Result<usize, ShapeError> {
        self.env
            .cons_arity(c)
            .ok_or_else(|| ShapeError::new(span, format!("unknown constructor {c}"), 0, 0))
    }

    fn rules(&mut self, r: &RuleTree) -> Result<(usize, usize), ShapeError> {
        match r {
            RuleTree::Match { pat, body, span } => {
                let ins = self.pat(pat)?;
                let outs = self.expr(body)?;
                let _ = span;
                Ok((ins, outs))
            }
            RuleTree::Choice(l, r) => {
                let (li, lo) = self.rules(l)?;
                let (ri, ro) = self.rules(r)?;
                let span = first_span(r);
                if li != ri {
                    return Err(ShapeError::new(span, "alternative rule pattern", li, ri));
                }
                if lo != ro {
                    return Err(ShapeError::new(span, "alternative rule body", lo, ro));
                }
                Ok((li, lo))
            }
        }
    }

    fn pat(&mut self, p: &Pat) -> Result<usize, ShapeError> {
        match &p.kind {
            PatKind::Unit => Ok(0),
            PatKind::Comma(l, r) => Ok(self.pat(l)? + self.pat(r)?),
            PatKind::Var(_) => Ok(1),
            PatKind::Cons(c, arg) => {
                let k = self.cons(c, p.span)?;
                let n = self.pat(arg)?;
                if n != k {
                    return Err(ShapeError::new(p.span, format!("pattern {c}"), k, n));
                }
                Ok(1)
            }
        }
    }

    /// State variables introduced by normalizing δ nodes and implicit-state
    /// calls in a first-form fragment.
    fn implicit_state_expr(&self, e: &Expr) -> usize {
        let mut total = 0;
        e.walk(&mut |sub| {
            if let ExprKind::Apply { op, state, arg } = &sub.kind {
                match op {
                    OpRef::Delta(_) => total += arg.flatten_arity(self.env),
                    OpRef::Fun(f) if state.is_empty() => {
                        total += self.env.fun_shape(f).map_or(0, |s| s.state);
                    }
                    _ => {}
                }
            }
        });
        total
    }

    fn implicit_state_form(&self, f: &Form) -> usize {
        let mut total = 0;
        f.walk(&mut |sub| {
            if let FormKind::Assign { rhs, .. } = &sub.kind {
                total += self.implicit_state_expr(rhs);
            }
        });
        total
    }

    fn implicit_state_rules(&self, r: &RuleTree) -> usize {
        r.matches().iter().map(|(_, body)| self.implicit_state_expr(body)).sum()
    }
}

fn first_span(r: &RuleTree) -> Span {
    match r {
        RuleTree::Match { span, .. } => *span,
        RuleTree::Choice(l, _) => first_span(l),
    }
}

impl Expr {
    /// Arity computed without error reporting; ill-shaped nodes count as 0.
    fn flatten_arity(&self, env: &dyn ShapeEnv) -> usize {
        expr_arity(self, env).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{vars, Ident};

    struct Env;
    impl ShapeEnv for Env {
        fn cons_arity(&self, name: &Ident) -> Option<usize> {
            match name.as_str() {
                "S" | "H" => Some(0),
                "P" => Some(2),
                _ => None,
            }
        }
        fn fun_shape(&self, name: &Ident) -> Option<Shape> {
            match name.as_str() {
                "f" => Some(Shape::stateless(3, 2)),
                "g" => Some(Shape::stateless(2, 1)),
                "h" => Some(Shape::stateless(0, 2)),
                "f2" => Some(Shape::stateless(2, 1)),
                _ => None,
            }
        }
    }

    fn var(n: &str) -> Expr {
        Expr::var(&Ident::new(n))
    }

    fn call(f: &str, arg: Expr) -> Expr {
        Expr::apply(OpRef::Fun(Ident::new(f)), arg)
    }

    #[test]
    fn nested_application_combines_associatively() {
        // y, z := f(g(w, x), h())
        let rhs = call(
            "f",
            Expr::comma(call("g", Expr::comma(var("w"), var("x"))), call("h", Expr::unit())),
        );
        assert_eq!(expr_arity(&rhs, &Env).unwrap(), 2);
        let mut c = Checker { env: &Env, assignments: Vec::new() };
        c.form(&Form::assign(vars(&["y", "z"]), rhs)).unwrap();
        assert_eq!(c.assignments[0].1, 2);
    }

    #[test]
    fn arity_mismatch_reports_expected_and_found() {
        let err = expr_arity(&call("f2", var("x")), &Env).unwrap_err();
        assert_eq!((err.expected, err.found), (2, 1));
    }

    #[test]
    fn unit_assignment_is_well_shaped() {
        let mut c = Checker { env: &Env, assignments: Vec::new() };
        c.form(&Form::assign(Vec::new(), Expr::unit())).unwrap();
        assert_eq!(c.assignments[0].1, 0);
    }

    #[test]
    fn inverse_constructor_adds_control_output() {
        let e = Expr::apply(OpRef::ConsInv(Ident::new("P")), var("t"));
        assert_eq!(expr_arity(&e, &Env).unwrap(), 3);
    }

    #[test]
    fn comma_arity_is_additive() {
        let a = call("h", Expr::unit());
        let b = var("x");
        let both = Expr::comma(a.clone(), b.clone());
        assert_eq!(
            expr_arity(&both, &Env).unwrap(),
            expr_arity(&a, &Env).unwrap() + expr_arity(&b, &Env).unwrap()
        );
    }
}
