//! Third form as clause sets, and the reduction from second form.

use std::collections::BTreeSet;
use std::fmt;

use crate::ast::{Abs, BoxAbs, Declaration, Expr, Face, Form, FormKind, FunDef, Ident, OpRef, Span, Vars};
use crate::frontend::{print_abs, print_program, ProgramDB};
use crate::normalize::{FlatBox, NormalProgram, Rhs};
use crate::relsem::Value;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Literal {
    Top,
    Bot,
    Assign { targets: Vars, post_state: Vars, rhs: Rhs },
    IsBot(Ident),
    IsNotBot(Ident),
}

impl Literal {
    pub fn assign(target: &Ident, rhs: Rhs) -> Literal {
        Literal::Assign { targets: vec![target.clone()], post_state: Vec::new(), rhs }
    }

    /// Every variable the literal mentions.
    pub fn vars(&self) -> Vec<&Ident> {
        match self {
            Literal::Top | Literal::Bot => Vec::new(),
            Literal::IsBot(v) | Literal::IsNotBot(v) => vec![v],
            Literal::Assign { targets, post_state, rhs } => targets.iter().chain(post_state).chain(rhs.uses()).collect(),
        }
    }

    pub fn to_form(&self) -> Form {
        match self {
            Literal::Top => Form::top(),
            Literal::Bot => Form::bot(),
            Literal::IsBot(v) => Form::synth(FormKind::IsBot(v.clone())),
            Literal::IsNotBot(v) => Form::synth(FormKind::IsNotBot(v.clone())),
            Literal::Assign { targets, post_state, rhs } => Form::synth(FormKind::Assign {
                targets: targets.clone(),
                post_state: post_state.clone(),
                rhs: rhs.to_expr(),
            }),
        }
    }
}

/// A disjunction of literals; the empty clause is false.
pub type Clause = Vec<Literal>;

/// A conjunction of clauses under one block of existential binders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClauseSet {
    pub binders: Vars,
    pub clauses: Vec<Clause>,
}

impl ClauseSet {
    pub fn to_form(&self) -> Form {
        let body = Form::conj(self.clauses.iter().map(|c| Form::disj(c.iter().map(Literal::to_form))));
        Form::exists(self.binders.clone(), body)
    }

    /// Whether every clause is a disjunction of literals and every
    /// assignment is flat and free of delay, guard and join.
    pub fn is_cnf(&self) -> bool {
        self.clauses.iter().flatten().all(|l| match l {
            Literal::Assign { rhs: Rhs::Op { op, .. }, .. } => !op.is_special() || matches!(op, OpRef::ConsInv(_)),
            _ => true,
        })
    }

    /// Clauses as a set of sorted literal lists, for comparison modulo order.
    pub fn normalized(&self) -> BTreeSet<Vec<Literal>> {
        self.clauses
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort();
                c.dedup();
                c
            })
            .collect()
    }
}

/// A box in third form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThirdBox {
    pub face: Face,
    pub set: ClauseSet,
}

impl ThirdBox {
    pub fn to_abs(&self) -> Abs {
        let mut face = self.face.clone();
        face.explicit_state = true;
        Abs::Box(BoxAbs { face, body: self.set.to_form() })
    }

    /// Every variable mentioned, face variables first.
    pub fn vars(&self) -> Vars {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let lits = self.set.clauses.iter().flatten().flat_map(Literal::vars);
        for v in self.face.all_vars().chain(&self.set.binders).chain(lits) {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
        out
    }
}

impl fmt::Display for ThirdBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_abs(&self.to_abs()))
    }
}

fn bot_assign(y: &Ident) -> Literal {
    Literal::assign(y, Rhs::Lit(Value::Bot))
}

/// Guard and join elimination; every other assignment becomes a unit
/// clause.
pub fn reduce_to_third(b: &FlatBox) -> ThirdBox {
    let mut clauses = Vec::new();
    for a in &b.assigns {
        match &a.rhs {
            Rhs::Op { op: OpRef::Gamma, args, .. } => {
                let y = &a.targets[0];
                let (x, cs) = (&args[0], &args[1..]);
                if cs.is_empty() {
                    clauses.push(vec![Literal::assign(y, Rhs::Var(x.clone()))]);
                    continue;
                }
                for c in cs {
                    clauses.push(vec![Literal::IsNotBot(c.clone()), bot_assign(y)]);
                }
                let mut d: Clause = cs.iter().map(|c| Literal::IsBot(c.clone())).collect();
                d.push(Literal::assign(y, Rhs::Var(x.clone())));
                clauses.push(d);
            }
            Rhs::Op { op: OpRef::Phi, args, .. } => {
                let y = &a.targets[0];
                clauses.push(args.iter().map(|x| Literal::assign(y, Rhs::Var(x.clone()))).collect());
                for x in args {
                    clauses.push(vec![Literal::IsBot(x.clone()), Literal::IsNotBot(y.clone())]);
                }
            }
            rhs => clauses.push(vec![Literal::Assign {
                targets: a.targets.clone(),
                post_state: a.post_state.clone(),
                rhs: rhs.clone(),
            }]),
        }
    }
    ThirdBox { face: b.face.clone(), set: ClauseSet { binders: b.binders.clone(), clauses } }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: not a third-form formula: {reason}")]
pub struct NotThird {
    pub span: Span,
    pub reason: String,
}

/// Converts a source formula to clause form by lifting binders and
/// distributing disjunction over conjunction.
pub fn form_to_clauses(f: &Form) -> Result<ClauseSet, NotThird> {
    let mut binders = Vec::new();
    let clauses = cnf(f, &mut binders)?;
    Ok(ClauseSet { binders, clauses })
}

fn cnf(f: &Form, binders: &mut Vars) -> Result<Vec<Clause>, NotThird> {
    Ok(match &f.kind {
        FormKind::Top => Vec::new(),
        FormKind::Bot => vec![Vec::new()],
        FormKind::And(l, r) => {
            let mut a = cnf(l, binders)?;
            a.extend(cnf(r, binders)?);
            a
        }
        FormKind::Or(l, r) => {
            let (a, b) = (cnf(l, binders)?, cnf(r, binders)?);
            let mut out = Vec::with_capacity(a.len() * b.len());
            for ca in &a {
                for cb in &b {
                    out.push(ca.iter().chain(cb).cloned().collect());
                }
            }
            out
        }
        FormKind::Exists(vs, body) => {
            binders.extend(vs.iter().cloned());
            cnf(body, binders)?
        }
        FormKind::IsBot(v) => vec![vec![Literal::IsBot(v.clone())]],
        FormKind::IsNotBot(v) => vec![vec![Literal::IsNotBot(v.clone())]],
        FormKind::Assign { targets, post_state, rhs } => vec![vec![assign_literal(targets, post_state, rhs, f.span)?]],
    })
}

fn assign_literal(targets: &Vars, post_state: &Vars, rhs: &Expr, span: Span) -> Result<Literal, NotThird> {
    let r = Rhs::from_expr(rhs).ok_or_else(|| NotThird { span, reason: "right-hand side is not flat".into() })?;
    if let Rhs::Op { op: OpRef::Delta(_), .. } = r {
        return Err(NotThird { span, reason: "delay operator".into() });
    }
    Ok(Literal::Assign { targets: targets.clone(), post_state: post_state.clone(), rhs: r })
}

/// Clause form of a source box written in third form (or any flat form).
pub fn third_from_box(b: &BoxAbs) -> Result<ThirdBox, NotThird> {
    Ok(ThirdBox { face: b.face.clone(), set: form_to_clauses(&b.body)? })
}

/// Prints a program with every compiled definition in third form.
pub fn print_third_program(db: &ProgramDB, prog: &NormalProgram) -> String {
    let decls: Vec<Declaration> = db
        .decls()
        .iter()
        .map(|d| match d {
            Declaration::Fun(f) => match prog.get(&f.name) {
                Some(c) => Declaration::Fun(FunDef {
                    name: f.name.clone(),
                    abs: reduce_to_third(&c.flat).to_abs(),
                    form: None,
                    span: f.span,
                }),
                None => d.clone(),
            },
            other => other.clone(),
        })
        .collect();
    print_program(&decls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::vars;
    use crate::normalize::FlatAssign;

    fn v(n: &str) -> Ident {
        Ident::new(n)
    }

    fn op(t: &str, op: OpRef, a: &[&str]) -> FlatAssign {
        FlatAssign::new(vec![v(t)], Rhs::Op { op, state: vec![], args: vars(a) })
    }

    #[test]
    fn guard_without_controls_is_a_copy() {
        let b = FlatBox { face: Face::io(vars(&["x"]), vars(&["y"])), binders: vec![], assigns: vec![op("y", OpRef::Gamma, &["x"])] };
        assert_eq!(reduce_to_third(&b).set.clauses, vec![vec![Literal::assign(&v("y"), Rhs::Var(v("x")))]]);
    }

    #[test]
    fn unary_join() {
        let b = FlatBox { face: Face::io(vars(&["x"]), vars(&["y"])), binders: vec![], assigns: vec![op("y", OpRef::Phi, &["x"])] };
        let t = reduce_to_third(&b);
        assert_eq!(
            t.set.clauses,
            vec![
                vec![Literal::assign(&v("y"), Rhs::Var(v("x")))],
                vec![Literal::IsBot(v("x")), Literal::IsNotBot(v("y"))],
            ]
        );
        assert!(t.set.is_cnf());
    }

    #[test]
    fn guard_clauses() {
        let b = FlatBox {
            face: Face::io(vars(&["x", "c", "d"]), vars(&["y"])),
            binders: vec![],
            assigns: vec![op("y", OpRef::Gamma, &["x", "c", "d"])],
        };
        let cl = reduce_to_third(&b).set.clauses;
        assert_eq!(cl.len(), 3);
        assert_eq!(cl[2].len(), 3);
    }

    #[test]
    fn printed_third_form_reloads_as_third_form() {
        let src = crate::exec::corpus::SAH.text;
        let db = crate::frontend::load_source(src).unwrap();
        let prog = crate::normalize::normalize_program(&db, Default::default()).unwrap();
        let text = print_third_program(&db, &prog);
        let again = crate::frontend::load_source(&text).unwrap();
        assert_eq!(again.fun(&v("sah")).unwrap().form, Some(crate::ast::FormTag::Third), "{text}");
    }

    #[test]
    fn cnf_distributes_disjunction() {
        let a = |t: &str, s: &str| Form::assign1(&v(t), Expr::var(&v(s)));
        let f = Form::or(Form::and(a("y", "x"), a("z", "x")), a("y", "w"));
        let cs = form_to_clauses(&f).unwrap();
        assert_eq!(cs.clauses.len(), 2);
        assert!(cs.clauses.iter().all(|c| c.len() == 2));
        assert_eq!(form_to_clauses(&Form::bot()).unwrap().clauses, vec![Vec::<Literal>::new()]);
    }
}
