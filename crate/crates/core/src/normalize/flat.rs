//! Prenex, flat representation of second-form boxes.

use std::collections::BTreeMap;
use std::fmt;

use crate::ast::{Abs, BoxAbs, Expr, ExprKind, Face, Form, FormKind, Ident, OpRef, Span, Vars};
use crate::frontend::{print_abs, print_expr};
use crate::relsem::Value;

/// Right-hand side of an atomic assignment.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rhs {
    Var(Ident),
    Lit(Value),
    Op { op: OpRef, state: Vars, args: Vars },
}

impl Rhs {
    /// Variables read, state arguments first.
    pub fn uses(&self) -> Vec<&Ident> {
        match self {
            Rhs::Var(v) => vec![v],
            Rhs::Lit(_) => Vec::new(),
            Rhs::Op { state, args, .. } => state.iter().chain(args).collect(),
        }
    }

    pub fn rename(&mut self, map: &BTreeMap<Ident, Ident>) {
        let sub = |v: &mut Ident| {
            if let Some(n) = map.get(v) {
                *v = n.clone();
            }
        };
        match self {
            Rhs::Var(v) => sub(v),
            Rhs::Lit(_) => {}
            Rhs::Op { state, args, .. } => state.iter_mut().chain(args.iter_mut()).for_each(sub),
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Rhs::Var(v) => Expr::var(v),
            Rhs::Lit(v) => Expr::lit(v.clone()),
            Rhs::Op { op, state, args } => Expr::apply_state(op.clone(), state.clone(), Expr::var_tuple(args)),
        }
    }

    pub fn from_expr(e: &Expr) -> Option<Rhs> {
        match &e.kind {
            ExprKind::Var(v) => Some(Rhs::Var(v.clone())),
            ExprKind::Lit(v) => Some(Rhs::Lit(v.clone())),
            ExprKind::Apply { op, state, arg } => {
                let args = arg
                    .flatten()
                    .into_iter()
                    .map(|a| match &a.kind {
                        ExprKind::Var(v) => Some(v.clone()),
                        _ => None,
                    })
                    .collect::<Option<Vars>>()?;
                Some(Rhs::Op { op: op.clone(), state: state.clone(), args })
            }
            _ => None,
        }
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(&self.to_expr()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatAssign {
    pub targets: Vars,
    pub post_state: Vars,
    pub rhs: Rhs,
    pub span: Span,
}

impl FlatAssign {
    pub fn new(targets: Vars, rhs: Rhs) -> FlatAssign {
        FlatAssign { targets, post_state: Vec::new(), rhs, span: Span::default() }
    }

    /// Targets followed by post-state targets.
    pub fn assigned(&self) -> impl Iterator<Item = &Ident> {
        self.targets.iter().chain(&self.post_state)
    }

    pub fn to_form(&self) -> Form {
        Form {
            kind: FormKind::Assign {
                targets: self.targets.clone(),
                post_state: self.post_state.clone(),
                rhs: self.rhs.to_expr(),
            },
            span: self.span,
        }
    }
}

impl fmt::Display for FlatAssign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::frontend::print_form(&self.to_form()))
    }
}

/// A second-form box in prenex normal form: one binder block over a list of
/// atomic, flat assignments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatBox {
    pub face: Face,
    pub binders: Vars,
    pub assigns: Vec<FlatAssign>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: not a flat second-form formula: {reason}")]
pub struct NotFlat {
    pub span: Span,
    pub reason: String,
}

impl FlatBox {
    pub fn from_box(b: &BoxAbs) -> Result<FlatBox, NotFlat> {
        let (binders, conjuncts) = super::prenex::prenex_parts(&b.body).map_err(|span| NotFlat {
            span,
            reason: "disjunction or definedness test".into(),
        })?;
        let mut assigns = Vec::new();
        for c in conjuncts {
            match &c.kind {
                FormKind::Top => {}
                FormKind::Assign { targets, post_state, rhs } => {
                    let r = Rhs::from_expr(rhs).ok_or_else(|| NotFlat {
                        span: c.span,
                        reason: format!("right-hand side `{}` is not atomic", print_expr(rhs)),
                    })?;
                    if matches!(r, Rhs::Op { op: OpRef::Delta(_), .. }) {
                        return Err(NotFlat { span: c.span, reason: "delay operator".into() });
                    }
                    assigns.push(FlatAssign {
                        targets: targets.clone(),
                        post_state: post_state.clone(),
                        rhs: r,
                        span: c.span,
                    });
                }
                _ => {
                    return Err(NotFlat { span: c.span, reason: "not an assignment".into() });
                }
            }
        }
        Ok(FlatBox { face: b.face.clone(), binders, assigns })
    }

    pub fn body(&self) -> Form {
        Form::exists(self.binders.clone(), Form::conj(self.assigns.iter().map(FlatAssign::to_form)))
    }

    pub fn to_abs(&self) -> Abs {
        let mut face = self.face.clone();
        face.explicit_state = true;
        Abs::Box(BoxAbs { face, body: self.body() })
    }

    /// Index of the assignment that writes `v`, if any.
    pub fn writer(&self, v: &Ident) -> Option<usize> {
        self.assigns.iter().position(|a| a.assigned().any(|t| t == v))
    }

    /// Every variable mentioned by the box, face variables first.
    pub fn all_vars(&self) -> Vars {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        let mut add = |v: &Ident| {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        };
        self.face.all_vars().for_each(&mut add);
        self.binders.iter().for_each(&mut add);
        for a in &self.assigns {
            a.assigned().for_each(&mut add);
            a.rhs.uses().into_iter().for_each(&mut add);
        }
        out
    }
}

impl fmt::Display for FlatBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_abs(&self.to_abs()))
    }
}
