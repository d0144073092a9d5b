//! Classification of definitions into the first, second and third form.

use std::fmt;

use super::{Abs, BoxAbs, Expr, ExprKind, Form, FormKind, OpRef, RuleTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FormTag {
    First,
    Second,
    Third,
    Mixed,
}

impl FormTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FormTag::First => "1",
            FormTag::Second => "2",
            FormTag::Third => "3",
            FormTag::Mixed => "mixed",
        }
    }
}

impl fmt::Display for FormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lowest-numbered form whose constraints `abs` satisfies.
pub fn classify_abs(abs: &Abs) -> FormTag {
    if is_first(abs) {
        FormTag::First
    } else if let Abs::Box(b) = abs {
        if !b.face.explicit_state {
            FormTag::Mixed
        } else if is_second(b) {
            FormTag::Second
        } else if is_third(b) {
            FormTag::Third
        } else {
            FormTag::Mixed
        }
    } else {
        FormTag::Mixed
    }
}

/// Classification of a single definition; alias of [`classify_abs`].
pub fn classify_form(def: &super::FunDef) -> FormTag {
    classify_abs(&def.abs)
}

fn is_first(abs: &Abs) -> bool {
    match abs {
        Abs::Lambda(r) => rules_first(r),
        Abs::Box(b) => !b.face.has_state() && b.face.init.iter().all(Option::is_none) && form_first(&b.body),
    }
}

fn rules_first(r: &RuleTree) -> bool {
    r.matches().into_iter().all(|(_, body)| expr_first(body))
}

fn form_first(f: &Form) -> bool {
    match &f.kind {
        FormKind::Top => true,
        FormKind::And(l, r) => form_first(l) && form_first(r),
        FormKind::Exists(_, b) => form_first(b),
        FormKind::Assign { post_state, rhs, .. } => post_state.is_empty() && expr_first(rhs),
        _ => false,
    }
}

fn expr_first(e: &Expr) -> bool {
    let mut ok = true;
    e.walk(&mut |sub| {
        if let ExprKind::Apply { op, state, .. } = &sub.kind {
            if matches!(op, OpRef::ConsInv(_) | OpRef::Gamma | OpRef::Phi) || !state.is_empty() {
                ok = false;
            }
        }
    });
    ok
}

fn is_second(b: &BoxAbs) -> bool {
    flat_form(&b.body, false) && crate::normalize::check_box_causality(b).is_ok()
}

fn is_third(b: &BoxAbs) -> bool {
    flat_form(&b.body, true)
}

fn flat_form(f: &Form, third: bool) -> bool {
    match &f.kind {
        FormKind::Top => true,
        FormKind::And(l, r) => flat_form(l, third) && flat_form(r, third),
        FormKind::Exists(_, b) => flat_form(b, third),
        FormKind::Assign { rhs, .. } => flat_rhs(rhs, third),
        FormKind::Bot | FormKind::IsBot(_) | FormKind::IsNotBot(_) => third,
        FormKind::Or(l, r) => third && flat_form(l, third) && flat_form(r, third),
    }
}

/// Atomic, flat right-hand side: a variable, a literal, or an operation on
/// variables only.
pub(crate) fn flat_rhs(rhs: &Expr, third: bool) -> bool {
    match &rhs.kind {
        ExprKind::Var(_) | ExprKind::Lit(_) => true,
        ExprKind::Apply { op, arg, .. } => {
            let allowed = match op {
                OpRef::Delta(_) => false,
                OpRef::Gamma | OpRef::Phi => !third,
                _ => true,
            };
            allowed && arg.flatten().iter().all(|a| matches!(a.kind, ExprKind::Var(_)))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{vars, Face, Ident, Pat};

    fn v(n: &str) -> Ident {
        Ident::new(n)
    }

    #[test]
    fn identity_lambda_is_first_form() {
        let abs = Abs::Lambda(RuleTree::rule(Pat::var("x"), Expr::var(&v("x"))));
        assert_eq!(classify_abs(&abs), FormTag::First);
    }

    #[test]
    fn guard_makes_second_form() {
        let body = Form::assign1(
            &v("y"),
            Expr::apply(OpRef::Gamma, Expr::var_tuple(&vars(&["x", "c"]))),
        );
        let abs = Abs::Box(BoxAbs { face: Face::stateful(vec![], vars(&["x", "c"]), vars(&["y"]), vec![]), body });
        assert_eq!(classify_abs(&abs), FormTag::Second);
    }

    #[test]
    fn disjunction_makes_third_form() {
        let body = Form::or(Form::assign1(&v("y"), Expr::var(&v("x"))), Form::synth(FormKind::IsBot(v("x"))));
        let abs = Abs::Box(BoxAbs { face: Face::stateful(vec![], vars(&["x"]), vars(&["y"]), vec![]), body });
        assert_eq!(classify_abs(&abs), FormTag::Third);
    }

    #[test]
    fn delay_with_disjunction_is_mixed() {
        let body = Form::or(
            Form::assign1(&v("y"), Expr::apply(OpRef::Delta(Vec::new()), Expr::var(&v("x")))),
            Form::bot(),
        );
        let abs = Abs::Box(BoxAbs { face: Face::io(vars(&["x"]), vars(&["y"])), body });
        assert_eq!(classify_abs(&abs), FormTag::Mixed);
    }

    #[test]
    fn first_form_face_with_guard_is_mixed() {
        let body = Form::assign1(&v("y"), Expr::apply(OpRef::Gamma, Expr::var(&v("x"))));
        let abs = Abs::Box(BoxAbs { face: Face::io(vars(&["x"]), vars(&["y"])), body });
        assert_eq!(classify_abs(&abs), FormTag::Mixed);
    }

    #[test]
    fn circular_flat_box_is_not_second_form() {
        let body = Form::assign1(&v("y"), Expr::apply(OpRef::Fun(v("f")), Expr::var(&v("y"))));
        let abs = Abs::Box(BoxAbs { face: Face::stateful(vars(&["s"]), vars(&["x"]), vars(&["y"]), vars(&["s2"])), body });
        assert_eq!(classify_abs(&abs), FormTag::Third);
    }
}
