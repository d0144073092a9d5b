//! Static sanity conditions on variable use: linearity, the Barendregt
//! convention, single assignment and determinism.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Abs, BoxAbs, Expr, ExprKind, Form, FormKind, Ident, Pat, RuleTree, Span};
use crate::frontend::ProgramDB;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    Linearity,
    Barendregt,
    SingleAssignment,
    Determinism,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::Linearity => "Linearity",
            ViolationKind::Barendregt => "Barendregt",
            ViolationKind::SingleAssignment => "SingleAssignment",
            ViolationKind::Determinism => "Determinism",
        }
    }

    /// Determinism violations are legal in loose specifications, where an
    /// unassigned variable ranges over all values.
    pub fn is_fatal(self) -> bool {
        !matches!(self, ViolationKind::Determinism)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SanityViolation {
    pub kind: ViolationKind,
    pub var: Ident,
    pub def: Option<Ident>,
    pub span: Span,
}

impl fmt::Display for SanityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} violation on variable `{}`", self.span, self.kind.name(), self.var)?;
        if let Some(d) = &self.def {
            write!(f, " in `{d}`")?;
        }
        Ok(())
    }
}

/// Checks every function definition of a program. An empty result means sane.
pub fn check_sanity(program: &ProgramDB) -> Vec<SanityViolation> {
    program
        .funs()
        .flat_map(|def| {
            check_abs_sanity(&def.abs).into_iter().map(move |mut v| {
                v.def = Some(def.name.clone());
                if v.span.is_synthetic() {
                    v.span = def.span;
                }
                v
            })
        })
        .collect()
}

pub fn check_abs_sanity(abs: &Abs) -> Vec<SanityViolation> {
    let mut c = Collector::default();
    match abs {
        Abs::Lambda(rules) => c.rules(rules, false),
        Abs::Box(b) => c.box_abs(b),
    }
    c.finish()
}

#[derive(Default)]
struct Collector {
    out: Vec<SanityViolation>,
    seen: BTreeSet<(ViolationKind, Ident)>,
    /// Pattern and ∃ binders with the span of their first occurrence.
    binders: BTreeMap<Ident, Span>,
    let_binders: Vec<(Ident, Span)>,
    /// Targets outside disjunctions.
    strict_targets: BTreeMap<Ident, Span>,
    assigned: BTreeSet<Ident>,
}

impl Collector {
    fn report(&mut self, kind: ViolationKind, var: &Ident, span: Span) {
        if self.seen.insert((kind, var.clone())) {
            self.out.push(SanityViolation { kind, var: var.clone(), def: None, span });
        }
    }

    fn bind(&mut self, v: &Ident, span: Span) {
        if self.binders.contains_key(v) {
            self.report(ViolationKind::Barendregt, v, span);
        } else {
            self.binders.insert(v.clone(), span);
        }
    }

    fn target(&mut self, v: &Ident, span: Span, under_or: bool) {
        self.assigned.insert(v.clone());
        if under_or {
            return;
        }
        if self.strict_targets.contains_key(v) {
            self.report(ViolationKind::SingleAssignment, v, span);
        } else {
            self.strict_targets.insert(v.clone(), span);
        }
    }

    fn box_abs(&mut self, b: &BoxAbs) {
        let face = &b.face;
        let mut left = BTreeSet::new();
        for v in face.pre_state.iter().chain(&face.inputs) {
            if !left.insert(v.clone()) {
                self.report(ViolationKind::Linearity, v, b.body.span);
            }
        }
        self.form(&b.body, false);

        for (v, span) in self.binders.clone() {
            if face.contains(&v) {
                self.report(ViolationKind::Barendregt, &v, span);
            }
        }
        for (v, span) in self.let_binders.clone() {
            if face.contains(&v) || self.binders.contains_key(&v) {
                self.report(ViolationKind::Barendregt, &v, span);
            }
        }

        let mut required: Vec<(Ident, Span)> = face
            .outputs
            .iter()
            .chain(&face.post_state)
            .map(|v| (v.clone(), b.body.span))
            .collect();
        let mut exists = Vec::new();
        b.body.walk(&mut |f| {
            if let FormKind::Exists(vs, _) = &f.kind {
                exists.extend(vs.iter().map(|v| (v.clone(), f.span)));
            }
        });
        required.extend(exists);
        for (v, span) in required {
            if !face.is_source(&v) && !self.assigned.contains(&v) {
                self.report(ViolationKind::Determinism, &v, span);
            }
        }
    }

    fn form(&mut self, f: &Form, under_or: bool) {
        match &f.kind {
            FormKind::Top | FormKind::Bot | FormKind::IsBot(_) | FormKind::IsNotBot(_) => {}
            FormKind::And(l, r) => {
                self.form(l, under_or);
                self.form(r, under_or);
            }
            FormKind::Or(l, r) => {
                self.form(l, true);
                self.form(r, true);
            }
            FormKind::Exists(vs, body) => {
                for v in vs {
                    self.bind(v, f.span);
                }
                self.form(body, under_or);
            }
            FormKind::Assign { targets, post_state, rhs } => {
                for v in targets.iter().chain(post_state) {
                    self.target(v, f.span, under_or);
                }
                self.expr(rhs);
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Unit | ExprKind::Var(_) | ExprKind::Lit(_) => {}
            ExprKind::Comma(l, r) => {
                self.expr(l);
                self.expr(r);
            }
            ExprKind::Apply { arg, .. } => self.expr(arg),
            ExprKind::Let { binder, bound, body } => {
                for v in binder {
                    self.target(v, e.span, false);
                    self.let_binders.push((v.clone(), e.span));
                }
                self.expr(bound);
                self.expr(body);
            }
            ExprKind::Case { scrutinee, rules } => {
                self.expr(scrutinee);
                self.rules(rules, true);
            }
        }
    }

    fn rules(&mut self, rules: &RuleTree, _nested: bool) {
        for (pat, body) in rules.matches() {
            self.pattern(pat);
            self.expr(body);
        }
    }

    fn pattern(&mut self, p: &Pat) {
        let mut local = BTreeSet::new();
        for v in p.vars() {
            if !local.insert(v.clone()) {
                self.report(ViolationKind::Linearity, v, p.span);
            }
        }
        for v in local {
            self.bind(&v, p.span);
            self.assigned.insert(v);
        }
    }

    fn finish(self) -> Vec<SanityViolation> {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{vars, Face, Pat};

    fn v(n: &str) -> Ident {
        Ident::new(n)
    }

    #[test]
    fn duplicate_rule_binder_is_linearity() {
        let rule = RuleTree::rule(
            Pat::tuple(vec![Pat::var("x"), Pat::var("x")]),
            Expr::var(&v("x")),
        );
        let out = check_abs_sanity(&Abs::Lambda(rule));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, ViolationKind::Linearity);
        assert_eq!(out[0].var, v("x"));
    }

    #[test]
    fn double_assignment_is_reported_once() {
        let body = Form::exists(
            vars(&["v"]),
            Form::conj([
                Form::assign1(&v("y"), Expr::var(&v("v"))),
                Form::assign1(&v("v"), Expr::var(&v("x"))),
                Form::assign1(&v("v"), Expr::var(&v("x"))),
            ]),
        );
        let abs = Abs::Box(BoxAbs { face: Face::io(vars(&["x"]), vars(&["y"])), body });
        let out = check_abs_sanity(&abs);
        assert_eq!(
            out.iter().map(|o| (o.kind, o.var.clone())).collect::<Vec<_>>(),
            vec![(ViolationKind::SingleAssignment, v("v"))]
        );
    }

    #[test]
    fn exists_shadowing_face_variable_is_barendregt() {
        let body = Form::exists(vars(&["x"]), Form::assign1(&v("y"), Expr::var(&v("x"))));
        let abs = Abs::Box(BoxAbs { face: Face::io(vars(&["x"]), vars(&["y"])), body });
        let kinds: Vec<_> = check_abs_sanity(&abs).into_iter().map(|o| o.kind).collect();
        assert!(kinds.contains(&ViolationKind::Barendregt));
    }

    #[test]
    fn unassigned_output_is_determinism() {
        let abs = Abs::Box(BoxAbs { face: Face::io(vars(&["x"]), vars(&["y"])), body: Form::top() });
        let out = check_abs_sanity(&abs);
        assert_eq!(out[0].kind, ViolationKind::Determinism);
        assert!(!out[0].kind.is_fatal());
    }

    #[test]
    fn assignments_under_disjunction_are_relaxed() {
        let body = Form::or(
            Form::assign1(&v("y"), Expr::var(&v("x"))),
            Form::assign1(&v("y"), Expr::var(&v("x"))),
        );
        let abs = Abs::Box(BoxAbs { face: Face::io(vars(&["x"]), vars(&["y"])), body });
        assert!(check_abs_sanity(&abs).is_empty());
    }

    #[test]
    fn reused_pattern_variable_across_rules_is_barendregt() {
        let r = |c: &str| RuleTree::rule(Pat::cons(c, Pat::var("a")), Expr::var(&v("a")));
        let abs = Abs::Lambda(RuleTree::choice(vec![r("P"), r("Q")]));
        let out = check_abs_sanity(&abs);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, ViolationKind::Barendregt);
    }
}
