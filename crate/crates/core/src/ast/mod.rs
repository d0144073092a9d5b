//! Abstract syntax of the core calculus, static sanity conditions, shape
//! checking and form classification.

mod classify;
mod sanity;
mod shape;

use std::fmt;
use std::sync::Arc;

pub use classify::{classify_form, classify_abs, FormTag};
pub use sanity::{check_sanity, check_abs_sanity, SanityViolation, ViolationKind};
pub use shape::{abs_shape, check_shape, expr_arity, ShapeEnv, ShapeError, ShapeTable};

use crate::relsem::Value;

/// An interned-by-refcount identifier. Cheap to clone and `Send + Sync`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

impl Ident {
    pub fn new(s: &str) -> Ident {
        Ident(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Names produced by the normalizer carry the reserved `%` prefix.
    pub fn is_generated(&self) -> bool {
        self.0.starts_with('%')
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Ident {
        Ident::new(s)
    }
}

/// A variable vector `x₁, …, xₙ`.
pub type Vars = Vec<Ident>;

pub fn vars(names: &[&str]) -> Vars {
    names.iter().map(|n| Ident::new(n)).collect()
}

/// Source range of a node. Spans never participate in structural equality,
/// so trees built by hand compare equal to parsed ones.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Span {
    pub fn is_synthetic(&self) -> bool {
        self.line == 0
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_synthetic() {
            f.write_str("<generated>")
        } else {
            write!(f, "{}:{}", self.line, self.col)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OpRef {
    /// A user-defined function or a declared primitive.
    Fun(Ident),
    Cons(Ident),
    ConsInv(Ident),
    /// One-step delay; the optional annotation gives initial state values.
    Delta(Vec<Value>),
    Gamma,
    Phi,
}

impl OpRef {
    pub fn is_special(&self) -> bool {
        matches!(self, OpRef::ConsInv(_) | OpRef::Gamma | OpRef::Phi | OpRef::Delta(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Unit,
    Comma(Box<Expr>, Box<Expr>),
    Var(Ident),
    Lit(Value),
    /// `op(state / arg)`; `state` is empty except for explicit-state calls
    /// of stateful functions in second and third form.
    Apply {
        op: OpRef,
        state: Vars,
        arg: Box<Expr>,
    },
    Let {
        binder: Vars,
        bound: Box<Expr>,
        body: Box<Expr>,
    },
    Case {
        scrutinee: Box<Expr>,
        rules: Box<RuleTree>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn synth(kind: ExprKind) -> Expr {
        Expr { kind, span: Span::default() }
    }

    pub fn unit() -> Expr {
        Expr::synth(ExprKind::Unit)
    }

    pub fn var(name: &Ident) -> Expr {
        Expr::synth(ExprKind::Var(name.clone()))
    }

    pub fn lit(v: Value) -> Expr {
        Expr::synth(ExprKind::Lit(v))
    }

    pub fn comma(l: Expr, r: Expr) -> Expr {
        Expr::synth(ExprKind::Comma(Box::new(l), Box::new(r)))
    }

    /// Right-nested comma list; the empty list is `()`.
    pub fn tuple(items: Vec<Expr>) -> Expr {
        let mut it = items.into_iter().rev();
        match it.next() {
            None => Expr::unit(),
            Some(last) => it.fold(last, |acc, e| Expr::comma(e, acc)),
        }
    }

    pub fn var_tuple(names: &[Ident]) -> Expr {
        Expr::tuple(names.iter().map(Expr::var).collect())
    }

    pub fn apply(op: OpRef, arg: Expr) -> Expr {
        Expr::synth(ExprKind::Apply { op, state: Vec::new(), arg: Box::new(arg) })
    }

    pub fn apply_state(op: OpRef, state: Vars, arg: Expr) -> Expr {
        Expr::synth(ExprKind::Apply { op, state, arg: Box::new(arg) })
    }

    /// The comma-monoid view: nested commas flattened, units dropped.
    pub fn flatten(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match &e.kind {
                ExprKind::Unit => {}
                ExprKind::Comma(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                _ => out.push(e),
            }
        }
        go(self, &mut out);
        out
    }

    /// Pre-order walk over all sub-expressions, including those inside rules.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Unit | ExprKind::Var(_) | ExprKind::Lit(_) => {}
            ExprKind::Comma(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            ExprKind::Apply { arg, .. } => arg.walk(f),
            ExprKind::Let { bound, body, .. } => {
                bound.walk(f);
                body.walk(f);
            }
            ExprKind::Case { scrutinee, rules } => {
                scrutinee.walk(f);
                for m in rules.matches() {
                    m.1.walk(f);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleTree {
    Match { pat: Pat, body: Expr, span: Span },
    /// Nondeterministic choice `⊔`; carries no first-fit priority.
    Choice(Box<RuleTree>, Box<RuleTree>),
}

impl RuleTree {
    pub fn matches(&self) -> Vec<(&Pat, &Expr)> {
        let mut out = Vec::new();
        fn go<'a>(r: &'a RuleTree, out: &mut Vec<(&'a Pat, &'a Expr)>) {
            match r {
                RuleTree::Match { pat, body, .. } => out.push((pat, body)),
                RuleTree::Choice(l, r) => {
                    go(l, out);
                    go(r, out);
                }
            }
        }
        go(self, &mut out);
        out
    }

    /// Left-associated choice over a nonempty rule list.
    pub fn choice(rules: Vec<RuleTree>) -> RuleTree {
        let mut it = rules.into_iter();
        let first = it.next().expect("at least one rule");
        it.fold(first, |acc, r| RuleTree::Choice(Box::new(acc), Box::new(r)))
    }

    pub fn rule(pat: Pat, body: Expr) -> RuleTree {
        RuleTree::Match { pat, body, span: Span::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pat {
    pub kind: PatKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatKind {
    Unit,
    Comma(Box<Pat>, Box<Pat>),
    Var(Ident),
    Cons(Ident, Box<Pat>),
}

impl Pat {
    pub fn synth(kind: PatKind) -> Pat {
        Pat { kind, span: Span::default() }
    }

    pub fn var(name: &str) -> Pat {
        Pat::synth(PatKind::Var(Ident::new(name)))
    }

    pub fn cons(name: &str, arg: Pat) -> Pat {
        Pat::synth(PatKind::Cons(Ident::new(name), Box::new(arg)))
    }

    pub fn unit() -> Pat {
        Pat::synth(PatKind::Unit)
    }

    pub fn tuple(items: Vec<Pat>) -> Pat {
        let mut it = items.into_iter().rev();
        match it.next() {
            None => Pat::unit(),
            Some(last) => it.fold(last, |acc, p| {
                Pat::synth(PatKind::Comma(Box::new(p), Box::new(acc)))
            }),
        }
    }

    /// Variables in left-to-right order, duplicates kept.
    pub fn vars(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Pat, out: &mut Vec<&'a Ident>) {
            match &p.kind {
                PatKind::Unit => {}
                PatKind::Comma(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                PatKind::Var(v) => out.push(v),
                PatKind::Cons(_, a) => go(a, out),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn flatten(&self) -> Vec<&Pat> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Pat, out: &mut Vec<&'a Pat>) {
            match &p.kind {
                PatKind::Unit => {}
                PatKind::Comma(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                _ => out.push(p),
            }
        }
        go(self, &mut out);
        out
    }
}

/// Interface `s / x → y / s′` of a box abstraction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Face {
    pub pre_state: Vars,
    pub inputs: Vars,
    pub outputs: Vars,
    pub post_state: Vars,
    /// Initial values parallel to `pre_state`; `None` means the default.
    pub init: Vec<Option<Value>>,
    /// Written in state-exchange notation `s / x -> y / s'`, possibly with
    /// empty state vectors. First-form faces never are.
    pub explicit_state: bool,
}

impl Face {
    pub fn io(inputs: Vars, outputs: Vars) -> Face {
        Face { inputs, outputs, ..Face::default() }
    }

    pub fn stateful(pre_state: Vars, inputs: Vars, outputs: Vars, post_state: Vars) -> Face {
        let init = vec![None; pre_state.len()];
        Face { pre_state, inputs, outputs, post_state, init, explicit_state: true }
    }

    pub fn has_state(&self) -> bool {
        self.explicit_state || !self.pre_state.is_empty() || !self.post_state.is_empty()
    }

    /// All face variables, pre-state first; names may repeat.
    pub fn all_vars(&self) -> impl Iterator<Item = &Ident> {
        self.pre_state
            .iter()
            .chain(&self.inputs)
            .chain(&self.outputs)
            .chain(&self.post_state)
    }

    pub fn contains(&self, v: &Ident) -> bool {
        self.all_vars().any(|x| x == v)
    }

    pub fn is_source(&self, v: &Ident) -> bool {
        self.pre_state.contains(v) || self.inputs.contains(v)
    }

    pub fn init_value(&self, i: usize) -> Option<&Value> {
        self.init.get(i).and_then(Option::as_ref)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    pub kind: FormKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormKind {
    Top,
    Bot,
    And(Box<Form>, Box<Form>),
    Or(Box<Form>, Box<Form>),
    Exists(Vars, Box<Form>),
    /// `targets / post_state := rhs`; `post_state` is only nonempty for
    /// explicit-state calls of stateful functions.
    Assign {
        targets: Vars,
        post_state: Vars,
        rhs: Expr,
    },
    IsBot(Ident),
    IsNotBot(Ident),
}

impl Default for Form {
    fn default() -> Self {
        Form::top()
    }
}

impl Form {
    pub fn synth(kind: FormKind) -> Form {
        Form { kind, span: Span::default() }
    }

    pub fn top() -> Form {
        Form::synth(FormKind::Top)
    }

    pub fn bot() -> Form {
        Form::synth(FormKind::Bot)
    }

    pub fn assign(targets: Vars, rhs: Expr) -> Form {
        Form::synth(FormKind::Assign { targets, post_state: Vec::new(), rhs })
    }

    pub fn assign1(target: &Ident, rhs: Expr) -> Form {
        Form::assign(vec![target.clone()], rhs)
    }

    pub fn and(l: Form, r: Form) -> Form {
        Form::synth(FormKind::And(Box::new(l), Box::new(r)))
    }

    pub fn or(l: Form, r: Form) -> Form {
        Form::synth(FormKind::Or(Box::new(l), Box::new(r)))
    }

    pub fn exists(binders: Vars, body: Form) -> Form {
        if binders.is_empty() {
            body
        } else {
            Form::synth(FormKind::Exists(binders, Box::new(body)))
        }
    }

    /// Left-nested conjunction; `⊤` for the empty list.
    pub fn conj(items: impl IntoIterator<Item = Form>) -> Form {
        let mut it = items.into_iter();
        match it.next() {
            None => Form::top(),
            Some(first) => it.fold(first, Form::and),
        }
    }

    /// Left-nested disjunction; `⊥` for the empty list.
    pub fn disj(items: impl IntoIterator<Item = Form>) -> Form {
        let mut it = items.into_iter();
        match it.next() {
            None => Form::bot(),
            Some(first) => it.fold(first, Form::or),
        }
    }

    /// The conjunct list, looking through nested `∧` only.
    pub fn conjuncts(&self) -> Vec<&Form> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Form, out: &mut Vec<&'a Form>) {
            match &f.kind {
                FormKind::And(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                _ => out.push(f),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Form)) {
        f(self);
        match &self.kind {
            FormKind::And(l, r) | FormKind::Or(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            FormKind::Exists(_, b) => b.walk(f),
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Abs {
    Lambda(RuleTree),
    Box(BoxAbs),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxAbs {
    pub face: Face,
    pub body: Form,
}

/// Arity signature `k / n → m / k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Shape {
    pub state: usize,
    pub ins: usize,
    pub outs: usize,
}

impl Shape {
    pub fn new(state: usize, ins: usize, outs: usize) -> Shape {
        Shape { state, ins, outs }
    }

    pub fn stateless(ins: usize, outs: usize) -> Shape {
        Shape { state: 0, ins, outs }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.state == 0 {
            write!(f, "{} -> {}", self.ins, self.outs)
        } else {
            write!(f, "{} / {} -> {} / {}", self.state, self.ins, self.outs, self.state)
        }
    }
}

/// Built-in implementations a `prim` declaration can bind to.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Neg,
    Min,
    Max,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Id,
    /// Sum of any number of inputs.
    Sum,
    /// Linear form `Σ cᵢ xᵢ` with fixed coefficients.
    Linear(Vec<f64>),
}

impl Eq for Builtin {}

impl Builtin {
    pub fn by_name(name: &str, params: &[f64]) -> Option<Builtin> {
        let b = match name {
            "add" => Builtin::Add,
            "sub" => Builtin::Sub,
            "mul" => Builtin::Mul,
            "div" => Builtin::Div,
            "mod" => Builtin::Mod,
            "neg" => Builtin::Neg,
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            "lt" => Builtin::Lt,
            "le" => Builtin::Le,
            "gt" => Builtin::Gt,
            "ge" => Builtin::Ge,
            "eq" => Builtin::Eq,
            "id" => Builtin::Id,
            "sum" => Builtin::Sum,
            "lin" => return Some(Builtin::Linear(params.to_vec())),
            _ => return None,
        };
        params.is_empty().then_some(b)
    }

    /// Input arity, or `None` when any arity is accepted.
    pub fn arity(&self) -> Option<usize> {
        match self {
            Builtin::Neg | Builtin::Id => Some(1),
            Builtin::Sum => None,
            Builtin::Linear(cs) => Some(cs.len()),
            _ => Some(2),
        }
    }

    pub fn is_comparison(&self) -> bool {
        matches!(self, Builtin::Lt | Builtin::Le | Builtin::Gt | Builtin::Ge | Builtin::Eq)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Add => "add",
            Builtin::Sub => "sub",
            Builtin::Mul => "mul",
            Builtin::Div => "div",
            Builtin::Mod => "mod",
            Builtin::Neg => "neg",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Lt => "lt",
            Builtin::Le => "le",
            Builtin::Gt => "gt",
            Builtin::Ge => "ge",
            Builtin::Eq => "eq",
            Builtin::Id => "id",
            Builtin::Sum => "sum",
            Builtin::Linear(_) => "lin",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsDecl {
    pub name: Ident,
    pub arity: usize,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimDecl {
    pub name: Ident,
    pub shape: Shape,
    pub builtin: Builtin,
    /// Whether the binding was written out (`= lin(...)`) or implied by name.
    pub explicit_binding: bool,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDef {
    pub name: Ident,
    pub abs: Abs,
    pub form: Option<FormTag>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Declaration {
    Cons(ConsDecl),
    Prim(PrimDecl),
    Fun(FunDef),
}

impl Declaration {
    pub fn name(&self) -> &Ident {
        match self {
            Declaration::Cons(c) => &c.name,
            Declaration::Prim(p) => &p.name,
            Declaration::Fun(f) => &f.name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Declaration::Cons(c) => c.span,
            Declaration::Prim(p) => p.span,
            Declaration::Fun(f) => f.span,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: &str) -> Expr {
        Expr::var(&Ident::new(n))
    }

    #[test]
    fn comma_is_a_free_monoid_under_flatten() {
        let left = Expr::comma(Expr::comma(x("a"), x("b")), x("c"));
        let right = Expr::comma(x("a"), Expr::comma(x("b"), x("c")));
        assert_eq!(left.flatten(), right.flatten());
        let padded = Expr::comma(Expr::unit(), Expr::comma(x("a"), Expr::unit()));
        assert_eq!(padded.flatten(), vec![&x("a")]);
    }

    #[test]
    fn spans_do_not_affect_equality() {
        let a = Expr::new(ExprKind::Var(Ident::new("v")), Span { start: 3, end: 4, line: 1, col: 4 });
        assert_eq!(a, x("v"));
    }

    #[test]
    fn choice_builds_left_associated() {
        let r = |n: &str| RuleTree::rule(Pat::var(n), x(n));
        let t = RuleTree::choice(vec![r("a"), r("b"), r("c")]);
        match t {
            RuleTree::Choice(l, _) => assert!(matches!(*l, RuleTree::Choice(..))),
            _ => panic!("expected choice"),
        }
    }
}
