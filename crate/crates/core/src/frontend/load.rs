//! Program loading: merging units, name resolution, and static checks.

use std::collections::BTreeMap;
use std::fmt;

use super::parser::SourceUnit;
use crate::ast::{
    check_sanity, check_shape, classify_abs, Abs, ConsDecl, Declaration, Expr, ExprKind, Form,
    FormKind, FormTag, FunDef, Ident, OpRef, Pat, PatKind, PrimDecl, RuleTree, SanityViolation,
    Shape, ShapeError, ShapeTable, Span,
};
use crate::relsem::Value;

/// An ordered, resolved and checked program.
#[derive(Clone, Debug, Default)]
pub struct ProgramDB {
    decls: Vec<Declaration>,
    index: BTreeMap<Ident, usize>,
    shapes: ShapeTable,
    warnings: Vec<Warning>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Warning {
    pub span: Span,
    pub def: Option<Ident>,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: warning: {}", self.span, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error("{span}: duplicate definition of `{name}`")]
    DuplicateName { name: Ident, span: Span },
    #[error("{span}: `{name}` is referenced in `{def}` before its definition")]
    ForwardReference { name: Ident, def: Ident, span: Span },
    #[error("{span}: unresolved name `{name}` in `{def}`")]
    Unresolved { name: Ident, def: Ident, span: Span },
    #[error("{span}: `{name}` is not a {expected}")]
    WrongKind { name: Ident, expected: &'static str, span: Span },
    #[error("{span}: reserved name `{name}` (the `%` prefix is reserved for generated variables)")]
    ReservedName { name: Ident, span: Span },
    #[error("{span}: primitive `{name}`: {message}")]
    Primitive { name: Ident, message: String, span: Span },
    #[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n"))]
    Sanity(Vec<SanityViolation>),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

impl LoadError {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadError::DuplicateName { .. } => "DuplicateName",
            LoadError::ForwardReference { .. } => "ForwardReference",
            LoadError::Unresolved { .. } | LoadError::WrongKind { .. } => "ResolutionError",
            LoadError::ReservedName { .. } => "ReservedName",
            LoadError::Primitive { .. } => "PrimitiveError",
            LoadError::Sanity(_) => "SanityViolation",
            LoadError::Shape(_) => "ShapeError",
        }
    }
}

impl ProgramDB {
    /// Builds a table without running any checks. Used for normalized output
    /// and tests; [`load`] is the checked entry point.
    pub fn from_decls_unchecked(decls: Vec<Declaration>) -> ProgramDB {
        let index = decls.iter().enumerate().map(|(i, d)| (d.name().clone(), i)).collect();
        ProgramDB { decls, index, shapes: ShapeTable::default(), warnings: Vec::new() }
    }

    pub fn decls(&self) -> &[Declaration] {
        &self.decls
    }

    pub fn funs(&self) -> impl Iterator<Item = &FunDef> {
        self.decls.iter().filter_map(|d| match d {
            Declaration::Fun(f) => Some(f),
            _ => None,
        })
    }

    pub fn conses(&self) -> impl Iterator<Item = &ConsDecl> {
        self.decls.iter().filter_map(|d| match d {
            Declaration::Cons(c) => Some(c),
            _ => None,
        })
    }

    pub fn cons(&self, name: &Ident) -> Option<&ConsDecl> {
        match self.index.get(name).map(|&i| &self.decls[i]) {
            Some(Declaration::Cons(c)) => Some(c),
            _ => None,
        }
    }

    pub fn prim(&self, name: &Ident) -> Option<&PrimDecl> {
        match self.index.get(name).map(|&i| &self.decls[i]) {
            Some(Declaration::Prim(p)) => Some(p),
            _ => None,
        }
    }

    pub fn fun(&self, name: &Ident) -> Option<&FunDef> {
        match self.index.get(name).map(|&i| &self.decls[i]) {
            Some(Declaration::Fun(f)) => Some(f),
            _ => None,
        }
    }

    /// Shape of a primitive or a checked function definition.
    pub fn shape_of(&self, name: &Ident) -> Option<Shape> {
        self.prim(name)
            .map(|p| p.shape)
            .or_else(|| self.shapes.defs.get(name).copied())
    }

    pub fn shapes(&self) -> &ShapeTable {
        &self.shapes
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// The single function definition, or the one named `name`.
    pub fn select_fun(&self, name: Option<&str>) -> Option<&FunDef> {
        match name {
            Some(n) => self.fun(&Ident::new(n)),
            None => self.funs().last(),
        }
    }
}

/// Merges parsed units, resolves names and runs sanity and shape checks.
pub fn load(units: &[SourceUnit]) -> Result<ProgramDB, LoadError> {
    let mut decls = Vec::new();
    let mut index: BTreeMap<Ident, usize> = BTreeMap::new();
    for unit in units {
        for d in &unit.decls {
            if index.contains_key(d.name()) {
                return Err(LoadError::DuplicateName { name: d.name().clone(), span: d.span() });
            }
            index.insert(d.name().clone(), decls.len());
            decls.push(d.clone());
        }
    }

    let kinds: BTreeMap<Ident, (usize, Kind)> = decls
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let k = match d {
                Declaration::Cons(_) => Kind::Cons,
                Declaration::Prim(_) => Kind::Prim,
                Declaration::Fun(_) => Kind::Fun,
            };
            (d.name().clone(), (i, k))
        })
        .collect();

    let mut warnings = Vec::new();
    let mut has_comparison = false;
    for (pos, d) in decls.iter_mut().enumerate() {
        match d {
            Declaration::Prim(p) => {
                check_prim(p)?;
                has_comparison |= p.builtin.is_comparison();
            }
            Declaration::Fun(f) => {
                let mut r = Resolver { kinds: &kinds, pos, def: f.name.clone(), err: None, bot_literals: Vec::new() };
                r.abs(&mut f.abs);
                if let Some(e) = r.err {
                    return Err(e);
                }
                for span in r.bot_literals {
                    warnings.push(Warning {
                        span,
                        def: Some(f.name.clone()),
                        message: "undefined literal `_|_` in a program".into(),
                    });
                }
            }
            Declaration::Cons(_) => {}
        }
    }
    if has_comparison {
        for name in ["True", "False"] {
            match kinds.get(&Ident::new(name)) {
                Some((i, Kind::Cons)) if matches!(&decls[*i], Declaration::Cons(c) if c.arity == 0) => {}
                _ => {
                    return Err(LoadError::Unresolved {
                        name: Ident::new(name),
                        def: Ident::new("<comparison primitives>"),
                        span: Span::default(),
                    })
                }
            }
        }
    }

    let mut db = ProgramDB { decls, index, shapes: ShapeTable::default(), warnings: Vec::new() };

    let violations = check_sanity(&db);
    let (fatal, loose): (Vec<_>, Vec<_>) = violations.into_iter().partition(|v| v.kind.is_fatal());
    if !fatal.is_empty() {
        return Err(LoadError::Sanity(fatal));
    }
    for v in loose {
        warnings.push(Warning {
            span: v.span,
            def: v.def.clone(),
            message: format!("variable `{}` is never assigned (loose specification)", v.var),
        });
    }

    db.shapes = check_shape(&db)?;

    for d in &mut db.decls {
        if let Declaration::Fun(f) = d {
            let tag = classify_abs(&f.abs);
            if tag == FormTag::First {
                if let Some(name) = first_generated_name(&f.abs) {
                    return Err(LoadError::ReservedName { name, span: f.span });
                }
            }
            f.form = Some(tag);
        }
    }

    if db.funs().next().is_none() {
        warnings.push(Warning { span: Span::default(), def: None, message: "program has zero definitions".into() });
    }
    db.warnings = warnings;
    Ok(db)
}

fn check_prim(p: &PrimDecl) -> Result<(), LoadError> {
    let fail = |message: String| Err(LoadError::Primitive { name: p.name.clone(), message, span: p.span });
    if p.shape.state != 0 {
        return fail("primitives are stateless".into());
    }
    if p.shape.outs != 1 {
        return fail(format!("builtin `{}` has one output, declared {}", p.builtin.name(), p.shape.outs));
    }
    match p.builtin.arity() {
        Some(n) if n != p.shape.ins => fail(format!(
            "builtin `{}` takes {n} inputs, declared {}",
            p.builtin.name(),
            p.shape.ins
        )),
        _ => Ok(()),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Cons,
    Prim,
    Fun,
}

struct Resolver<'a> {
    kinds: &'a BTreeMap<Ident, (usize, Kind)>,
    pos: usize,
    def: Ident,
    err: Option<LoadError>,
    bot_literals: Vec<Span>,
}

impl Resolver<'_> {
    fn fail(&mut self, e: LoadError) {
        if self.err.is_none() {
            self.err = Some(e);
        }
    }

    fn abs(&mut self, a: &mut Abs) {
        match a {
            Abs::Lambda(r) => self.rules(r),
            Abs::Box(b) => self.form(&mut b.body),
        }
    }

    fn form(&mut self, f: &mut Form) {
        match &mut f.kind {
            FormKind::And(l, r) | FormKind::Or(l, r) => {
                self.form(l);
                self.form(r);
            }
            FormKind::Exists(_, b) => self.form(b),
            FormKind::Assign { rhs, .. } => self.expr(rhs),
            _ => {}
        }
    }

    fn rules(&mut self, r: &mut RuleTree) {
        match r {
            RuleTree::Match { pat, body, .. } => {
                self.pat(pat);
                self.expr(body);
            }
            RuleTree::Choice(l, r) => {
                self.rules(l);
                self.rules(r);
            }
        }
    }

    fn pat(&mut self, p: &mut Pat) {
        match &mut p.kind {
            PatKind::Unit | PatKind::Var(_) => {}
            PatKind::Comma(l, r) => {
                self.pat(l);
                self.pat(r);
            }
            PatKind::Cons(c, arg) => {
                self.expect_cons(c, p.span);
                self.pat(arg);
            }
        }
    }

    fn expect_cons(&mut self, c: &Ident, span: Span) {
        match self.kinds.get(c) {
            Some((_, Kind::Cons)) => {}
            Some(_) => self.fail(LoadError::WrongKind { name: c.clone(), expected: "constructor", span }),
            None => self.fail(LoadError::Unresolved { name: c.clone(), def: self.def.clone(), span }),
        }
    }

    fn expr(&mut self, e: &mut Expr) {
        let span = e.span;
        match &mut e.kind {
            ExprKind::Unit | ExprKind::Var(_) => {}
            ExprKind::Lit(v) => {
                if *v == Value::Bot {
                    self.bot_literals.push(span);
                }
            }
            ExprKind::Comma(l, r) => {
                self.expr(l);
                self.expr(r);
            }
            ExprKind::Apply { op, arg, .. } => {
                match op {
                    OpRef::Fun(name) | OpRef::Cons(name) => match self.kinds.get(name) {
                        Some((_, Kind::Cons)) => *op = OpRef::Cons(name.clone()),
                        Some((_, Kind::Prim)) => *op = OpRef::Fun(name.clone()),
                        Some((i, Kind::Fun)) if *i < self.pos => *op = OpRef::Fun(name.clone()),
                        Some((_, Kind::Fun)) => self.fail(LoadError::ForwardReference {
                            name: name.clone(),
                            def: self.def.clone(),
                            span,
                        }),
                        None => self.fail(LoadError::Unresolved { name: name.clone(), def: self.def.clone(), span }),
                    },
                    OpRef::ConsInv(c) => {
                        let c = c.clone();
                        self.expect_cons(&c, span);
                    }
                    OpRef::Delta(init) => {
                        if init.iter().any(Value::is_bot) {
                            self.bot_literals.push(span);
                        }
                    }
                    OpRef::Gamma | OpRef::Phi => {}
                }
                self.expr(arg);
            }
            ExprKind::Let { bound, body, .. } => {
                self.expr(bound);
                self.expr(body);
            }
            ExprKind::Case { scrutinee, rules } => {
                self.expr(scrutinee);
                self.rules(rules);
            }
        }
    }
}

fn first_generated_name(abs: &Abs) -> Option<Ident> {
    let mut found = None;
    let mut note = |v: &Ident| {
        if found.is_none() && v.is_generated() {
            found = Some(v.clone());
        }
    };
    match abs {
        Abs::Lambda(r) => {
            for (p, body) in r.matches() {
                p.vars().into_iter().for_each(&mut note);
                expr_vars(body, &mut note);
            }
        }
        Abs::Box(b) => {
            b.face.all_vars().for_each(&mut note);
            b.body.walk(&mut |f| match &f.kind {
                FormKind::Exists(vs, _) => vs.iter().for_each(&mut note),
                FormKind::Assign { targets, post_state, rhs } => {
                    targets.iter().chain(post_state).for_each(&mut note);
                    expr_vars(rhs, &mut note);
                }
                FormKind::IsBot(v) | FormKind::IsNotBot(v) => note(v),
                _ => {}
            });
        }
    }
    found
}

fn expr_vars(e: &Expr, note: &mut dyn FnMut(&Ident)) {
    e.walk(&mut |sub| match &sub.kind {
        ExprKind::Var(v) => note(v),
        ExprKind::Let { binder, .. } => binder.iter().for_each(&mut *note),
        ExprKind::Apply { state, .. } => state.iter().for_each(&mut *note),
        ExprKind::Case { rules, .. } => {
            for (p, _) in rules.matches() {
                p.vars().into_iter().for_each(&mut *note);
            }
        }
        _ => {}
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse;

    fn load_src(srcs: &[&str]) -> Result<ProgramDB, LoadError> {
        let units: Vec<_> = srcs.iter().map(|s| parse(s).unwrap()).collect();
        load(&units)
    }

    #[test]
    fn duplicate_across_units() {
        let e = load_src(&["fun f = \\( x -> x )", "fun f = \\( y -> y )"]).unwrap_err();
        assert_eq!(e.kind(), "DuplicateName");
    }

    #[test]
    fn forward_reference_rejected() {
        let e = load_src(&["fun a = \\( x -> b(x) ) fun b = \\( y -> y )"]).unwrap_err();
        assert_eq!(e.kind(), "ForwardReference");
    }

    #[test]
    fn self_reference_is_forward() {
        let e = load_src(&["fun a = \\( x -> a(x) )"]).unwrap_err();
        assert_eq!(e.kind(), "ForwardReference");
    }

    #[test]
    fn constructors_resolve_across_units() {
        let db = load_src(&["fun f = [ y where y := S() ]", "cons S/0"]);
        // Declaration order matters only for functions.
        assert!(db.is_ok());
    }

    #[test]
    fn reserved_prefix_rejected_in_source() {
        let e = load_src(&["fun f = \\( %x -> %x )"]).unwrap_err();
        assert_eq!(e.kind(), "ReservedName");
    }

    #[test]
    fn comparison_needs_booleans() {
        let e = load_src(&["prim lt 2 -> 1"]).unwrap_err();
        assert_eq!(e.kind(), "ResolutionError");
        assert!(load_src(&["cons True/0 cons False/0 prim lt 2 -> 1"]).is_ok());
    }

    #[test]
    fn builtin_arity_checked() {
        let e = load_src(&["prim add 3 -> 1"]).unwrap_err();
        assert_eq!(e.kind(), "PrimitiveError");
    }

    #[test]
    fn shapes_of_functions_are_recorded() {
        let db = load_src(&["prim add 2 -> 1 fun f = \\( a, b -> add(a, delta(b)) )"]).unwrap();
        assert_eq!(db.shape_of(&Ident::new("f")), Some(Shape::new(1, 2, 1)));
    }

    #[test]
    fn empty_program_warns() {
        let db = load_src(&[""]).unwrap();
        assert_eq!(db.warnings().len(), 1);
    }
}
