//! Recursive-descent parser producing spanned syntax trees.

use std::collections::BTreeSet;

use super::lexer::{tokenize, Kw, Tok, Token};
use crate::ast::{
    Abs, Builtin, BoxAbs, ConsDecl, Declaration, Expr, ExprKind, Face, Form, FormKind, FunDef,
    Ident, OpRef, Pat, PatKind, PrimDecl, RuleTree, Shape, Span, Vars,
};
use crate::relsem::Value;

/// A parsed source file.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceUnit {
    pub path: String,
    pub content: String,
    pub decls: Vec<Declaration>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{path}{line}:{col}: expected {expected}, found {found}")]
pub struct ParseError {
    pub path: String,
    pub line: u32,
    pub col: u32,
    pub expected: String,
    pub found: String,
}

/// Parses a whole source file.
pub fn parse(source: &str) -> Result<SourceUnit, ParseError> {
    parse_named("", source)
}

pub fn parse_named(path: &str, source: &str) -> Result<SourceUnit, ParseError> {
    let prefix = if path.is_empty() { String::new() } else { format!("{path}:") };
    let tokens = tokenize(source).map_err(|e| ParseError {
        path: prefix.clone(),
        line: e.line,
        col: e.col,
        expected: "a token".into(),
        found: e.message,
    })?;
    let mut p = Parser { toks: tokens, pos: 0, conses: BTreeSet::new() };
    let decls = p.program().map_err(|mut e| {
        e.path = prefix.clone();
        e
    })?;
    Ok(SourceUnit { path: path.to_string(), content: source.to_string(), decls })
}

/// Parses a single expression (used by tests and tools).
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source).map_err(|e| ParseError {
        path: String::new(),
        line: e.line,
        col: e.col,
        expected: "a token".into(),
        found: e.message,
    })?;
    let mut p = Parser { toks: tokens, pos: 0, conses: BTreeSet::new() };
    let e = p.expr()?;
    p.expect(&Tok::Eof, "end of input")?;
    Ok(e)
}

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Constructors declared so far in this unit; applications of these
    /// names become constructor applications directly.
    conses: BTreeSet<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, expected: &str) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            path: String::new(),
            line: t.span.line,
            col: t.span.col,
            expected: expected.to_string(),
            found: t.tok.to_string(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> PResult<Span> {
        if self.peek() == t {
            Ok(self.bump().span)
        } else {
            self.err(what)
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(Ident, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().span;
                Ok((Ident::new(&s), sp))
            }
            _ => self.err(what),
        }
    }

    fn nat(&mut self, what: &str) -> PResult<usize> {
        match *self.peek() {
            Tok::Num(n) if n >= 0.0 && n.fract() == 0.0 => {
                self.bump();
                Ok(n as usize)
            }
            _ => self.err(what),
        }
    }

    fn join(a: Span, b: Span) -> Span {
        Span { start: a.start, end: b.end.max(a.end), line: a.line, col: a.col }
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn program(&mut self) -> PResult<Vec<Declaration>> {
        let mut decls = Vec::new();
        while *self.peek() != Tok::Eof {
            decls.push(self.decl()?);
        }
        Ok(decls)
    }

    fn decl(&mut self) -> PResult<Declaration> {
        let start = self.span();
        match self.peek() {
            Tok::Kw(Kw::Cons) => {
                self.bump();
                let (name, _) = self.ident("constructor name")?;
                self.expect(&Tok::Slash, "`/` and arity")?;
                let arity = self.nat("constructor arity")?;
                self.conses.insert(name.as_str().to_string());
                Ok(Declaration::Cons(ConsDecl { name, arity, span: Self::join(start, self.prev_span()) }))
            }
            Tok::Kw(Kw::Prim) => {
                self.bump();
                let (name, _) = self.ident("primitive name")?;
                let shape = self.shape()?;
                let (builtin, explicit_binding) = if self.eat(&Tok::Eq) {
                    let (bname, bspan) = self.ident("builtin name")?;
                    let mut params = Vec::new();
                    if self.eat(&Tok::LParen) {
                        if *self.peek() != Tok::RParen {
                            loop {
                                match *self.peek() {
                                    Tok::Num(n) => {
                                        self.bump();
                                        params.push(n);
                                    }
                                    _ => return self.err("numeric builtin parameter"),
                                }
                                if !self.eat(&Tok::Comma) {
                                    break;
                                }
                            }
                        }
                        self.expect(&Tok::RParen, "`)`")?;
                    }
                    match Builtin::by_name(bname.as_str(), &params) {
                        Some(b) => (b, true),
                        None => {
                            return Err(ParseError {
                                path: String::new(),
                                line: bspan.line,
                                col: bspan.col,
                                expected: "a known builtin".into(),
                                found: format!("`{bname}`"),
                            })
                        }
                    }
                } else {
                    match Builtin::by_name(name.as_str(), &[]) {
                        Some(b) => (b, false),
                        None => return self.err("`=` and a builtin binding (no builtin has this name)"),
                    }
                };
                Ok(Declaration::Prim(PrimDecl {
                    name,
                    shape,
                    builtin,
                    explicit_binding,
                    span: Self::join(start, self.prev_span()),
                }))
            }
            Tok::Kw(Kw::Fun) => {
                self.bump();
                let (name, _) = self.ident("function name")?;
                self.expect(&Tok::Eq, "`=`")?;
                let abs = self.abs()?;
                Ok(Declaration::Fun(FunDef { name, abs, form: None, span: Self::join(start, self.prev_span()) }))
            }
            _ => self.err("`cons`, `prim` or `fun`"),
        }
    }

    fn shape(&mut self) -> PResult<Shape> {
        let a = self.nat("arity")?;
        if self.eat(&Tok::Slash) {
            let ins = self.nat("input arity")?;
            self.expect(&Tok::Arrow, "`->`")?;
            let outs = self.nat("output arity")?;
            self.expect(&Tok::Slash, "`/`")?;
            let k = self.nat("state arity")?;
            if k != a {
                return self.err(&format!("state arity {a}"));
            }
            Ok(Shape::new(a, ins, outs))
        } else {
            self.expect(&Tok::Arrow, "`->`")?;
            let outs = self.nat("output arity")?;
            Ok(Shape::stateless(a, outs))
        }
    }

    fn abs(&mut self) -> PResult<Abs> {
        match self.peek() {
            Tok::Backslash => {
                self.bump();
                self.expect(&Tok::LParen, "`(`")?;
                let r = self.rules()?;
                self.expect(&Tok::RParen, "`)` or `|`")?;
                Ok(Abs::Lambda(r))
            }
            Tok::LBrack => {
                self.bump();
                let face = self.face()?;
                self.expect(&Tok::Kw(Kw::Where), "`where`")?;
                let body = self.form()?;
                self.expect(&Tok::RBrack, "`]`")?;
                Ok(Abs::Box(BoxAbs { face, body }))
            }
            _ => self.err("`\\(` or `[`"),
        }
    }

    /// A face variable list, with optional `[value]` initializers.
    fn face_vars(&mut self) -> PResult<(Vars, Vec<Option<Value>>)> {
        if *self.peek() == Tok::LParen && *self.peek_at(1) == Tok::RParen {
            self.bump();
            self.bump();
            return Ok((Vec::new(), Vec::new()));
        }
        let mut vs = Vec::new();
        let mut inits = Vec::new();
        loop {
            let (v, _) = self.ident("variable")?;
            vs.push(v);
            if self.eat(&Tok::LBrack) {
                inits.push(Some(self.value()?));
                self.expect(&Tok::RBrack, "`]`")?;
            } else {
                inits.push(None);
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok((vs, inits))
    }

    fn face(&mut self) -> PResult<Face> {
        let start = self.span();
        let (first, first_init) = self.face_vars()?;
        let no_init = |this: &Self, inits: &[Option<Value>]| -> PResult<()> {
            if inits.iter().any(Option::is_some) {
                Err(ParseError {
                    path: String::new(),
                    line: start.line,
                    col: start.col,
                    expected: "initializers only on pre-state variables".into(),
                    found: "an initializer".into(),
                })
            } else {
                let _ = this;
                Ok(())
            }
        };
        if self.eat(&Tok::Slash) {
            let (second, i2) = self.face_vars()?;
            no_init(self, &i2)?;
            let (inputs, outputs) = if self.eat(&Tok::Arrow) {
                let (outs, i3) = self.face_vars()?;
                no_init(self, &i3)?;
                (second, outs)
            } else {
                (Vec::new(), second)
            };
            self.expect(&Tok::Slash, "`/` and post-state")?;
            let (post, i4) = self.face_vars()?;
            no_init(self, &i4)?;
            Ok(Face { pre_state: first, inputs, outputs, post_state: post, init: first_init, explicit_state: true })
        } else if self.eat(&Tok::Arrow) {
            no_init(self, &first_init)?;
            let (outs, i2) = self.face_vars()?;
            no_init(self, &i2)?;
            Ok(Face::io(first, outs))
        } else {
            no_init(self, &first_init)?;
            Ok(Face::io(Vec::new(), first))
        }
    }

    fn value(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Value::Num(n))
            }
            Tok::Bottom => {
                self.bump();
                Ok(Value::Bot)
            }
            Tok::Ident(name) => {
                self.bump();
                self.expect(&Tok::LParen, "`(` after constructor")?;
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.value()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Value::cons(&name, args))
            }
            _ => self.err("a value"),
        }
    }

    fn rules(&mut self) -> PResult<RuleTree> {
        let mut items = vec![self.rule()?];
        while self.eat(&Tok::Bar) {
            items.push(self.rule()?);
        }
        Ok(RuleTree::choice(items))
    }

    fn rule(&mut self) -> PResult<RuleTree> {
        if self.eat(&Tok::LBrace) {
            let r = self.rules()?;
            self.expect(&Tok::RBrace, "`}`")?;
            return Ok(r);
        }
        let start = self.span();
        let pat = self.pat()?;
        self.expect(&Tok::Arrow, "`->`")?;
        let body = self.expr()?;
        Ok(RuleTree::Match { pat, body, span: Self::join(start, self.prev_span()) })
    }

    fn pat(&mut self) -> PResult<Pat> {
        let start = self.span();
        let left = self.pat_atom()?;
        if self.eat(&Tok::Comma) {
            let right = self.pat()?;
            return Ok(Pat {
                kind: PatKind::Comma(Box::new(left), Box::new(right)),
                span: Self::join(start, self.prev_span()),
            });
        }
        Ok(left)
    }

    fn pat_atom(&mut self) -> PResult<Pat> {
        let start = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Pat { kind: PatKind::Unit, span: Self::join(start, self.prev_span()) });
                }
                let p = self.pat()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(p)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let arg = if *self.peek() == Tok::RParen {
                        Pat { kind: PatKind::Unit, span: self.span() }
                    } else {
                        self.pat()?
                    };
                    self.expect(&Tok::RParen, "`)`")?;
                    Ok(Pat {
                        kind: PatKind::Cons(Ident::new(&name), Box::new(arg)),
                        span: Self::join(start, self.prev_span()),
                    })
                } else {
                    Ok(Pat { kind: PatKind::Var(Ident::new(&name)), span: start })
                }
            }
            _ => self.err("a pattern"),
        }
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        let left = self.expr_atom()?;
        if self.eat(&Tok::Comma) {
            let right = self.expr()?;
            return Ok(Expr::new(
                ExprKind::Comma(Box::new(left), Box::new(right)),
                Self::join(start, self.prev_span()),
            ));
        }
        Ok(left)
    }

    /// `(vars /` lookahead for explicit-state call arguments.
    fn state_prefix_len(&self) -> Option<usize> {
        if *self.peek() == Tok::LParen && *self.peek_at(1) == Tok::RParen && *self.peek_at(2) == Tok::Slash {
            return Some(3);
        }
        let mut k = 0;
        loop {
            match self.peek_at(k) {
                Tok::Ident(_) => k += 1,
                _ => return None,
            }
            match self.peek_at(k) {
                Tok::Comma => k += 1,
                Tok::Slash => return Some(k + 1),
                _ => return None,
            }
        }
    }

    fn call_args(&mut self) -> PResult<(Vars, Expr)> {
        self.expect(&Tok::LParen, "`(`")?;
        let mut state = Vec::new();
        if self.state_prefix_len().is_some() {
            if *self.peek() == Tok::LParen {
                self.bump();
                self.bump();
            } else {
                loop {
                    state.push(self.ident("state variable")?.0);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(&Tok::Slash, "`/`")?;
        }
        let arg = if *self.peek() == Tok::RParen {
            Expr::new(ExprKind::Unit, self.span())
        } else {
            self.expr()?
        };
        self.expect(&Tok::RParen, "`)`")?;
        Ok((state, arg))
    }

    fn expr_atom(&mut self) -> PResult<Expr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    ExprKind::Unit
                } else {
                    let e = self.expr()?;
                    self.expect(&Tok::RParen, "`)`")?;
                    return Ok(e);
                }
            }
            Tok::Num(n) => {
                self.bump();
                ExprKind::Lit(Value::Num(n))
            }
            Tok::Bottom => {
                self.bump();
                ExprKind::Lit(Value::Bot)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let (state, arg) = self.call_args()?;
                    let id = Ident::new(&name);
                    let op = if self.conses.contains(&name) { OpRef::Cons(id) } else { OpRef::Fun(id) };
                    ExprKind::Apply { op, state, arg: Box::new(arg) }
                } else {
                    ExprKind::Var(Ident::new(&name))
                }
            }
            Tok::Tilde => {
                self.bump();
                let (name, _) = self.ident("constructor name after `~`")?;
                let (state, arg) = self.call_args()?;
                if !state.is_empty() {
                    return self.err("no state arguments for an inverse constructor");
                }
                ExprKind::Apply { op: OpRef::ConsInv(name), state, arg: Box::new(arg) }
            }
            Tok::Kw(k @ (Kw::Delta | Kw::Gamma | Kw::Phi)) => {
                self.bump();
                let op = match k {
                    Kw::Delta => {
                        let mut init = Vec::new();
                        if self.eat(&Tok::LBrack) {
                            loop {
                                init.push(self.value()?);
                                if !self.eat(&Tok::Comma) {
                                    break;
                                }
                            }
                            self.expect(&Tok::RBrack, "`]`")?;
                        }
                        OpRef::Delta(init)
                    }
                    Kw::Gamma => OpRef::Gamma,
                    _ => OpRef::Phi,
                };
                let (state, arg) = self.call_args()?;
                if !state.is_empty() {
                    return self.err("no state arguments for a builtin operator");
                }
                ExprKind::Apply { op, state, arg: Box::new(arg) }
            }
            Tok::Kw(Kw::Let) => {
                self.bump();
                let binder = self.target_vars()?;
                self.expect(&Tok::Assign, "`:=`")?;
                let bound = self.expr()?;
                self.expect(&Tok::Kw(Kw::In), "`in`")?;
                let body = self.expr()?;
                ExprKind::Let { binder, bound: Box::new(bound), body: Box::new(body) }
            }
            Tok::Kw(Kw::Case) => {
                self.bump();
                let scrutinee = self.expr()?;
                self.expect(&Tok::Kw(Kw::Of), "`of`")?;
                self.expect(&Tok::LBrace, "`{`")?;
                let rules = self.rules()?;
                self.expect(&Tok::RBrace, "`}` or `|`")?;
                ExprKind::Case { scrutinee: Box::new(scrutinee), rules: Box::new(rules) }
            }
            _ => return self.err("an expression"),
        };
        Ok(Expr::new(kind, Self::join(start, self.prev_span())))
    }

    /// Assignment or `let` targets: `()` or `v1, ..., vn`.
    fn target_vars(&mut self) -> PResult<Vars> {
        if *self.peek() == Tok::LParen && *self.peek_at(1) == Tok::RParen {
            self.bump();
            self.bump();
            return Ok(Vec::new());
        }
        let mut vs = Vec::new();
        loop {
            vs.push(self.ident("variable")?.0);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(vs)
    }

    fn form(&mut self) -> PResult<Form> {
        let start = self.span();
        let mut f = self.conj()?;
        while self.eat(&Tok::Kw(Kw::Or)) {
            let r = self.conj()?;
            f = Form { kind: FormKind::Or(Box::new(f), Box::new(r)), span: Self::join(start, self.prev_span()) };
        }
        Ok(f)
    }

    fn conj(&mut self) -> PResult<Form> {
        let start = self.span();
        let mut f = self.form_atom()?;
        while self.eat(&Tok::Kw(Kw::And)) {
            let r = self.form_atom()?;
            f = Form { kind: FormKind::And(Box::new(f), Box::new(r)), span: Self::join(start, self.prev_span()) };
        }
        Ok(f)
    }

    fn form_atom(&mut self) -> PResult<Form> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Kw(Kw::True) => {
                self.bump();
                FormKind::Top
            }
            Tok::Kw(Kw::False) => {
                self.bump();
                FormKind::Bot
            }
            Tok::Kw(Kw::Exists) => {
                self.bump();
                let mut vs = Vec::new();
                loop {
                    vs.push(self.ident("bound variable")?.0);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::LParen, "`(`")?;
                let body = self.form()?;
                self.expect(&Tok::RParen, "`)`")?;
                FormKind::Exists(vs, Box::new(body))
            }
            Tok::LParen if *self.peek_at(1) != Tok::RParen => {
                self.bump();
                let f = self.form()?;
                self.expect(&Tok::RParen, "`)`")?;
                return Ok(f);
            }
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Eq | Tok::Neq) => {
                let (v, _) = self.ident("variable")?;
                let is_eq = self.bump().tok == Tok::Eq;
                self.expect(&Tok::Bottom, "`_|_`")?;
                if is_eq {
                    FormKind::IsBot(v)
                } else {
                    FormKind::IsNotBot(v)
                }
            }
            Tok::Ident(_) | Tok::LParen => {
                let targets = self.target_vars()?;
                let post_state = if self.eat(&Tok::Slash) { self.target_vars()? } else { Vec::new() };
                self.expect(&Tok::Assign, "`:=`")?;
                let rhs = self.expr()?;
                FormKind::Assign { targets, post_state, rhs }
            }
            _ => return self.err("a formula"),
        };
        Ok(Form { kind, span: Self::join(start, self.prev_span()) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::vars;

    fn fun_abs(src: &str) -> Abs {
        let unit = parse(src).unwrap();
        match unit.decls.into_iter().last().unwrap() {
            Declaration::Fun(f) => f.abs,
            d => panic!("not a function: {d:?}"),
        }
    }

    #[test]
    fn identity_lambda() {
        let abs = fun_abs("fun id = \\( x -> x )");
        let x = Ident::new("x");
        assert_eq!(abs, Abs::Lambda(RuleTree::rule(Pat::var("x"), Expr::var(&x))));
    }

    #[test]
    fn truncated_lambda_fails_at_end_of_input() {
        let err = parse("fun f = \\( x -> ").unwrap_err();
        assert_eq!(err.found, "end of input");
        assert_eq!((err.line, err.col), (1, 17));
    }

    #[test]
    fn stateful_face_and_call() {
        let abs = fun_abs("fun f = [ s[0] / x -> y / s' where y / s' := g(s / x) ]");
        match abs {
            Abs::Box(b) => {
                assert_eq!(b.face.pre_state, vars(&["s"]));
                assert_eq!(b.face.init, vec![Some(Value::num(0))]);
                assert_eq!(b.face.post_state, vars(&["s'"]));
                match b.body.kind {
                    FormKind::Assign { post_state, rhs, .. } => {
                        assert_eq!(post_state, vars(&["s'"]));
                        assert!(matches!(rhs.kind, ExprKind::Apply { ref state, .. } if state == &vars(&["s"])));
                    }
                    k => panic!("{k:?}"),
                }
            }
            _ => panic!("expected box"),
        }
    }

    #[test]
    fn declared_constructor_is_resolved_in_unit() {
        let abs = fun_abs("cons S/0 fun f = [ y where y := S() ]");
        match abs {
            Abs::Box(b) => match b.body.kind {
                FormKind::Assign { rhs, .. } => {
                    assert!(matches!(rhs.kind, ExprKind::Apply { op: OpRef::Cons(_), .. }))
                }
                k => panic!("{k:?}"),
            },
            _ => panic!("expected box"),
        }
    }

    #[test]
    fn output_only_face() {
        let abs = fun_abs("fun c = [ y where y := 1 ]");
        match abs {
            Abs::Box(b) => assert_eq!(b.face, Face::io(Vec::new(), vars(&["y"]))),
            _ => panic!(),
        }
    }

    #[test]
    fn bot_tests_and_disjunction() {
        let abs = fun_abs("fun f = [ x -> y where (y := x or x = _|_) and y != _|_ ]");
        match abs {
            Abs::Box(b) => assert!(matches!(b.body.kind, FormKind::And(..))),
            _ => panic!(),
        }
    }

    #[test]
    fn comma_is_right_nested() {
        let e = parse_expr("a, b, c").unwrap();
        match e.kind {
            ExprKind::Comma(_, r) => assert!(matches!(r.kind, ExprKind::Comma(..))),
            _ => panic!(),
        }
    }
}
