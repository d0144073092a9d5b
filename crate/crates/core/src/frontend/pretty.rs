//! Pretty printer producing canonical concrete syntax that parses back to
//! the same tree.

use crate::ast::{
    Abs, ConsDecl, Declaration, Expr, ExprKind, Face, Form, FormKind, FunDef, Ident, OpRef, Pat,
    PatKind, PrimDecl, RuleTree,
};
use crate::relsem::Value;

pub fn print_program(decls: &[Declaration]) -> String {
    let mut out = String::new();
    for d in decls {
        out.push_str(&print_decl(d));
        out.push('\n');
    }
    out
}

pub fn print_decl(d: &Declaration) -> String {
    match d {
        Declaration::Cons(ConsDecl { name, arity, .. }) => format!("cons {name}/{arity}"),
        Declaration::Prim(p) => print_prim(p),
        Declaration::Fun(FunDef { name, abs, .. }) => format!("fun {name} = {}", print_abs(abs)),
    }
}

fn print_prim(p: &PrimDecl) -> String {
    let mut s = format!("prim {} {}", p.name, p.shape);
    if p.explicit_binding || p.builtin.name() != p.name.as_str() {
        s.push_str(" = ");
        s.push_str(p.builtin.name());
        if let crate::ast::Builtin::Linear(cs) = &p.builtin {
            let parts: Vec<String> = cs.iter().map(|c| Value::Num(*c).to_string()).collect();
            s.push_str(&format!("({})", parts.join(", ")));
        }
    }
    s
}

pub fn print_abs(a: &Abs) -> String {
    match a {
        Abs::Lambda(r) => format!("\\( {} )", print_rules(r)),
        Abs::Box(b) => format!("[ {} where {} ]", print_face(&b.face), print_form(&b.body)),
    }
}

fn var_list(vs: &[Ident]) -> String {
    if vs.is_empty() {
        "()".to_string()
    } else {
        vs.iter().map(Ident::to_string).collect::<Vec<_>>().join(", ")
    }
}

pub fn print_face(face: &Face) -> String {
    let outs = var_list(&face.outputs);
    if face.has_state() {
        let pre: Vec<String> = face
            .pre_state
            .iter()
            .enumerate()
            .map(|(i, v)| match face.init_value(i) {
                Some(init) => format!("{v}[{}]", print_value(init)),
                None => v.to_string(),
            })
            .collect();
        let pre = if pre.is_empty() { "()".to_string() } else { pre.join(", ") };
        let post = var_list(&face.post_state);
        if face.inputs.is_empty() {
            format!("{pre} / {outs} / {post}")
        } else {
            format!("{pre} / {} -> {outs} / {post}", var_list(&face.inputs))
        }
    } else if face.inputs.is_empty() {
        outs
    } else {
        format!("{} -> {outs}", var_list(&face.inputs))
    }
}

pub fn print_value(v: &Value) -> String {
    v.to_string()
}

pub fn print_rules(r: &RuleTree) -> String {
    match r {
        RuleTree::Match { pat, body, .. } => format!("{} -> {}", print_pat(pat), print_expr(body)),
        RuleTree::Choice(l, rr) => {
            let right = match **rr {
                RuleTree::Choice(..) => format!("{{ {} }}", print_rules(rr)),
                _ => print_rules(rr),
            };
            format!("{} | {right}", print_rules(l))
        }
    }
}

pub fn print_pat(p: &Pat) -> String {
    match &p.kind {
        PatKind::Unit => "()".into(),
        PatKind::Var(v) => v.to_string(),
        PatKind::Cons(c, arg) => match arg.kind {
            PatKind::Unit => format!("{c}()"),
            _ => format!("{c}({})", print_pat(arg)),
        },
        PatKind::Comma(l, r) => {
            let left = match l.kind {
                PatKind::Comma(..) => format!("({})", print_pat(l)),
                _ => print_pat(l),
            };
            format!("{left}, {}", print_pat(r))
        }
    }
}

fn call(name: &str, state: &[Ident], arg: &Expr) -> String {
    let inner = match arg.kind {
        ExprKind::Unit => String::new(),
        _ => print_expr(arg),
    };
    if state.is_empty() {
        format!("{name}({inner})")
    } else {
        format!("{name}({} / {inner})", var_list(state))
    }
}

pub fn print_op(op: &OpRef) -> String {
    match op {
        OpRef::Fun(f) | OpRef::Cons(f) => f.to_string(),
        OpRef::ConsInv(c) => format!("~{c}"),
        OpRef::Delta(init) if init.is_empty() => "delta".into(),
        OpRef::Delta(init) => {
            let parts: Vec<String> = init.iter().map(print_value).collect();
            format!("delta[{}]", parts.join(", "))
        }
        OpRef::Gamma => "gamma".into(),
        OpRef::Phi => "phi".into(),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Unit => "()".into(),
        ExprKind::Var(v) => v.to_string(),
        ExprKind::Lit(v) => print_value(v),
        ExprKind::Apply { op, state, arg } => call(&print_op(op), state, arg),
        ExprKind::Comma(l, r) => {
            let left = match l.kind {
                ExprKind::Comma(..) | ExprKind::Let { .. } => format!("({})", print_expr(l)),
                _ => print_expr(l),
            };
            format!("{left}, {}", print_expr(r))
        }
        ExprKind::Let { binder, bound, body } => {
            format!("let {} := {} in {}", var_list(binder), print_expr(bound), print_expr(body))
        }
        ExprKind::Case { scrutinee, rules } => {
            format!("case {} of {{ {} }}", print_expr(scrutinee), print_rules(rules))
        }
    }
}

fn targets(targets: &[Ident], post: &[Ident]) -> String {
    if post.is_empty() {
        var_list(targets)
    } else {
        format!("{} / {}", var_list(targets), var_list(post))
    }
}

pub fn print_form(f: &Form) -> String {
    form_prec(f, 0)
}

/// Precedence levels: 0 = or, 1 = and, 2 = atom.
fn form_prec(f: &Form, ctx: u8) -> String {
    let (s, level) = match &f.kind {
        FormKind::Top => ("true".to_string(), 2),
        FormKind::Bot => ("false".to_string(), 2),
        FormKind::IsBot(v) => (format!("{v} = _|_"), 2),
        FormKind::IsNotBot(v) => (format!("{v} != _|_"), 2),
        FormKind::Assign { targets: t, post_state, rhs } => {
            (format!("{} := {}", targets(t, post_state), print_expr(rhs)), 2)
        }
        FormKind::Exists(vs, body) => (format!("exists {} ({})", var_list(vs), form_prec(body, 0)), 2),
        FormKind::And(l, r) => (format!("{} and {}", form_prec(l, 1), form_prec(r, 2)), 1),
        FormKind::Or(l, r) => (format!("{} or {}", form_prec(l, 0), form_prec(r, 1)), 0),
    };
    if level < ctx {
        format!("({s})")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::{parse, parse_expr};

    fn roundtrip(src: &str) {
        let unit = parse(src).unwrap();
        let printed = print_program(&unit.decls);
        let again = parse(&printed).unwrap();
        assert_eq!(unit.decls, again.decls, "printed:\n{printed}");
    }

    #[test]
    fn programs_roundtrip() {
        roundtrip("cons S/0 cons H/0 fun sah = [ x, t -> y where y := case t of { S() -> x | H() -> delta(y) } ]");
        roundtrip("prim add 2 -> 1 prim ar 4 -> 1 = lin(0.4, 0.3, 0.2, -0.1) fun f = \\( a, b -> add(a, b) )");
        roundtrip("fun g = [ s[1] / x -> y / s' where exists u (u := x and y, s' := u, s) or y = _|_ ]");
        roundtrip("fun h = \\( x -> x | { y -> y | z -> z } )");
        roundtrip("fun k = [ () where () := () ]");
    }

    #[test]
    fn nested_comma_and_let_are_parenthesized() {
        for src in ["(a, b), c", "(let v := x in v), y", "a, (b, c)"] {
            let e = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&print_expr(&e)).unwrap(), e);
        }
    }

    #[test]
    fn conjunction_of_disjunctions_keeps_grouping() {
        let src = "fun f = [ x -> y where (y := x or x = _|_) and (a := x or b := x) and c := x ]";
        roundtrip(src);
        let unit = parse(src).unwrap();
        let printed = print_program(&unit.decls);
        assert!(printed.contains("(y := x or x = _|_) and (a := x or b := x) and c := x"));
    }
}
