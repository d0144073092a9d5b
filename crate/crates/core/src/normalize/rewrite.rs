//! Bottom-up rewriting from first to second form.

use std::collections::BTreeSet;

use crate::ast::{
    Abs, BoxAbs, Expr, ExprKind, Face, Form, FormKind, Ident, OpRef, Pat, PatKind, RuleTree,
    Shape, Span, Vars,
};
use crate::relsem::Value;

/// Generates the reserved `%n` names.
#[derive(Clone, Debug)]
pub struct FreshSupply {
    counter: usize,
    prefix: String,
}

impl Default for FreshSupply {
    fn default() -> Self {
        FreshSupply { counter: 0, prefix: "%".into() }
    }
}

impl FreshSupply {
    pub fn new() -> FreshSupply {
        FreshSupply::default()
    }

    pub fn fresh(&mut self) -> Ident {
        self.counter += 1;
        Ident::new(&format!("{}{}", self.prefix, self.counter))
    }

    pub fn fresh_n(&mut self, n: usize) -> Vars {
        (0..n).map(|_| self.fresh()).collect()
    }

    pub fn issued(&self) -> usize {
        self.counter
    }
}

/// The result of rewriting a fragment: a formula together with the
/// variables it contributes, sorted by role.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Judgement {
    pub form: Form,
    pub pre_state: Vars,
    pub inputs: Vars,
    pub outputs: Vars,
    pub post_state: Vars,
    /// Control outputs of a pattern.
    pub controls: Vars,
    /// Initial values parallel to `pre_state`.
    pub init: Vec<Option<Value>>,
}

impl Judgement {
    fn of(form: Form) -> Judgement {
        Judgement { form, ..Judgement::default() }
    }
}

/// What the rewriter needs to know about referenced operations.
pub trait CalleeInfo {
    fn shape(&self, name: &Ident) -> Option<Shape>;
    fn cons_arity(&self, name: &Ident) -> Option<usize>;
    /// Initial values of a stateful function's state vector.
    fn init(&self, name: &Ident) -> Vec<Option<Value>>;
}

/// One `case` construct: the variables carrying its scrutinee into the
/// rules, and the control outputs guarding each alternative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseInfo {
    pub scrutinee: Vars,
    pub branches: Vec<Vars>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("{span}: `{name}` has no known shape")]
    UnknownOperator { name: Ident, span: Span },
    #[error("{span}: formula is not in first form")]
    NotFirstForm { span: Span },
}

pub struct Rewriter<'a> {
    pub fresh: FreshSupply,
    env: &'a dyn CalleeInfo,
    pub cases: Vec<CaseInfo>,
}

fn assign(targets: Vars, rhs: Expr) -> Form {
    Form::assign(targets, rhs)
}

fn copies(targets: &[Ident], sources: &[Ident]) -> Vec<Form> {
    targets
        .iter()
        .zip(sources)
        .map(|(t, s)| Form::assign1(t, Expr::var(s)))
        .collect()
}

fn concat(a: &[Ident], b: &[Ident]) -> Vars {
    a.iter().chain(b).cloned().collect()
}

impl<'a> Rewriter<'a> {
    pub fn new(env: &'a dyn CalleeInfo) -> Rewriter<'a> {
        Rewriter { fresh: FreshSupply::new(), env, cases: Vec::new() }
    }

    /// (Agg) and its pattern and formula variants.
    fn agg(a: Judgement, b: Judgement) -> Judgement {
        Judgement {
            form: Form::and(a.form, b.form),
            pre_state: concat(&a.pre_state, &b.pre_state),
            inputs: concat(&a.inputs, &b.inputs),
            outputs: concat(&a.outputs, &b.outputs),
            post_state: concat(&a.post_state, &b.post_state),
            controls: concat(&a.controls, &b.controls),
            init: a.init.into_iter().chain(b.init).collect(),
        }
    }

    pub fn rewrite_expr(&mut self, e: &Expr) -> Result<Judgement, RewriteError> {
        match &e.kind {
            ExprKind::Unit => Ok(Judgement::of(Form::top())),
            ExprKind::Comma(a, b) => {
                let ja = self.rewrite_expr(a)?;
                let jb = self.rewrite_expr(b)?;
                Ok(Self::agg(ja, jb))
            }
            ExprKind::Var(x) => {
                let y = self.fresh.fresh();
                Ok(Judgement { outputs: vec![y.clone()], ..Judgement::of(Form::assign1(&y, Expr::var(x))) })
            }
            ExprKind::Lit(v) => {
                let y = self.fresh.fresh();
                Ok(Judgement { outputs: vec![y.clone()], ..Judgement::of(Form::assign1(&y, Expr::lit(v.clone()))) })
            }
            ExprKind::Apply { op: OpRef::Delta(init), arg, .. } => {
                let ja = self.rewrite_expr(arg)?;
                let m = ja.outputs.len();
                let t = self.fresh.fresh_n(m);
                let t2 = self.fresh.fresh_n(m);
                let y = self.fresh.fresh_n(m);
                let mut parts = vec![ja.form];
                for i in 0..m {
                    parts.push(Form::assign1(&y[i], Expr::var(&t[i])));
                    parts.push(Form::assign1(&t2[i], Expr::var(&ja.outputs[i])));
                }
                let init_vals: Vec<Option<Value>> = if init.is_empty() {
                    vec![None; m]
                } else {
                    init.iter().cloned().map(Some).collect()
                };
                Ok(Judgement {
                    form: Form::exists(ja.outputs, Form::conj(parts)),
                    pre_state: concat(&ja.pre_state, &t),
                    inputs: Vec::new(),
                    outputs: y,
                    post_state: concat(&ja.post_state, &t2),
                    controls: Vec::new(),
                    init: ja.init.into_iter().chain(init_vals).collect(),
                })
            }
            ExprKind::Apply { op, state: _, arg } => {
                let ja = self.rewrite_expr(arg)?;
                let (k, m, callee_init) = self.op_shape(op, ja.outputs.len(), e.span)?;
                let t = self.fresh.fresh_n(k);
                let t2 = self.fresh.fresh_n(k);
                let y = self.fresh.fresh_n(m);
                let call = Form::synth(FormKind::Assign {
                    targets: y.clone(),
                    post_state: t2.clone(),
                    rhs: Expr::apply_state(op.clone(), t.clone(), Expr::var_tuple(&ja.outputs)),
                });
                Ok(Judgement {
                    form: Form::exists(ja.outputs, Form::and(ja.form, call)),
                    pre_state: concat(&ja.pre_state, &t),
                    inputs: Vec::new(),
                    outputs: y,
                    post_state: concat(&ja.post_state, &t2),
                    controls: Vec::new(),
                    init: ja.init.into_iter().chain(callee_init).collect(),
                })
            }
            ExprKind::Let { binder, bound, body } => {
                let ja = self.rewrite_expr(bound)?;
                let jb = self.rewrite_expr(body)?;
                let c = copies(binder, &ja.outputs);
                let mut parts = vec![ja.form, jb.form];
                parts.extend(c);
                Ok(Judgement {
                    form: Form::exists(concat(&ja.outputs, binder), Form::conj(parts)),
                    pre_state: concat(&ja.pre_state, &jb.pre_state),
                    inputs: Vec::new(),
                    outputs: jb.outputs,
                    post_state: concat(&ja.post_state, &jb.post_state),
                    controls: Vec::new(),
                    init: ja.init.into_iter().chain(jb.init).collect(),
                })
            }
            ExprKind::Case { scrutinee, rules } => {
                let ja = self.rewrite_expr(scrutinee)?;
                let (jr, branches) = self.rewrite_rule_tree(rules)?;
                self.cases.push(CaseInfo { scrutinee: jr.inputs.clone(), branches, span: e.span });
                let c = copies(&jr.inputs, &ja.outputs);
                let mut parts = vec![ja.form, jr.form];
                parts.extend(c);
                Ok(Judgement {
                    form: Form::exists(concat(&ja.outputs, &jr.inputs), Form::conj(parts)),
                    pre_state: concat(&ja.pre_state, &jr.pre_state),
                    inputs: Vec::new(),
                    outputs: jr.outputs,
                    post_state: concat(&ja.post_state, &jr.post_state),
                    controls: Vec::new(),
                    init: ja.init.into_iter().chain(jr.init).collect(),
                })
            }
        }
    }

    /// State arity, output arity and state initializers of an operator
    /// applied to `n` inputs.
    fn op_shape(&self, op: &OpRef, n: usize, span: Span) -> Result<(usize, usize, Vec<Option<Value>>), RewriteError> {
        match op {
            OpRef::Fun(f) => {
                let sh = self
                    .env
                    .shape(f)
                    .ok_or_else(|| RewriteError::UnknownOperator { name: f.clone(), span })?;
                let mut init = self.env.init(f);
                init.resize(sh.state, None);
                Ok((sh.state, sh.outs, init))
            }
            OpRef::Cons(_) | OpRef::Gamma | OpRef::Phi => Ok((0, 1, Vec::new())),
            OpRef::ConsInv(c) => {
                let k = self
                    .env
                    .cons_arity(c)
                    .ok_or_else(|| RewriteError::UnknownOperator { name: c.clone(), span })?;
                Ok((0, k + 1, Vec::new()))
            }
            OpRef::Delta(_) => Ok((n, n, vec![None; n])),
        }
    }

    pub fn rewrite_pat(&mut self, p: &Pat) -> Result<Judgement, RewriteError> {
        match &p.kind {
            PatKind::Unit => Ok(Judgement::of(Form::top())),
            PatKind::Comma(a, b) => {
                let ja = self.rewrite_pat(a)?;
                let jb = self.rewrite_pat(b)?;
                Ok(Self::agg(ja, jb))
            }
            PatKind::Var(x) => {
                let y = self.fresh.fresh();
                Ok(Judgement { inputs: vec![y.clone()], ..Judgement::of(Form::assign1(x, Expr::var(&y))) })
            }
            PatKind::Cons(c, arg) => {
                let jp = self.rewrite_pat(arg)?;
                let y = self.fresh.fresh();
                let d = self.fresh.fresh();
                let mut targets = jp.inputs.clone();
                targets.push(d.clone());
                let inv = assign(targets, Expr::apply(OpRef::ConsInv(c.clone()), Expr::var(&y)));
                let mut controls = jp.controls;
                controls.push(d);
                Ok(Judgement {
                    form: Form::exists(jp.inputs, Form::and(jp.form, inv)),
                    inputs: vec![y],
                    controls,
                    ..Judgement::default()
                })
            }
        }
    }

    /// Rewrites a rule tree; also returns the control outputs of each
    /// alternative in order.
    pub fn rewrite_rule_tree(&mut self, r: &RuleTree) -> Result<(Judgement, Vec<Vars>), RewriteError> {
        match r {
            RuleTree::Match { pat, body, .. } => {
                let jp = self.rewrite_pat(pat)?;
                let jb = self.rewrite_expr(body)?;
                let z = self.fresh.fresh_n(jb.outputs.len());
                let c = jp.controls.clone();
                let guards: Vec<Form> = z
                    .iter()
                    .zip(&jb.outputs)
                    .map(|(zj, yj)| {
                        if c.is_empty() {
                            Form::assign1(zj, Expr::var(yj))
                        } else {
                            let mut args = vec![yj.clone()];
                            args.extend(c.iter().cloned());
                            Form::assign1(zj, Expr::apply(OpRef::Gamma, Expr::var_tuple(&args)))
                        }
                    })
                    .collect();
                let mut parts = vec![jp.form, jb.form];
                parts.extend(guards);
                let j = Judgement {
                    form: Form::exists(concat(&c, &jb.outputs), Form::conj(parts)),
                    pre_state: jb.pre_state,
                    inputs: jp.inputs,
                    outputs: z,
                    post_state: jb.post_state,
                    controls: Vec::new(),
                    init: jb.init,
                };
                Ok((j, vec![c]))
            }
            RuleTree::Choice(q, r) => {
                let (jq, mut bq) = self.rewrite_rule_tree(q)?;
                let (jr, br) = self.rewrite_rule_tree(r)?;
                bq.extend(br);
                let y = self.fresh.fresh_n(jq.inputs.len());
                let z = self.fresh.fresh_n(jq.outputs.len());
                let mut parts = vec![jq.form, jr.form];
                for i in 0..y.len() {
                    parts.push(Form::assign1(&jq.inputs[i], Expr::var(&y[i])));
                    parts.push(Form::assign1(&jr.inputs[i], Expr::var(&y[i])));
                }
                for j in 0..z.len() {
                    let args = vec![jq.outputs[j].clone(), jr.outputs[j].clone()];
                    parts.push(Form::assign1(&z[j], Expr::apply(OpRef::Phi, Expr::var_tuple(&args))));
                }
                let bound: Vars = jq
                    .inputs
                    .iter()
                    .chain(&jq.outputs)
                    .chain(&jr.inputs)
                    .chain(&jr.outputs)
                    .cloned()
                    .collect();
                let j = Judgement {
                    form: Form::exists(bound, Form::conj(parts)),
                    pre_state: concat(&jq.pre_state, &jr.pre_state),
                    inputs: y,
                    outputs: z,
                    post_state: concat(&jq.post_state, &jr.post_state),
                    controls: Vec::new(),
                    init: jq.init.into_iter().chain(jr.init).collect(),
                };
                Ok((j, bq))
            }
        }
    }

    /// Formula rules; outputs are the assigned source names.
    pub fn rewrite_form(&mut self, f: &Form) -> Result<Judgement, RewriteError> {
        match &f.kind {
            FormKind::Top => Ok(Judgement::of(Form::top())),
            FormKind::And(a, b) => {
                let ja = self.rewrite_form(a)?;
                let jb = self.rewrite_form(b)?;
                Ok(Self::agg(ja, jb))
            }
            FormKind::Exists(_, body) => self.rewrite_form(body),
            FormKind::Assign { targets, post_state, rhs } if post_state.is_empty() => {
                let ja = self.rewrite_expr(rhs)?;
                let b = copies(targets, &ja.outputs);
                let mut parts = vec![ja.form];
                parts.extend(b);
                Ok(Judgement {
                    form: Form::exists(ja.outputs, Form::conj(parts)),
                    pre_state: ja.pre_state,
                    inputs: Vec::new(),
                    outputs: targets.clone(),
                    post_state: ja.post_state,
                    controls: Vec::new(),
                    init: ja.init,
                })
            }
            _ => Err(RewriteError::NotFirstForm { span: f.span }),
        }
    }

    /// (Lambda) and (Box): a second-form box whose free non-face variables
    /// are bound by one outer quantifier.
    pub fn rewrite_abs(&mut self, a: &Abs) -> Result<BoxAbs, RewriteError> {
        let (face, form) = match a {
            Abs::Lambda(r) => {
                let (j, _) = self.rewrite_rule_tree(r)?;
                let face = Face {
                    pre_state: j.pre_state,
                    inputs: j.inputs,
                    outputs: j.outputs,
                    post_state: j.post_state,
                    init: j.init,
                    explicit_state: true,
                };
                (face, j.form)
            }
            Abs::Box(b) => {
                let j = self.rewrite_form(&b.body)?;
                let face = Face {
                    pre_state: j.pre_state,
                    inputs: b.face.inputs.clone(),
                    outputs: b.face.outputs.clone(),
                    post_state: j.post_state,
                    init: j.init,
                    explicit_state: true,
                };
                (face, j.form)
            }
        };
        let face_vars: BTreeSet<&Ident> = face.all_vars().collect();
        let free: Vars = free_vars(&form).into_iter().filter(|v| !face_vars.contains(v)).collect();
        Ok(BoxAbs { body: Form::exists(free, form), face })
    }
}

/// Free variables in first-occurrence order.
pub fn free_vars(f: &Form) -> Vars {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    fn note(v: &Ident, bound: &[Ident], seen: &mut BTreeSet<Ident>, out: &mut Vars) {
        if !bound.contains(v) && seen.insert(v.clone()) {
            out.push(v.clone());
        }
    }
    fn expr(e: &Expr, bound: &[Ident], seen: &mut BTreeSet<Ident>, out: &mut Vars) {
        e.walk(&mut |sub| match &sub.kind {
            ExprKind::Var(v) => note(v, bound, seen, out),
            ExprKind::Apply { state, .. } => state.iter().for_each(|v| note(v, bound, seen, out)),
            _ => {}
        });
    }
    fn go(f: &Form, bound: &mut Vars, seen: &mut BTreeSet<Ident>, out: &mut Vars) {
        match &f.kind {
            FormKind::Top | FormKind::Bot => {}
            FormKind::And(l, r) | FormKind::Or(l, r) => {
                go(l, bound, seen, out);
                go(r, bound, seen, out);
            }
            FormKind::Exists(vs, body) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                go(body, bound, seen, out);
                bound.truncate(n);
            }
            FormKind::Assign { targets, post_state, rhs } => {
                for v in targets.iter().chain(post_state) {
                    note(v, bound, seen, out);
                }
                expr(rhs, bound, seen, out);
            }
            FormKind::IsBot(v) | FormKind::IsNotBot(v) => note(v, bound, seen, out),
        }
    }
    go(f, &mut Vec::new(), &mut seen, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::print_form;

    struct Env;
    impl CalleeInfo for Env {
        fn shape(&self, name: &Ident) -> Option<Shape> {
            (name.as_str() == "f").then_some(Shape::stateless(1, 1))
        }
        fn cons_arity(&self, name: &Ident) -> Option<usize> {
            match name.as_str() {
                "S" => Some(0),
                "C" => Some(2),
                _ => None,
            }
        }
        fn init(&self, _: &Ident) -> Vec<Option<Value>> {
            Vec::new()
        }
    }

    fn v(n: &str) -> Ident {
        Ident::new(n)
    }

    #[test]
    fn ref_emits_fresh_copy() {
        let mut r = Rewriter::new(&Env);
        let j = r.rewrite_expr(&Expr::var(&v("x"))).unwrap();
        assert_eq!(j.outputs, vec![v("%1")]);
        assert_eq!(print_form(&j.form), "%1 := x");
    }

    #[test]
    fn delay_swaps_state() {
        let mut r = Rewriter::new(&Env);
        let j = r.rewrite_expr(&Expr::apply(OpRef::Delta(Vec::new()), Expr::var(&v("x")))).unwrap();
        assert_eq!((j.pre_state.len(), j.outputs.len(), j.post_state.len()), (1, 1, 1));
        assert_eq!(print_form(&j.form), "exists %1 (%1 := x and %4 := %2 and %3 := %1)");
    }

    #[test]
    fn unit_is_true_with_empty_context() {
        let mut r = Rewriter::new(&Env);
        assert_eq!(r.rewrite_expr(&Expr::unit()).unwrap(), Judgement::of(Form::top()));
    }

    #[test]
    fn nullary_constructor_pattern() {
        let mut r = Rewriter::new(&Env);
        let j = r.rewrite_pat(&Pat::cons("S", Pat::unit())).unwrap();
        assert_eq!(j.inputs, vec![v("%1")]);
        assert_eq!(j.controls, vec![v("%2")]);
        assert_eq!(print_form(&j.form), "true and %2 := ~S(%1)");
    }

    #[test]
    fn binary_constructor_pattern_binds_components() {
        let mut r = Rewriter::new(&Env);
        let j = r
            .rewrite_pat(&Pat::cons("C", Pat::tuple(vec![Pat::var("a"), Pat::var("b")])))
            .unwrap();
        assert_eq!(
            print_form(&j.form),
            "exists %1, %2 (a := %1 and b := %2 and %1, %2, %4 := ~C(%3))"
        );
        assert_eq!(j.controls, vec![v("%4")]);
    }

    #[test]
    fn variable_rule_has_no_guard() {
        let mut r = Rewriter::new(&Env);
        let (j, branches) = r
            .rewrite_rule_tree(&RuleTree::rule(Pat::var("v"), Expr::var(&v("v"))))
            .unwrap();
        assert_eq!(branches, vec![Vec::<Ident>::new()]);
        assert!(!print_form(&j.form).contains("gamma"));
    }
}
