//! Finite-domain satisfaction of third-form clause sets by backtracking
//! enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::third::{Literal, ThirdBox};
use crate::ast::{Ident, OpRef};
use crate::normalize::{NormalProgram, Rhs, Signature};
use crate::relsem::{
    eval_builtin, eval_cons, eval_cons_inv, eval_gamma, eval_phi, DomainError, EvalError, FiniteDomain, Key, Mode, Plan,
    Rep, Results, Row, StepRelation, Value,
};

/// Evaluates operations appearing in flat assignments, including calls of
/// compiled definitions.
#[derive(Clone, Debug, Default)]
pub struct OpEval {
    pub sig: Signature,
    plans: BTreeMap<Ident, Arc<Plan>>,
}

impl OpEval {
    pub fn new(prog: &NormalProgram) -> Result<OpEval, EvalError> {
        let mut plans = BTreeMap::new();
        for name in &prog.order {
            plans.insert(name.clone(), Plan::build(prog, name)?);
        }
        Ok(OpEval { sig: prog.sig.clone(), plans })
    }

    /// Evaluator for programs with constructors and primitives only.
    pub fn from_signature(sig: Signature) -> OpEval {
        OpEval { sig, plans: BTreeMap::new() }
    }

    /// All `(outputs, post-state)` results of an operation.
    pub fn eval(&self, op: &OpRef, state: &[Value], args: &[Value]) -> Results {
        let single = |v: Vec<Value>| Results::from([(v, Vec::new())]);
        match op {
            OpRef::Cons(c) => single(vec![eval_cons(c.as_str(), args)]),
            OpRef::ConsInv(c) => {
                let k = self.sig.conses.get(c).copied().unwrap_or(0);
                let (mut comps, ctrl) = eval_cons_inv(c.as_str(), k, &args[0]);
                comps.push(ctrl);
                single(comps)
            }
            OpRef::Gamma => single(vec![eval_gamma(&args[0], &args[1..])]),
            OpRef::Phi => eval_phi(args).into_iter().map(|v| (vec![v], Vec::new())).collect(),
            OpRef::Delta(_) => Results::new(),
            OpRef::Fun(f) => {
                if let Some(b) = self.sig.prims.get(f) {
                    single(vec![eval_builtin(b, args)])
                } else if let Some(p) = self.plans.get(f) {
                    p.eval_set(state, args, &|_| vec![Value::Bot]).unwrap_or_default()
                } else {
                    Results::new()
                }
            }
        }
    }
}

/// A total assignment of values to variables.
pub type Assignment = BTreeMap<Ident, Value>;

struct Problem<'a> {
    vars: Vec<Ident>,
    slot: BTreeMap<Ident, usize>,
    /// Literals of each clause, checked once the clause's last variable in
    /// search order is assigned.
    check_at: Vec<Vec<usize>>,
    clauses: Vec<Vec<&'a Literal>>,
    /// Assignment literals able to propose values for each variable, and
    /// whether each forms a unit clause. A variable with an evaluable unit
    /// producer ranges over proposed values only.
    producers: Vec<Vec<(&'a Literal, bool)>>,
    ev: &'a OpEval,
}

fn rhs_values(ev: &OpEval, rhs: &Rhs, val: &dyn Fn(&Ident) -> Option<Value>) -> Option<Results> {
    Some(match rhs {
        Rhs::Var(v) => Results::from([(vec![val(v)?], Vec::new())]),
        Rhs::Lit(x) => Results::from([(vec![x.clone()], Vec::new())]),
        Rhs::Op { op, state, args } => {
            let s = state.iter().map(val).collect::<Option<Vec<_>>>()?;
            let a = args.iter().map(val).collect::<Option<Vec<_>>>()?;
            ev.eval(op, &s, &a)
        }
    })
}

/// Truth value of a literal, or `None` while a variable is unassigned.
pub fn literal_holds(ev: &OpEval, l: &Literal, val: &dyn Fn(&Ident) -> Option<Value>) -> Option<bool> {
    Some(match l {
        Literal::Top => true,
        Literal::Bot => false,
        Literal::IsBot(v) => val(v)?.is_bot(),
        Literal::IsNotBot(v) => val(v)?.is_defined(),
        Literal::Assign { targets, post_state, rhs } => {
            let ys = targets.iter().map(val).collect::<Option<Vec<_>>>()?;
            let ps = post_state.iter().map(val).collect::<Option<Vec<_>>>()?;
            rhs_values(ev, rhs, val)?.contains(&(ys, ps))
        }
    })
}

/// Search order: `first` in order, then the remaining variables so that
/// right-hand sides precede targets wherever the dependencies are acyclic.
fn search_order(t: &ThirdBox, first: &[Ident]) -> Vec<Ident> {
    let all = t.vars();
    let mut deps: BTreeMap<&Ident, BTreeSet<&Ident>> = BTreeMap::new();
    for l in t.set.clauses.iter().flatten() {
        if let Literal::Assign { targets, post_state, rhs } = l {
            for tv in targets.iter().chain(post_state) {
                deps.entry(tv).or_default().extend(rhs.uses().into_iter().filter(|u| *u != tv));
            }
        }
    }
    let mut order: Vec<Ident> = Vec::new();
    let mut placed: BTreeSet<Ident> = BTreeSet::new();
    for v in first {
        if placed.insert(v.clone()) {
            order.push(v.clone());
        }
    }
    while order.len() < all.len() {
        let ready = all.iter().find(|v| {
            !placed.contains(*v) && deps.get(v).is_none_or(|ds| ds.iter().all(|d| placed.contains(*d)))
        });
        let next = ready.or_else(|| all.iter().find(|v| !placed.contains(*v))).expect("unplaced variable").clone();
        placed.insert(next.clone());
        order.push(next);
    }
    order
}

impl<'a> Problem<'a> {
    fn new(t: &'a ThirdBox, first: &[Ident], ev: &'a OpEval) -> Problem<'a> {
        let vars = search_order(t, first);
        let slot: BTreeMap<Ident, usize> = vars.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let n = vars.len();
        let mut check_at = vec![Vec::new(); n + 1];
        let mut producers = vec![Vec::new(); n];
        let clauses: Vec<Vec<&Literal>> = t.set.clauses.iter().map(|c| c.iter().collect()).collect();
        for (ci, c) in clauses.iter().enumerate() {
            let last = c.iter().flat_map(|l| l.vars()).map(|v| slot[v] + 1).max().unwrap_or(0);
            check_at[last].push(ci);
            for l in c {
                if let Literal::Assign { targets, post_state, .. } = l {
                    for v in targets.iter().chain(post_state) {
                        producers[slot[v]].push((*l, c.len() == 1));
                    }
                }
            }
        }
        Problem { vars, slot, check_at, clauses, producers, ev }
    }

    fn candidates(&self, k: usize, env: &[Option<Value>], dom: &FiniteDomain) -> Vec<Value> {
        let val = |v: &Ident| env[self.slot[v]].clone();
        let mut out: Vec<Value> = Vec::new();
        let mut evaluated = false;
        for &(l, unit) in &self.producers[k] {
            let Literal::Assign { targets, post_state, rhs } = l else { continue };
            let pos = targets.iter().chain(post_state).position(|t| *t == self.vars[k]).expect("producer");
            let Some(res) = rhs_values(self.ev, rhs, &val) else { continue };
            evaluated |= unit;
            for (ys, ps) in res {
                if let Some(x) = ys.into_iter().chain(ps).nth(pos) {
                    if !out.contains(&x) {
                        out.push(x);
                    }
                }
            }
        }
        if !evaluated {
            for x in dom.values(&self.vars[k]) {
                if !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        out
    }

    fn check(&self, k: usize, env: &[Option<Value>]) -> bool {
        let val = |v: &Ident| env[self.slot[v]].clone();
        self.check_at[k].iter().all(|&ci| {
            self.clauses[ci].iter().any(|l| literal_holds(self.ev, l, &val).unwrap_or(false))
        })
    }
}

/// All total assignments extending `fixed` that satisfy the clause set over
/// `dom`. Variables range over their domain values plus the values their
/// assignments compute; the search is bounded by `dom.limit` nodes.
pub fn satisfy(
    t: &ThirdBox,
    dom: &FiniteDomain,
    fixed: &Assignment,
    ev: &OpEval,
) -> Result<Vec<Assignment>, DomainError> {
    let first: Vec<Ident> = fixed
        .keys()
        .cloned()
        .chain(t.face.pre_state.iter().chain(&t.face.inputs).cloned())
        .collect();
    let p = Problem::new(t, &first, ev);
    let mut env: Vec<Option<Value>> = vec![None; p.vars.len()];
    let mut out = Vec::new();
    let mut nodes: u64 = 0;
    if !p.check(0, &env) {
        return Ok(out);
    }
    search(&p, 0, &mut env, dom, fixed, &mut out, &mut nodes)?;
    Ok(out)
}

fn search(
    p: &Problem<'_>,
    k: usize,
    env: &mut Vec<Option<Value>>,
    dom: &FiniteDomain,
    fixed: &Assignment,
    out: &mut Vec<Assignment>,
    nodes: &mut u64,
) -> Result<(), DomainError> {
    if k == p.vars.len() {
        out.push(p.vars.iter().cloned().zip(env.iter().map(|v| v.clone().expect("assigned"))).collect());
        return Ok(());
    }
    let cands = match fixed.get(&p.vars[k]) {
        Some(v) => vec![v.clone()],
        None => p.candidates(k, env, dom),
    };
    for c in cands {
        *nodes += 1;
        if *nodes > dom.limit {
            return Err(DomainError::TooLarge { size: *nodes as u128, limit: dom.limit });
        }
        env[k] = Some(c);
        if p.check(k + 1, env) {
            search(p, k + 1, env, dom, fixed, out, nodes)?;
        }
    }
    env[k] = None;
    Ok(())
}

/// Solutions projected onto the face, as relation rows.
pub fn satisfy_rows(t: &ThirdBox, dom: &FiniteDomain, ev: &OpEval) -> Result<BTreeSet<Row>, DomainError> {
    let sols = satisfy(t, dom, &Assignment::new(), ev)?;
    let f = &t.face;
    let pick = |a: &Assignment, vs: &[Ident]| vs.iter().map(|v| a[v].clone()).collect::<Vec<_>>();
    Ok(sols
        .iter()
        .map(|a| Row { s: pick(a, &f.pre_state), x: pick(a, &f.inputs), y: pick(a, &f.outputs), s_: pick(a, &f.post_state) })
        .collect())
}

/// The internal relation of a third-form box: every pre-state and input
/// tuple of `dom` is a key, mapped to the face projections of its solutions.
pub fn satisfy_relation(t: &ThirdBox, dom: &FiniteDomain, ev: &OpEval) -> Result<StepRelation, DomainError> {
    let f = &t.face;
    let sources: Vec<Ident> = f.pre_state.iter().chain(&f.inputs).cloned().collect();
    let mut table: BTreeMap<Key, Results> = dom.tuples(&sources)?.into_iter().map(|k| {
        let (s, x) = k.split_at(f.pre_state.len());
        ((s.to_vec(), x.to_vec()), Results::new())
    }).collect();
    for r in satisfy_rows(t, dom, ev)? {
        table.entry((r.s, r.x)).or_default().insert((r.y, r.s_));
    }
    Ok(StepRelation { face: f.clone(), mode: Mode::Internal, rep: Rep::Table(table) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{vars, Face};
    use crate::logic::third::ClauseSet;

    fn bx(clauses: Vec<Vec<Literal>>) -> ThirdBox {
        ThirdBox { face: Face::io(vec![], vec![]), set: ClauseSet { binders: vec![], clauses } }
    }

    #[test]
    fn bottom_is_unsatisfiable() {
        let ev = OpEval::default();
        let r = satisfy(&bx(vec![vec![Literal::Bot]]), &FiniteDomain::default(), &Assignment::new(), &ev).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn top_with_no_variables_has_one_solution() {
        let ev = OpEval::default();
        let r = satisfy(&bx(vec![]), &FiniteDomain::default(), &Assignment::new(), &ev).unwrap();
        assert_eq!(r, vec![Assignment::new()]);
    }

    #[test]
    fn copy_is_functional() {
        let ev = OpEval::default();
        let y = Ident::new("y");
        let t = ThirdBox {
            face: Face::io(vars(&["x"]), vars(&["y"])),
            set: ClauseSet { binders: vec![], clauses: vec![vec![Literal::assign(&y, Rhs::Var(Ident::new("x")))]] },
        };
        let rows = satisfy_rows(&t, &FiniteDomain::numeric(&[0.0, 1.0]), &ev).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.x == r.y));
    }
}
