//! Slot-compiled evaluation of second-form definitions, both set-valued and
//! deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::prims::{eval_builtin, eval_cons, eval_cons_inv, eval_gamma, eval_phi};
use super::Value;
use crate::ast::{Builtin, Ident, OpRef, Vars};
use crate::normalize::{Compiled, NormalProgram, Rhs};

/// A set of `(outputs, post-state)` results.
pub type Results = BTreeSet<(Vec<Value>, Vec<Value>)>;

#[derive(Clone, Debug, PartialEq)]
pub enum StepOp {
    Copy,
    Lit(Value),
    Cons(Ident),
    ConsInv(Ident, usize),
    Gamma,
    Phi,
    Prim(Builtin),
    Call(Arc<Plan>),
}

/// One assignment; `args` lists state arguments before data arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub targets: Vec<usize>,
    pub post: Vec<usize>,
    pub op: StepOp,
    pub args: Vec<usize>,
    pub nstate: usize,
}

/// A definition with variables resolved to slots and assignments in
/// dependency order.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub name: Ident,
    pub names: Vars,
    pub pre: Vec<usize>,
    pub ins: Vec<usize>,
    pub outs: Vec<usize>,
    pub post: Vec<usize>,
    pub init: Vec<Option<Value>>,
    pub steps: Vec<Step>,
    /// Variables read or exported but never assigned: unconstrained.
    pub free: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("`{0}` is not a compiled definition")]
    UnknownDefinition(Ident),
    #[error("`{callee}` called from `{def}` is neither a primitive nor a compiled definition")]
    UnknownCallee { def: Ident, callee: Ident },
    #[error("in `{def}`: join `{var}` has {count} distinct defined inputs")]
    Nondeterminism { def: Ident, var: Ident, count: usize },
    #[error("in `{def}`: `{var}` is never assigned")]
    Unconstrained { def: Ident, var: Ident },
    #[error("in `{def}`: expected {expected} {what}, got {found}")]
    Arity { def: Ident, what: &'static str, expected: usize, found: usize },
}

struct Slots {
    names: Vars,
    index: BTreeMap<Ident, usize>,
}

impl Slots {
    fn slot(&mut self, v: &Ident) -> usize {
        if let Some(&i) = self.index.get(v) {
            return i;
        }
        self.names.push(v.clone());
        self.index.insert(v.clone(), self.names.len() - 1);
        self.names.len() - 1
    }
}

impl Plan {
    /// Builds the plan of `name` and, recursively, of its callees.
    pub fn build(prog: &NormalProgram, name: &Ident) -> Result<Arc<Plan>, EvalError> {
        let mut cache = BTreeMap::new();
        Plan::build_cached(prog, name, &mut cache)
    }

    fn build_cached(
        prog: &NormalProgram,
        name: &Ident,
        cache: &mut BTreeMap<Ident, Arc<Plan>>,
    ) -> Result<Arc<Plan>, EvalError> {
        if let Some(p) = cache.get(name) {
            return Ok(p.clone());
        }
        let c = prog.get(name).ok_or_else(|| EvalError::UnknownDefinition(name.clone()))?;
        let p = Arc::new(Plan::from_compiled(prog, c, cache)?);
        cache.insert(name.clone(), p.clone());
        Ok(p)
    }

    fn from_compiled(
        prog: &NormalProgram,
        c: &Compiled,
        cache: &mut BTreeMap<Ident, Arc<Plan>>,
    ) -> Result<Plan, EvalError> {
        let face = &c.flat.face;
        let mut s = Slots { names: Vec::new(), index: BTreeMap::new() };
        let pre: Vec<usize> = face.pre_state.iter().map(|v| s.slot(v)).collect();
        let ins: Vec<usize> = face.inputs.iter().map(|v| s.slot(v)).collect();
        let outs: Vec<usize> = face.outputs.iter().map(|v| s.slot(v)).collect();
        let post: Vec<usize> = face.post_state.iter().map(|v| s.slot(v)).collect();
        let mut steps = Vec::new();
        let mut written: BTreeSet<usize> = pre.iter().chain(&ins).copied().collect();
        for &i in &c.order.order {
            let a = &c.flat.assigns[i];
            let targets: Vec<usize> = a.targets.iter().map(|v| s.slot(v)).collect();
            let post_t: Vec<usize> = a.post_state.iter().map(|v| s.slot(v)).collect();
            let (op, state, args): (StepOp, &[Ident], &[Ident]) = match &a.rhs {
                Rhs::Var(v) => (StepOp::Copy, &[], std::slice::from_ref(v)),
                Rhs::Lit(v) => (StepOp::Lit(v.clone()), &[], &[]),
                Rhs::Op { op, state, args } => {
                    let op = match op {
                        OpRef::Cons(k) => StepOp::Cons(k.clone()),
                        OpRef::ConsInv(k) => StepOp::ConsInv(k.clone(), prog.sig.conses.get(k).copied().unwrap_or(0)),
                        OpRef::Gamma => StepOp::Gamma,
                        OpRef::Phi => StepOp::Phi,
                        OpRef::Delta(_) => unreachable!("flat boxes contain no delay"),
                        OpRef::Fun(f) => match prog.sig.prims.get(f) {
                            Some(b) => StepOp::Prim(b.clone()),
                            None if prog.get(f).is_some() => StepOp::Call(Plan::build_cached(prog, f, cache)?),
                            None => {
                                return Err(EvalError::UnknownCallee { def: c.name.clone(), callee: f.clone() })
                            }
                        },
                    };
                    (op, state.as_slice(), args.as_slice())
                }
            };
            let arg_slots: Vec<usize> = state.iter().chain(args).map(|v| s.slot(v)).collect();
            written.extend(targets.iter().chain(&post_t));
            steps.push(Step { targets, post: post_t, op, args: arg_slots, nstate: state.len() });
        }
        let mut free = Vec::new();
        let mark = |i: usize, free: &mut Vec<usize>| {
            if !written.contains(&i) && !free.contains(&i) {
                free.push(i);
            }
        };
        for st in &steps {
            st.args.iter().for_each(|&i| mark(i, &mut free));
        }
        outs.iter().chain(&post).for_each(|&i| mark(i, &mut free));
        let mut init = face.init.clone();
        init.resize(pre.len(), None);
        Ok(Plan { name: c.name.clone(), names: s.names, pre, ins, outs, post, init, steps, free })
    }

    pub fn state_arity(&self) -> usize {
        self.pre.len()
    }

    pub fn input_arity(&self) -> usize {
        self.ins.len()
    }

    pub fn output_arity(&self) -> usize {
        self.outs.len()
    }

    fn check_arity(&self, state: &[Value], input: &[Value]) -> Result<(), EvalError> {
        if state.len() != self.pre.len() {
            return Err(EvalError::Arity { def: self.name.clone(), what: "state values", expected: self.pre.len(), found: state.len() });
        }
        if input.len() != self.ins.len() {
            return Err(EvalError::Arity { def: self.name.clone(), what: "inputs", expected: self.ins.len(), found: input.len() });
        }
        Ok(())
    }

    fn load(&self, state: &[Value], input: &[Value]) -> Vec<Value> {
        let mut env = vec![Value::Bot; self.names.len()];
        for (&i, v) in self.pre.iter().zip(state) {
            env[i] = v.clone();
        }
        for (&i, v) in self.ins.iter().zip(input) {
            env[i] = v.clone();
        }
        env
    }

    fn read(&self, env: &[Value]) -> (Vec<Value>, Vec<Value>) {
        (
            self.outs.iter().map(|&i| env[i].clone()).collect(),
            self.post.iter().map(|&i| env[i].clone()).collect(),
        )
    }

    /// All results of one step; unassigned variables range over `free`.
    pub fn eval_set(
        &self,
        state: &[Value],
        input: &[Value],
        free: &dyn Fn(&Ident) -> Vec<Value>,
    ) -> Result<Results, EvalError> {
        self.check_arity(state, input)?;
        let mut env = self.load(state, input);
        let mut out = Results::new();
        self.free_branch(0, &mut env, free, &mut out)?;
        Ok(out)
    }

    fn free_branch(
        &self,
        k: usize,
        env: &mut Vec<Value>,
        free: &dyn Fn(&Ident) -> Vec<Value>,
        out: &mut Results,
    ) -> Result<(), EvalError> {
        if k == self.free.len() {
            return self.step_branch(0, env, free, out);
        }
        let slot = self.free[k];
        for v in free(&self.names[slot]) {
            env[slot] = v;
            self.free_branch(k + 1, env, free, out)?;
        }
        Ok(())
    }

    fn step_branch(
        &self,
        k: usize,
        env: &mut Vec<Value>,
        free: &dyn Fn(&Ident) -> Vec<Value>,
        out: &mut Results,
    ) -> Result<(), EvalError> {
        let Some(st) = self.steps.get(k) else {
            out.insert(self.read(env));
            return Ok(());
        };
        let args: Vec<Value> = st.args.iter().map(|&i| env[i].clone()).collect();
        let options: Vec<(Vec<Value>, Vec<Value>)> = match &st.op {
            StepOp::Phi => eval_phi(&args).into_iter().map(|v| (vec![v], Vec::new())).collect(),
            StepOp::Call(p) => p.eval_set(&args[..st.nstate], &args[st.nstate..], free)?.into_iter().collect(),
            op => vec![(apply_simple(op, &args), Vec::new())],
        };
        for (ys, ps) in options {
            for (&i, v) in st.targets.iter().zip(ys).chain(st.post.iter().zip(ps)) {
                env[i] = v;
            }
            self.step_branch(k + 1, env, free, out)?;
        }
        Ok(())
    }

    /// The single result of one step; fails on a join with several distinct
    /// defined inputs or an unassigned variable.
    pub fn eval_det(&self, state: &[Value], input: &[Value]) -> Result<(Vec<Value>, Vec<Value>), EvalError> {
        self.check_arity(state, input)?;
        if let Some(&i) = self.free.first() {
            return Err(EvalError::Unconstrained { def: self.name.clone(), var: self.names[i].clone() });
        }
        let mut env = self.load(state, input);
        for st in &self.steps {
            let args: Vec<Value> = st.args.iter().map(|&i| env[i].clone()).collect();
            let (ys, ps) = match &st.op {
                StepOp::Phi => {
                    let set = eval_phi(&args);
                    if set.len() > 1 {
                        return Err(EvalError::Nondeterminism {
                            def: self.name.clone(),
                            var: self.names[st.targets[0]].clone(),
                            count: set.len(),
                        });
                    }
                    (set.into_iter().collect(), Vec::new())
                }
                StepOp::Call(p) => p.eval_det(&args[..st.nstate], &args[st.nstate..])?,
                op => (apply_simple(op, &args), Vec::new()),
            };
            for (&i, v) in st.targets.iter().zip(ys).chain(st.post.iter().zip(ps)) {
                env[i] = v;
            }
        }
        Ok(self.read(&env))
    }
}

/// Single-valued building blocks.
fn apply_simple(op: &StepOp, args: &[Value]) -> Vec<Value> {
    match op {
        StepOp::Copy => vec![args[0].clone()],
        StepOp::Lit(v) => vec![v.clone()],
        StepOp::Cons(c) => vec![eval_cons(c.as_str(), args)],
        StepOp::ConsInv(c, k) => {
            let (mut comps, ctrl) = eval_cons_inv(c.as_str(), *k, &args[0]);
            comps.push(ctrl);
            comps
        }
        StepOp::Gamma => vec![eval_gamma(&args[0], &args[1..])],
        StepOp::Prim(b) => vec![eval_builtin(b, args)],
        StepOp::Phi | StepOp::Call(_) => unreachable!("handled by the caller"),
    }
}
