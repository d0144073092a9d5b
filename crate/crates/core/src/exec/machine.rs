//! Deterministic stream execution: the step function of a compiled
//! definition unfolded over a finite input stream.

use std::sync::Arc;

use super::trace::{Column, ColumnKind, Trace};
use crate::ast::{Face, Ident};
use crate::normalize::NormalProgram;
use crate::relsem::{
    enumerate_relation, show_tuple, AcceptableStateSpace, DeterminismError, EvalError, FiniteDomain, Plan, RelError,
    Step, StepOp, Value,
};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("step {step}: join `{var}` has {count} distinct defined inputs")]
    NondeterminismTrap { step: usize, var: Ident, count: usize },
    #[error("step {step}: output `{output}` is undefined")]
    UndefinedOutputTrap { step: usize, output: Ident },
    #[error("step {step}: input `{input}` is undefined")]
    UndefinedInput { step: usize, input: Ident },
    #[error("step {step}: expected {expected} inputs, got {found}")]
    InputArity { step: usize, expected: usize, found: usize },
    #[error("initial state {0} is not all-defined")]
    UndefinedState(String),
    #[error("expected {expected} initial state values, got {found}")]
    StateArity { expected: usize, found: usize },
    #[error("unroll factor must be positive")]
    ZeroUnroll,
    #[error("certification failed: {0}")]
    Certification(String),
}

impl From<RelError> for ExecError {
    fn from(e: RelError) -> Self {
        ExecError::Certification(e.to_string())
    }
}

impl From<DeterminismError> for ExecError {
    fn from(e: DeterminismError) -> Self {
        ExecError::Certification(e.to_string())
    }
}

/// Evidence that the step relation is a function on a finite acceptable
/// state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// Number of `(state, input)` pairs checked.
    pub checked: usize,
}

/// A compiled definition ready for execution.
#[derive(Clone, Debug)]
pub struct MachineProgram {
    pub name: Ident,
    pub face: Face,
    pub plan: Arc<Plan>,
    pub initial_state: Vec<Value>,
    pub certificate: Option<Certificate>,
}

impl MachineProgram {
    /// Machine for definition `name`. Pre-state variables without an
    /// initializer start at `0`.
    pub fn new(prog: &NormalProgram, name: &Ident) -> Result<MachineProgram, ExecError> {
        let c = prog.get(name).ok_or_else(|| EvalError::UnknownDefinition(name.clone()))?;
        let plan = Plan::build(prog, name)?;
        let initial_state = plan.init.iter().map(|i| i.clone().unwrap_or(Value::Num(0.0))).collect::<Vec<_>>();
        if !initial_state.iter().all(Value::is_defined) {
            return Err(ExecError::UndefinedState(show_tuple(&initial_state)));
        }
        Ok(MachineProgram { name: name.clone(), face: c.flat.face.clone(), plan, initial_state, certificate: None })
    }

    pub fn with_initial_state(mut self, s: Vec<Value>) -> Result<MachineProgram, ExecError> {
        if s.len() != self.plan.pre.len() {
            return Err(ExecError::StateArity { expected: self.plan.pre.len(), found: s.len() });
        }
        if !s.iter().all(Value::is_defined) {
            return Err(ExecError::UndefinedState(show_tuple(&s)));
        }
        self.initial_state = s;
        Ok(self)
    }

    /// Checks determinism over the defined states and inputs of `dom`, which
    /// must be closed under stepping and contain the initial state.
    pub fn certify(&mut self, prog: &NormalProgram, dom: &FiniteDomain) -> Result<&Certificate, ExecError> {
        let rel = enumerate_relation(prog, &self.name, dom)?;
        let det = rel.externalize().restrict_deterministic(&AcceptableStateSpace::defined())?;
        let initial_ok = self
            .face
            .pre_state
            .iter()
            .zip(&self.initial_state)
            .all(|(v, s)| dom.values(v).contains(s));
        if !initial_ok {
            return Err(ExecError::Certification(format!(
                "initial state {} lies outside the domain",
                show_tuple(&self.initial_state)
            )));
        }
        let checked = det.keys().map_or(0, |k| k.len());
        Ok(self.certificate.insert(Certificate { checked }))
    }

    fn trap(&self, e: EvalError, step: usize) -> ExecError {
        match e {
            EvalError::Nondeterminism { var, count, .. } => ExecError::NondeterminismTrap { step, var, count },
            e => ExecError::Eval(e),
        }
    }

    /// One step from `state` on `input`, which must be all-defined. `index`
    /// is only used in error reports.
    pub fn step_at(&self, index: usize, state: &[Value], input: &[Value]) -> Result<(Vec<Value>, Vec<Value>), ExecError> {
        if input.len() != self.plan.ins.len() {
            return Err(ExecError::InputArity { step: index, expected: self.plan.ins.len(), found: input.len() });
        }
        if let Some(i) = input.iter().position(Value::is_bot) {
            return Err(ExecError::UndefinedInput { step: index, input: self.face.inputs[i].clone() });
        }
        let (ys, s_) = self.plan.eval_det(state, input).map_err(|e| self.trap(e, index))?;
        if let Some(i) = ys.iter().position(Value::is_bot) {
            return Err(ExecError::UndefinedOutputTrap { step: index, output: self.face.outputs[i].clone() });
        }
        Ok((ys, s_))
    }

    pub fn step(&self, state: &[Value], input: &[Value]) -> Result<(Vec<Value>, Vec<Value>), ExecError> {
        self.step_at(0, state, input)
    }

    fn columns(&self, trace_state: bool) -> Vec<Column> {
        let col = |v: &Ident, kind| Column { name: v.as_str().to_string(), kind };
        let mut cols: Vec<Column> = Vec::new();
        if trace_state {
            cols.extend(self.face.pre_state.iter().map(|v| col(v, ColumnKind::State)));
        }
        cols.extend(self.face.inputs.iter().map(|v| col(v, ColumnKind::Input)));
        cols.extend(self.face.outputs.iter().map(|v| col(v, ColumnKind::Output)));
        cols
    }

    /// Runs from the initial state.
    pub fn run(&self, inputs: &[Vec<Value>]) -> Result<Trace, ExecError> {
        self.run_from(&self.initial_state, inputs, false)
    }

    /// Runs from `s0`; with `trace_state` every row starts with the
    /// pre-state of its step.
    pub fn run_from(&self, s0: &[Value], inputs: &[Vec<Value>], trace_state: bool) -> Result<Trace, ExecError> {
        self.run_indexed(0, s0, inputs, trace_state)
    }

    fn run_indexed(&self, first: usize, s0: &[Value], inputs: &[Vec<Value>], trace_state: bool) -> Result<Trace, ExecError> {
        let mut trace = Trace::new(self.columns(trace_state));
        let mut s = s0.to_vec();
        for (i, x) in inputs.iter().enumerate() {
            let (ys, s_) = self.step_at(first + i, &s, x)?;
            trace.push(row(trace_state.then_some(&s[..]), x, &ys));
            s = s_;
        }
        trace.final_state = s;
        Ok(trace)
    }

    /// Runs blocks of `n` steps through the `n`-fold unrolled step; a
    /// remainder shorter than `n` runs step by step.
    pub fn run_unrolled(&self, n: usize, inputs: &[Vec<Value>]) -> Result<Trace, ExecError> {
        self.run_unrolled_from(n, &self.initial_state, inputs, false)
    }

    pub fn run_unrolled_from(
        &self,
        n: usize,
        s0: &[Value],
        inputs: &[Vec<Value>],
        trace_state: bool,
    ) -> Result<Trace, ExecError> {
        if n == 0 {
            return Err(ExecError::ZeroUnroll);
        }
        if n == 1 {
            return self.run_from(s0, inputs, trace_state);
        }
        let block = unroll_plan(&self.plan, n);
        let (ni, no) = (self.plan.ins.len(), self.plan.outs.len());
        let mut trace = Trace::new(self.columns(trace_state));
        let mut s = s0.to_vec();
        let full = inputs.len() / n * n;
        for (b, xs) in inputs[..full].chunks(n).enumerate() {
            let base = b * n;
            let flat: Vec<Value> = xs.iter().flatten().cloned().collect();
            let ok = xs.iter().all(|x| x.len() == ni && x.iter().all(Value::is_defined));
            let result = if ok { block.eval_det(&s, &flat).ok() } else { None };
            let Some((ys, s_)) = result.filter(|(ys, _)| ys.iter().all(Value::is_defined)) else {
                // Locate the failing step exactly.
                let mut t = s.clone();
                for (j, x) in xs.iter().enumerate() {
                    t = self.step_at(base + j, &t, x)?.1;
                }
                unreachable!("unrolled block failed while its steps succeed");
            };
            if trace_state {
                let states = block_states(&self.plan, &s, &flat, n);
                for (j, x) in xs.iter().enumerate() {
                    trace.push(row(Some(&states[j]), x, &ys[j * no..(j + 1) * no]));
                }
            } else {
                for (j, x) in xs.iter().enumerate() {
                    trace.push(row(None, x, &ys[j * no..(j + 1) * no]));
                }
            }
            s = s_;
        }
        let rest = self.run_indexed(full, &s, &inputs[full..], trace_state)?;
        trace.rows.extend(rest.rows);
        trace.final_state = rest.final_state;
        Ok(trace)
    }
}

fn row(state: Option<&[Value]>, x: &[Value], ys: &[Value]) -> Vec<Value> {
    state.unwrap_or(&[]).iter().chain(x).chain(ys).cloned().collect()
}

/// Pre-states of each step inside a block.
fn block_states(step: &Plan, s0: &[Value], flat: &[Value], n: usize) -> Vec<Vec<Value>> {
    let ni = step.ins.len();
    let mut out = Vec::with_capacity(n);
    let mut s = s0.to_vec();
    for j in 0..n {
        out.push(s.clone());
        s = step.eval_det(&s, &flat[j * ni..(j + 1) * ni]).expect("block already evaluated").1;
    }
    out
}

/// The `n`-fold state composition of a plan: copy `j` reads the post-state
/// of copy `j - 1`, inputs and outputs are concatenated.
pub fn unroll_plan(p: &Plan, n: usize) -> Plan {
    let m = p.names.len();
    let shift = |v: &[usize], j: usize| v.iter().map(|i| i + j * m).collect::<Vec<_>>();
    let mut names = Vec::with_capacity(m * n);
    let mut steps = Vec::new();
    let mut free = Vec::new();
    for j in 0..n {
        names.extend(p.names.iter().map(|v| Ident::new(&format!("{v}#{j}"))));
        if j > 0 {
            for (&pre, &post) in p.pre.iter().zip(&p.post) {
                steps.push(Step { targets: vec![pre + j * m], post: vec![], op: StepOp::Copy, args: vec![post + (j - 1) * m], nstate: 0 });
            }
        }
        for st in &p.steps {
            steps.push(Step {
                targets: shift(&st.targets, j),
                post: shift(&st.post, j),
                op: st.op.clone(),
                args: shift(&st.args, j),
                nstate: st.nstate,
            });
        }
        free.extend(p.free.iter().map(|i| i + j * m));
    }
    Plan {
        name: Ident::new(&format!("{}^{n}", p.name)),
        names,
        pre: p.pre.clone(),
        ins: (0..n).flat_map(|j| shift(&p.ins, j)).collect(),
        outs: (0..n).flat_map(|j| shift(&p.outs, j)).collect(),
        post: shift(&p.post, n - 1),
        init: p.init.clone(),
        steps,
        free,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_source;
    use crate::normalize::{normalize_program, NormalizeOptions};

    fn machine(src: &str, name: &str) -> MachineProgram {
        let db = load_source(src).unwrap();
        let prog = normalize_program(&db, NormalizeOptions::default()).unwrap();
        MachineProgram::new(&prog, &Ident::new(name)).unwrap()
    }

    fn n(x: f64) -> Value {
        Value::num(x)
    }

    #[test]
    fn identity_box() {
        let m = machine("fun id = [x -> y where y := x]", "id");
        assert_eq!(m.step(&[], &[n(3.0)]).unwrap(), (vec![n(3.0)], vec![]));
    }

    #[test]
    fn undefined_input_is_rejected() {
        let m = machine("fun id = [x -> y where y := x]", "id");
        assert!(matches!(m.step(&[], &[Value::Bot]), Err(ExecError::UndefinedInput { .. })));
    }

    #[test]
    fn undefined_output_traps() {
        let m = machine("cons A/0 fun f = [x -> y where y := case x of { A() -> 1 }]", "f");
        assert!(matches!(m.step(&[], &[n(1.0)]), Err(ExecError::UndefinedOutputTrap { .. })));
        assert_eq!(m.step(&[], &[Value::atom("A")]).unwrap().0, vec![n(1.0)]);
    }

    #[test]
    fn overlapping_rules_trap() {
        let m = machine("fun f = \\( a -> 1 | b -> 2 )", "f");
        assert!(matches!(m.step(&[], &[n(0.0)]), Err(ExecError::NondeterminismTrap { .. })));
    }

    #[test]
    fn unrolled_delay_matches_run() {
        let m = machine("prim add 2 -> 1 fun acc = [x -> y where y := add(x, delta[10](y))]", "acc");
        let xs: Vec<Vec<Value>> = (0..11).map(|i| vec![n(i as f64)]).collect();
        let a = m.run(&xs).unwrap();
        for k in 1..5 {
            assert_eq!(m.run_unrolled(k, &xs).unwrap(), a);
        }
        assert_eq!(a.rows[0], vec![n(0.0), n(10.0)]);
    }

    #[test]
    fn unrolled_errors_report_the_exact_step() {
        let m = machine("cons A/0 fun f = [x -> y where y := case x of { A() -> 1 }]", "f");
        let xs = vec![vec![Value::atom("A")], vec![Value::atom("A")], vec![Value::atom("A")], vec![n(0.0)]];
        match m.run_unrolled(2, &xs) {
            Err(ExecError::UndefinedOutputTrap { step, .. }) => assert_eq!(step, 3),
            other => panic!("{other:?}"),
        }
    }
}
