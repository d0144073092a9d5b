//! Stateful relations `s / x ↦ y / s'`, their compositions and the
//! internal, external and deterministic semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::domain::{DomainError, FiniteDomain};
use super::eval::{EvalError, Plan, Results};
use super::Value;
use crate::ast::{Face, Ident};
use crate::normalize::NormalProgram;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// Left-total, with `Bot` throughout.
    Internal,
    /// `Bot` removed from inputs and outputs.
    External,
    /// Functional on an acceptable state space.
    Deterministic,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Internal => "internal",
            Mode::External => "external",
            Mode::Deterministic => "deterministic",
        }
    }
}

/// One tuple `s / x ↦ y / s'`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Row {
    pub s: Vec<Value>,
    pub x: Vec<Value>,
    pub y: Vec<Value>,
    pub s_: Vec<Value>,
}

/// Key of a table: pre-state and input.
pub type Key = (Vec<Value>, Vec<Value>);

pub type StepFn = Arc<dyn Fn(&[Value], &[Value]) -> Results + Send + Sync>;

#[derive(Clone)]
pub enum Rep {
    /// Explicit enumeration; every key of the input space is present, with
    /// a possibly empty image.
    Table(BTreeMap<Key, Results>),
    /// Executable step.
    Exec(StepFn),
}

impl fmt::Debug for Rep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rep::Table(t) => f.debug_tuple("Table").field(&t.len()).finish(),
            Rep::Exec(_) => f.write_str("Exec"),
        }
    }
}

/// Arities of the four ports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ports {
    pub state: usize,
    pub ins: usize,
    pub outs: usize,
}

#[derive(Clone, Debug)]
pub struct StepRelation {
    pub face: Face,
    pub mode: Mode,
    pub rep: Rep,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RelError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot compose: {0}")]
    Shape(String),
}

/// Why a relation is not deterministic on the chosen state space.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DeterminismError {
    #[error("{} results at s = {}, x = {}", .count, super::show_tuple(.s), super::show_tuple(.x))]
    Count { s: Vec<Value>, x: Vec<Value>, count: usize },
    #[error("post-state {} leaves the state space at s = {}, x = {}", super::show_tuple(.s_), super::show_tuple(.s), super::show_tuple(.x))]
    Escaping { s: Vec<Value>, x: Vec<Value>, s_: Vec<Value> },
}

impl DeterminismError {
    pub fn witness(&self) -> (&[Value], &[Value]) {
        match self {
            DeterminismError::Count { s, x, .. } | DeterminismError::Escaping { s, x, .. } => (s, x),
        }
    }
}

/// A set of admissible states.
#[derive(Clone)]
pub struct AcceptableStateSpace {
    pub pred: Arc<dyn Fn(&[Value]) -> bool + Send + Sync>,
    pub description: String,
}

impl fmt::Debug for AcceptableStateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description)
    }
}

impl AcceptableStateSpace {
    /// States with every component defined.
    pub fn defined() -> AcceptableStateSpace {
        AcceptableStateSpace { pred: Arc::new(|s| s.iter().all(Value::is_defined)), description: "all state components defined".into() }
    }

    pub fn everything() -> AcceptableStateSpace {
        AcceptableStateSpace { pred: Arc::new(|_| true), description: "all states".into() }
    }

    pub fn contains(&self, s: &[Value]) -> bool {
        (self.pred)(s)
    }
}

fn concat(a: &[Value], b: &[Value]) -> Vec<Value> {
    a.iter().chain(b).cloned().collect()
}

fn face_concat(a: &Face, b: &Face, state: bool, ins: bool, outs: bool) -> Face {
    let cat = |x: &[Ident], y: &[Ident], both: bool| -> Vec<Ident> {
        if both {
            x.iter().chain(y).cloned().collect()
        } else {
            y.to_vec()
        }
    };
    let mut init = if state { a.init.iter().chain(&b.init).cloned().collect() } else { b.init.clone() };
    init.resize(cat(&a.pre_state, &b.pre_state, state).len(), None);
    Face {
        pre_state: cat(&a.pre_state, &b.pre_state, state),
        inputs: if ins { cat(&a.inputs, &b.inputs, true) } else { a.inputs.clone() },
        outputs: if outs { cat(&a.outputs, &b.outputs, true) } else { b.outputs.clone() },
        post_state: cat(&a.post_state, &b.post_state, state),
        init,
        explicit_state: true,
    }
}

impl StepRelation {
    pub fn ports(&self) -> Ports {
        Ports { state: self.face.pre_state.len(), ins: self.face.inputs.len(), outs: self.face.outputs.len() }
    }

    pub fn is_table(&self) -> bool {
        matches!(self.rep, Rep::Table(_))
    }

    /// The results at `(s, x)`; empty outside an enumerated input space.
    pub fn image(&self, s: &[Value], x: &[Value]) -> Results {
        match &self.rep {
            Rep::Table(t) => t.get(&(s.to_vec(), x.to_vec())).cloned().unwrap_or_default(),
            Rep::Exec(f) => f(s, x),
        }
    }

    /// The enumerated input space, if tabulated.
    pub fn keys(&self) -> Option<Vec<Key>> {
        match &self.rep {
            Rep::Table(t) => Some(t.keys().cloned().collect()),
            Rep::Exec(_) => None,
        }
    }

    /// Rows in lexicographic order of `(s, x, y, s')`.
    pub fn rows(&self) -> Vec<Row> {
        match &self.rep {
            Rep::Table(t) => t
                .iter()
                .flat_map(|((s, x), res)| {
                    res.iter().map(move |(y, s_)| Row { s: s.clone(), x: x.clone(), y: y.clone(), s_: s_.clone() })
                })
                .collect(),
            Rep::Exec(_) => Vec::new(),
        }
    }

    fn states(&self) -> Vec<Vec<Value>> {
        let set: BTreeSet<Vec<Value>> = self.keys().unwrap_or_default().into_iter().map(|k| k.0).collect();
        set.into_iter().collect()
    }

    fn input_values(&self) -> Vec<Vec<Value>> {
        let set: BTreeSet<Vec<Value>> = self.keys().unwrap_or_default().into_iter().map(|k| k.1).collect();
        set.into_iter().collect()
    }

    /// The first input with an empty image, if any.
    pub fn left_totality_witness(&self) -> Option<Key> {
        match &self.rep {
            Rep::Table(t) => t.iter().find(|(_, r)| r.is_empty()).map(|(k, _)| k.clone()),
            Rep::Exec(_) => None,
        }
    }

    pub fn is_left_total(&self) -> bool {
        self.left_totality_witness().is_none()
    }

    /// Tabulates an executable relation over the given keys.
    pub fn tabulate(&self, keys: impl IntoIterator<Item = Key>) -> StepRelation {
        let table = keys.into_iter().map(|(s, x)| {
            let r = self.image(&s, &x);
            ((s, x), r)
        });
        StepRelation { face: self.face.clone(), mode: self.mode, rep: Rep::Table(table.collect()) }
    }

    fn step_fn(&self) -> StepFn {
        match &self.rep {
            Rep::Exec(f) => f.clone(),
            Rep::Table(t) => {
                let t = Arc::new(t.clone());
                Arc::new(move |s: &[Value], x: &[Value]| t.get(&(s.to_vec(), x.to_vec())).cloned().unwrap_or_default())
            }
        }
    }

    /// The executable relation of a compiled definition.
    pub fn from_plan(plan: Arc<Plan>, mode: Mode, face: Face) -> StepRelation {
        let f: StepFn = match mode {
            Mode::Deterministic => Arc::new(move |s: &[Value], x: &[Value]| {
                plan.eval_det(s, x).map(|r| Results::from([r])).unwrap_or_default()
            }),
            _ => Arc::new(move |s: &[Value], x: &[Value]| plan.eval_set(s, x, &|_| vec![Value::Bot]).unwrap_or_default()),
        };
        StepRelation { face, mode, rep: Rep::Exec(f) }
    }

    /// Neutral element of `∥`: no ports, one empty tuple.
    pub fn unit() -> StepRelation {
        let table = BTreeMap::from([((vec![], vec![]), Results::from([(vec![], vec![])]))]);
        StepRelation { face: Face::stateful(vec![], vec![], vec![], vec![]), mode: Mode::Deterministic, rep: Rep::Table(table) }
    }

    /// Neutral element of `·`: the I/O identity on `n` wires.
    pub fn io_identity(n: usize) -> StepRelation {
        let names: Vec<Ident> = (0..n).map(|i| Ident::new(&format!("a{i}"))).collect();
        StepRelation {
            face: Face::stateful(vec![], names.clone(), names, vec![]),
            mode: Mode::Deterministic,
            rep: Rep::Exec(Arc::new(|_: &[Value], x: &[Value]| Results::from([(x.to_vec(), vec![])]))),
        }
    }

    /// Neutral element of `⨟`: the state identity on `k` components.
    pub fn state_identity(k: usize) -> StepRelation {
        let names: Vec<Ident> = (0..k).map(|i| Ident::new(&format!("s{i}"))).collect();
        StepRelation {
            face: Face::stateful(names.clone(), vec![], vec![], names),
            mode: Mode::Deterministic,
            rep: Rep::Exec(Arc::new(|s: &[Value], _: &[Value]| Results::from([(vec![], s.to_vec())]))),
        }
    }

    fn combine(q: &StepRelation, r: &StepRelation, face: Face, f: StepFn, keys: impl FnOnce() -> Vec<Key>) -> StepRelation {
        let mode = q.mode.max(r.mode);
        let exec = StepRelation { face, mode, rep: Rep::Exec(f) };
        if q.is_table() && r.is_table() {
            exec.tabulate(keys())
        } else {
            exec
        }
    }

    /// `Q ∥ R`: side by side, `s, t / a, c ↦ b, d / s', t'`.
    pub fn compose_parallel(q: &StepRelation, r: &StepRelation) -> StepRelation {
        let (pq, pr) = (q.ports(), r.ports());
        let (fq, fr) = (q.step_fn(), r.step_fn());
        let f: StepFn = Arc::new(move |s: &[Value], x: &[Value]| {
            let mut out = Results::new();
            let (s1, s2) = s.split_at(pq.state.min(s.len()));
            let (x1, x2) = x.split_at(pq.ins.min(x.len()));
            if s2.len() != pr.state || x2.len() != pr.ins {
                return out;
            }
            for (b, s1_) in fq(s1, x1) {
                for (d, s2_) in fr(s2, x2) {
                    out.insert((concat(&b, &d), concat(&s1_, &s2_)));
                }
            }
            out
        });
        let face = face_concat(&q.face, &r.face, true, true, true);
        StepRelation::combine(q, r, face, f, || {
            let (kq, kr) = (q.keys().unwrap_or_default(), r.keys().unwrap_or_default());
            kq.iter()
                .flat_map(|(s1, x1)| kr.iter().map(move |(s2, x2)| (concat(s1, s2), concat(x1, x2))))
                .collect()
        })
    }

    /// `Q · R`: outputs of `Q` feed inputs of `R`, `s, t / a ↦ c / s', t'`.
    pub fn compose_io(q: &StepRelation, r: &StepRelation) -> Result<StepRelation, RelError> {
        let (pq, pr) = (q.ports(), r.ports());
        if pq.outs != pr.ins {
            return Err(RelError::Shape(format!("{} outputs feed {} inputs", pq.outs, pr.ins)));
        }
        let (fq, fr) = (q.step_fn(), r.step_fn());
        let f: StepFn = Arc::new(move |s: &[Value], x: &[Value]| {
            let mut out = Results::new();
            if s.len() != pq.state + pr.state {
                return out;
            }
            let (s1, s2) = s.split_at(pq.state);
            for (b, s1_) in fq(s1, x) {
                for (c, s2_) in fr(s2, &b) {
                    out.insert((c, concat(&s1_, &s2_)));
                }
            }
            out
        });
        let face = face_concat(&q.face, &r.face, true, false, false);
        Ok(StepRelation::combine(q, r, face, f, || {
            let (kq, sr) = (q.keys().unwrap_or_default(), r.states());
            kq.iter().flat_map(|(s1, x)| sr.iter().map(move |s2| (concat(s1, s2), x.clone()))).collect()
        }))
    }

    /// `Q ⨟ R`: the post-state of `Q` is the pre-state of `R`,
    /// `s / a, c ↦ b, d / s''`.
    pub fn compose_state(q: &StepRelation, r: &StepRelation) -> Result<StepRelation, RelError> {
        let (pq, pr) = (q.ports(), r.ports());
        if pq.state != pr.state {
            return Err(RelError::Shape(format!("state arities {} and {} differ", pq.state, pr.state)));
        }
        let (fq, fr) = (q.step_fn(), r.step_fn());
        let f: StepFn = Arc::new(move |s: &[Value], x: &[Value]| {
            let mut out = Results::new();
            if x.len() != pq.ins + pr.ins {
                return out;
            }
            let (a, c) = x.split_at(pq.ins);
            for (b, s_) in fq(s, a) {
                for (d, s__) in fr(&s_, c) {
                    out.insert((concat(&b, &d), s__));
                }
            }
            out
        });
        let mut face = face_concat(&q.face, &r.face, false, true, true);
        face.pre_state = q.face.pre_state.clone();
        face.init = q.face.init.clone();
        Ok(StepRelation::combine(q, r, face, f, || {
            let (kq, xr) = (q.keys().unwrap_or_default(), r.input_values());
            kq.iter().flat_map(|(s, a)| xr.iter().map(move |c| (s.clone(), concat(a, c)))).collect()
        }))
    }

    /// The `n`-fold state composition `R ⨟ … ⨟ R`.
    pub fn unroll(r: &StepRelation, n: usize) -> Result<StepRelation, RelError> {
        assert!(n > 0, "unrolling factor must be positive");
        let mut acc = r.clone();
        for _ in 1..n {
            acc = StepRelation::compose_state(&acc, r)?;
        }
        Ok(acc)
    }

    /// Drops undefined inputs and every result with an undefined output.
    pub fn externalize(&self) -> StepRelation {
        let keep = |res: Results| -> Results { res.into_iter().filter(|(y, _)| y.iter().all(Value::is_defined)).collect() };
        let rep = match &self.rep {
            Rep::Table(t) => Rep::Table(
                t.iter()
                    .filter(|((_, x), _)| x.iter().all(Value::is_defined))
                    .map(|(k, r)| (k.clone(), keep(r.clone())))
                    .collect(),
            ),
            Rep::Exec(f) => {
                let f = f.clone();
                Rep::Exec(Arc::new(move |s: &[Value], x: &[Value]| {
                    if x.iter().all(Value::is_defined) {
                        keep(f(s, x))
                    } else {
                        Results::new()
                    }
                }))
            }
        };
        StepRelation { face: self.face.clone(), mode: Mode::External, rep }
    }

    /// Restricts a tabulated relation to `d`, checking that it is a function
    /// there with post-states in `d`.
    pub fn restrict_deterministic(&self, d: &AcceptableStateSpace) -> Result<StepRelation, DeterminismError> {
        let Rep::Table(t) = &self.rep else {
            panic!("restrict_deterministic needs a tabulated relation");
        };
        let mut out = BTreeMap::new();
        for ((s, x), res) in t {
            if !d.contains(s) || !x.iter().all(Value::is_defined) {
                continue;
            }
            if res.len() != 1 {
                return Err(DeterminismError::Count { s: s.clone(), x: x.clone(), count: res.len() });
            }
            let (_, s_) = res.iter().next().expect("one result");
            if !d.contains(s_) {
                return Err(DeterminismError::Escaping { s: s.clone(), x: x.clone(), s_: s_.clone() });
            }
            out.insert((s.clone(), x.clone()), res.clone());
        }
        Ok(StepRelation { face: self.face.clone(), mode: Mode::Deterministic, rep: Rep::Table(out) })
    }

    /// Runs a deterministic relation over a finite input stream; `None` as
    /// soon as a step has no unique result.
    pub fn run(&self, s0: &[Value], xs: &[Vec<Value>]) -> Option<(Vec<Vec<Value>>, Vec<Value>)> {
        let mut s = s0.to_vec();
        let mut ys = Vec::with_capacity(xs.len());
        for x in xs {
            let res = self.image(&s, x);
            if res.len() != 1 {
                return None;
            }
            let (y, s_) = res.into_iter().next()?;
            ys.push(y);
            s = s_;
        }
        Some((ys, s))
    }
}

/// Enumerates the internal relation of a compiled definition: every
/// pre-state and input tuple over `dom`, evaluated in dependency order.
pub fn enumerate_relation(prog: &NormalProgram, name: &Ident, dom: &FiniteDomain) -> Result<StepRelation, RelError> {
    let c = prog.get(name).ok_or_else(|| EvalError::UnknownDefinition(name.clone()))?;
    let plan = Plan::build(prog, name)?;
    let face = c.flat.face.clone();
    let sources: Vec<Ident> = face.pre_state.iter().chain(&face.inputs).cloned().collect();
    let k = face.pre_state.len();
    let mut table = BTreeMap::new();
    for t in dom.tuples(&sources)? {
        let (s, x) = t.split_at(k);
        let res = plan.eval_set(s, x, &|v| dom.values(v))?;
        table.insert((s.to_vec(), x.to_vec()), res);
    }
    Ok(StepRelation { face, mode: Mode::Internal, rep: Rep::Table(table) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: f64) -> Value {
        Value::num(v)
    }

    fn accumulator() -> StepRelation {
        let f: StepFn = Arc::new(|s: &[Value], x: &[Value]| {
            let v = s[0].as_num().unwrap() + x[0].as_num().unwrap();
            Results::from([(vec![n(v)], vec![n(v)])])
        });
        StepRelation {
            face: Face::stateful(vec![Ident::new("s")], vec![Ident::new("x")], vec![Ident::new("y")], vec![Ident::new("s'")]),
            mode: Mode::Deterministic,
            rep: Rep::Exec(f),
        }
    }

    #[test]
    fn neutral_elements() {
        let q = accumulator();
        let qj = StepRelation::compose_io(&q, &StepRelation::io_identity(1)).unwrap();
        let kq = StepRelation::compose_state(&StepRelation::state_identity(1), &q).unwrap();
        let x = [vec![n(1.0)], vec![n(2.0)], vec![n(3.0)]];
        assert_eq!(qj.run(&[n(0.0)], &x), q.run(&[n(0.0)], &x));
        let direct = q.image(&[n(5.0)], &[n(1.0)]);
        assert_eq!(kq.image(&[n(5.0)], &[n(1.0)]), direct);
        let i = StepRelation::compose_parallel(&StepRelation::unit(), &q);
        assert_eq!(i.image(&[n(5.0)], &[n(1.0)]), direct);
    }

    #[test]
    fn unroll_matches_repeated_steps() {
        let q = accumulator();
        let q2 = StepRelation::unroll(&q, 2).unwrap();
        let r = q2.image(&[n(0.0)], &[n(1.0), n(2.0)]);
        assert_eq!(r, Results::from([(vec![n(1.0), n(3.0)], vec![n(3.0)])]));
    }

    #[test]
    fn externalize_drops_undefined_outputs() {
        let table = BTreeMap::from([
            ((vec![], vec![n(1.0)]), Results::from([(vec![Value::Bot], vec![]), (vec![n(3.0)], vec![])])),
            ((vec![], vec![Value::Bot]), Results::from([(vec![Value::Bot], vec![])])),
        ]);
        let r = StepRelation { face: Face::default(), mode: Mode::Internal, rep: Rep::Table(table) };
        let e = r.externalize();
        assert_eq!(e.keys().unwrap(), vec![(vec![], vec![n(1.0)])]);
        assert_eq!(e.image(&[], &[n(1.0)]), Results::from([(vec![n(3.0)], vec![])]));
    }
}
