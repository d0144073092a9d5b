//! Completeness and overlap analysis of pattern matching.

use std::collections::BTreeSet;
use std::fmt;

use super::satisfy::{satisfy, Assignment, OpEval};
use super::third::{reduce_to_third, Literal, ThirdBox};
use crate::ast::{Face, Ident, OpRef, Span, Vars};
use crate::normalize::{Compiled, FlatBox, NormalProgram, Rhs, Signature};
use crate::relsem::{DomainError, EvalError, FiniteDomain, Value};

/// Values of some face sources, in face order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Valuation(pub Vec<(Ident, Value)>);

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseReport {
    pub span: Span,
    pub scrutinee: Vars,
    /// Face sources the scrutinee depends on.
    pub cone: Vars,
    pub branches: usize,
    pub missing: BTreeSet<Valuation>,
    pub overlapping: BTreeSet<Valuation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchReport {
    pub def: Ident,
    pub cases: Vec<CaseReport>,
    pub missing: BTreeSet<Valuation>,
    pub overlapping: BTreeSet<Valuation>,
    /// Variables read or exported without being assigned; they range over
    /// the whole domain.
    pub unconstrained: Vars,
}

impl MatchReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.overlapping.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Face sources each variable transitively depends on.
fn source_cone(b: &FlatBox, roots: &[Ident]) -> Vars {
    let mut seen: BTreeSet<Ident> = BTreeSet::new();
    let mut stack: Vec<Ident> = roots.to_vec();
    while let Some(v) = stack.pop() {
        if !seen.insert(v.clone()) {
            continue;
        }
        if let Some(i) = b.writer(&v) {
            stack.extend(b.assigns[i].rhs.uses().into_iter().cloned());
        }
    }
    b.face.pre_state.iter().chain(&b.face.inputs).filter(|v| seen.contains(*v)).cloned().collect()
}

fn unconstrained(b: &FlatBox) -> Vars {
    let mut out = Vec::new();
    let mut note = |v: &Ident| {
        if !b.face.is_source(v) && b.writer(v).is_none() && !out.contains(v) {
            out.push(v.clone());
        }
    };
    for a in &b.assigns {
        a.rhs.uses().into_iter().for_each(&mut note);
    }
    b.face.outputs.iter().chain(&b.face.post_state).for_each(note);
    out
}

/// Refines `base` with a domain for every face source used only as the
/// argument of inverse constructors: every declared constructor term, with
/// components from the base carrier.
pub fn infer_domain(c: &Compiled, sig: &Signature, base: &FiniteDomain) -> FiniteDomain {
    let rhss: Vec<&Rhs> = c.flat.assigns.iter().map(|a| &a.rhs).collect();
    infer_from_uses(&c.flat.face, &rhss, sig, base)
}

/// [`infer_domain`] for a third-form box: uses are the right-hand sides
/// of its assignment literals.
pub fn infer_third_domain(t: &ThirdBox, sig: &Signature, base: &FiniteDomain) -> FiniteDomain {
    let rhss: Vec<&Rhs> = t
        .set
        .clauses
        .iter()
        .flatten()
        .filter_map(|l| match l {
            Literal::Assign { rhs, .. } => Some(rhs),
            _ => None,
        })
        .collect();
    infer_from_uses(&t.face, &rhss, sig, base)
}

fn infer_from_uses(face: &Face, rhss: &[&Rhs], sig: &Signature, base: &FiniteDomain) -> FiniteDomain {
    let mut dom = base.clone();
    let mut terms = Vec::new();
    for k in &sig.cons_order {
        let mut args: Vec<Vec<Value>> = vec![Vec::new()];
        for _ in 0..sig.conses[k] {
            args = args
                .into_iter()
                .flat_map(|p| {
                    base.carrier.iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(x.clone());
                        q
                    })
                })
                .collect();
        }
        terms.extend(args.into_iter().map(|a| Value::cons(k.as_str(), a)));
    }
    for v in face.pre_state.iter().chain(&face.inputs) {
        if dom.vars.contains_key(v) {
            continue;
        }
        let uses: Vec<&&Rhs> = rhss.iter().filter(|r| r.uses().contains(&v)).collect();
        let only_inv = uses.iter().all(|r| matches!(r, Rhs::Op { op: OpRef::ConsInv(_), .. }));
        if !uses.is_empty() && only_inv {
            dom.vars.insert(v.clone(), terms.clone());
        }
    }
    dom
}

/// For each all-defined valuation of the face sources over `dom`, counts the
/// alternatives of every `case` whose controls are all defined while the
/// scrutinee is defined. Zero is a missing case, two or more an overlap.
/// Valuations are reported restricted to the sources the scrutinee depends on.
pub fn analyze_matching(c: &Compiled, prog: &NormalProgram, dom: &FiniteDomain) -> Result<MatchReport, MatchError> {
    let third = reduce_to_third(&c.flat);
    let ev = OpEval::new(prog)?;
    let face = &c.flat.face;
    let sources: Vars = face.pre_state.iter().chain(&face.inputs).cloned().collect();
    let defined = dom.clone().without_bot();
    let cones: Vec<Vars> = c.cases.iter().map(|k| source_cone(&c.flat, &k.scrutinee)).collect();
    let mut cases: Vec<CaseReport> = c
        .cases
        .iter()
        .zip(&cones)
        .map(|(k, cone)| CaseReport {
            span: k.span,
            scrutinee: k.scrutinee.clone(),
            cone: cone.clone(),
            branches: k.branches.len(),
            missing: BTreeSet::new(),
            overlapping: BTreeSet::new(),
        })
        .collect();
    for tuple in defined.tuples(&sources)? {
        let fixed: Assignment = sources.iter().cloned().zip(tuple).collect();
        let sols = satisfy(&third, dom, &fixed, &ev)?;
        for sol in &sols {
            for (k, rep) in c.cases.iter().zip(cases.iter_mut()) {
                let get = |v: &Ident| sol.get(v).cloned().unwrap_or(Value::Bot);
                if !k.scrutinee.iter().all(|v| get(v).is_defined()) {
                    continue;
                }
                let matched = k.branches.iter().filter(|ctl| ctl.iter().all(|v| get(v).is_defined())).count();
                let val = Valuation(rep.cone.iter().map(|v| (v.clone(), fixed[v].clone())).collect());
                if matched == 0 {
                    rep.missing.insert(val);
                } else if matched >= 2 {
                    rep.overlapping.insert(val);
                }
            }
        }
    }
    let missing = cases.iter().flat_map(|r| r.missing.iter().cloned()).collect();
    let overlapping = cases.iter().flat_map(|r| r.overlapping.iter().cloned()).collect();
    Ok(MatchReport { def: c.name.clone(), cases, missing, overlapping, unconstrained: unconstrained(&c.flat) })
}

/// Default domain for analysis: `base` refined by [`infer_domain`].
pub fn default_analysis_domain(c: &Compiled, prog: &NormalProgram, base: &FiniteDomain) -> FiniteDomain {
    infer_domain(c, &prog.sig, base)
}
