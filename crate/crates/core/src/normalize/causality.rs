//! Dependency ordering of flat assignments.

use std::collections::BTreeSet;

use super::flat::FlatBox;
use crate::ast::{BoxAbs, Ident, Vars};

/// Topological order of the assignments of a flat box, grouped in layers of
/// mutually independent assignments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependencyOrder {
    pub order: Vec<usize>,
    pub layers: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("instantaneous feedback through {}", fmt_cycle(.cycle))]
pub struct CausalityError {
    pub cycle: Vars,
}

fn fmt_cycle(c: &[Ident]) -> String {
    c.iter().map(Ident::as_str).collect::<Vec<_>>().join(" -> ")
}

/// For each assignment, the assignments whose results it reads.
fn dependencies(b: &FlatBox) -> Vec<BTreeSet<usize>> {
    b.assigns
        .iter()
        .map(|a| a.rhs.uses().into_iter().filter_map(|v| b.writer(v)).collect())
        .collect()
}

/// Layered Kahn ordering; within a layer, assignments keep source order.
pub fn causality_check(b: &FlatBox) -> Result<DependencyOrder, CausalityError> {
    let deps = dependencies(b);
    let n = deps.len();
    let mut done = vec![false; n];
    let mut out = DependencyOrder::default();
    while out.order.len() < n {
        let layer: Vec<usize> = (0..n)
            .filter(|&i| !done[i] && deps[i].iter().all(|&j| done[j]))
            .collect();
        if layer.is_empty() {
            return Err(CausalityError { cycle: find_cycle(b, &deps, &done) });
        }
        for &i in &layer {
            done[i] = true;
        }
        out.order.extend(&layer);
        out.layers.push(layer);
    }
    Ok(out)
}

/// Variables along one dependency cycle among the unfinished assignments.
fn find_cycle(b: &FlatBox, deps: &[BTreeSet<usize>], done: &[bool]) -> Vars {
    let start = (0..deps.len()).find(|&i| !done[i]).unwrap_or(0);
    let mut path = vec![start];
    let mut cur = start;
    loop {
        let next = deps[cur].iter().copied().find(|&j| !done[j]).unwrap_or(cur);
        if let Some(pos) = path.iter().position(|&p| p == next) {
            let cyc = &path[pos..];
            let mut vars = Vec::new();
            for (k, &i) in cyc.iter().enumerate() {
                let reader = cyc[(k + cyc.len() - 1) % cyc.len()];
                let read: Vec<&Ident> = b.assigns[reader].rhs.uses();
                let v = b.assigns[i]
                    .assigned()
                    .find(|t| read.contains(t))
                    .or_else(|| b.assigns[i].assigned().next());
                if let Some(v) = v {
                    vars.push(v.clone());
                }
            }
            vars.reverse();
            return vars;
        }
        path.push(next);
        cur = next;
    }
}

/// Causality check of a source-level box in flat second form.
pub fn check_box_causality(b: &BoxAbs) -> Result<DependencyOrder, super::NormalizeError> {
    let flat = FlatBox::from_box(b)?;
    Ok(causality_check(&flat)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{vars, Face, OpRef};
    use crate::normalize::flat::{FlatAssign, Rhs};

    fn v(n: &str) -> Ident {
        Ident::new(n)
    }

    fn op(t: &str, op: OpRef, a: &[&str]) -> FlatAssign {
        FlatAssign::new(vec![v(t)], Rhs::Op { op, state: vec![], args: vars(a) })
    }

    #[test]
    fn sah_second_form_order() {
        let b = FlatBox {
            face: Face::stateful(vars(&["s"]), vars(&["x", "t"]), vars(&["y"]), vars(&["y"])),
            binders: vars(&["c", "d", "v", "w"]),
            assigns: vec![
                op("c", OpRef::ConsInv(v("S")), &["t"]),
                op("v", OpRef::Gamma, &["x", "c"]),
                op("d", OpRef::ConsInv(v("H")), &["t"]),
                op("w", OpRef::Gamma, &["s", "d"]),
                op("y", OpRef::Phi, &["v", "w"]),
            ],
        };
        let ord = causality_check(&b).unwrap();
        let names: Vec<&str> = ord.order.iter().map(|&i| b.assigns[i].targets[0].as_str()).collect();
        assert_eq!(names, ["c", "d", "v", "w", "y"]);
        assert_eq!(ord.layers.len(), 3);
    }

    #[test]
    fn self_dependency_is_a_cycle() {
        let b = FlatBox {
            face: Face::io(vars(&["x"]), vars(&["y"])),
            binders: vec![],
            assigns: vec![op("y", OpRef::Fun(v("f")), &["y"])],
        };
        assert_eq!(causality_check(&b).unwrap_err().cycle, vars(&["y"]));
    }

    #[test]
    fn state_breaks_the_loop() {
        let b = FlatBox {
            face: Face::stateful(vars(&["t"]), vars(&["x"]), vars(&["y"]), vars(&["t2"])),
            binders: vec![],
            assigns: vec![
                FlatAssign::new(vars(&["y"]), Rhs::Var(v("t"))),
                FlatAssign::new(vars(&["t2"]), Rhs::Var(v("y"))),
            ],
        };
        assert_eq!(causality_check(&b).unwrap().order, vec![0, 1]);
    }

    #[test]
    fn two_cycle_reports_both_variables() {
        let b = FlatBox {
            face: Face::io(vars(&["x"]), vars(&["y"])),
            binders: vars(&["a"]),
            assigns: vec![op("a", OpRef::Fun(v("f")), &["y"]), op("y", OpRef::Fun(v("f")), &["a"])],
        };
        let mut c = causality_check(&b).unwrap_err().cycle;
        c.sort();
        assert_eq!(c, vars(&["a", "y"]));
    }
}
