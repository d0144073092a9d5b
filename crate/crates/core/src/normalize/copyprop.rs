//! Copy propagation on flat second-form boxes.

use std::collections::{BTreeMap, BTreeSet};

use super::flat::{FlatBox, Rhs};
use crate::ast::{Ident, OpRef};

/// Variable renames performed by copy propagation, old name to new name.
pub type Renames = BTreeMap<Ident, Ident>;

/// Follows a rename chain to its end.
pub fn resolve(renames: &Renames, v: &Ident) -> Ident {
    let mut cur = v.clone();
    let mut steps = 0;
    while let Some(n) = renames.get(&cur) {
        cur = n.clone();
        steps += 1;
        if steps > renames.len() {
            break;
        }
    }
    cur
}

fn rename_everywhere(b: &mut FlatBox, from: &Ident, to: &Ident) {
    let map: BTreeMap<Ident, Ident> = [(from.clone(), to.clone())].into();
    let sub = |v: &mut Ident| {
        if v == from {
            *v = to.clone();
        }
    };
    for a in &mut b.assigns {
        a.targets.iter_mut().for_each(sub);
        a.post_state.iter_mut().for_each(sub);
        a.rhs.rename(&map);
    }
    b.face.post_state.iter_mut().for_each(sub);
    b.face.outputs.iter_mut().for_each(sub);
    b.binders.retain(|v| v != from);
}

fn used_in_rhs(b: &FlatBox, v: &Ident) -> bool {
    b.assigns.iter().any(|a| a.rhs.uses().contains(&v))
}

/// One rewrite step: the index of the copy to drop and the rename it implies.
fn find_step(b: &FlatBox) -> Option<(usize, Ident, Ident)> {
    let bound: BTreeSet<&Ident> = b.binders.iter().collect();
    let is_local = |v: &Ident| bound.contains(v) && !b.face.contains(v);
    for (i, a) in b.assigns.iter().enumerate() {
        let (Rhs::Var(src), [dst], []) = (&a.rhs, a.targets.as_slice(), a.post_state.as_slice()) else {
            continue;
        };
        if src == dst {
            continue;
        }
        if is_local(dst) {
            return Some((i, dst.clone(), src.clone()));
        }
        let sinks_to_face = b.face.outputs.contains(dst) || b.face.post_state.contains(dst);
        if sinks_to_face && !b.face.is_source(dst) && is_local(src) {
            return Some((i, src.clone(), dst.clone()));
        }
        let generated_post = dst.is_generated()
            && b.face.post_state.contains(dst)
            && !b.face.outputs.contains(dst)
            && !b.face.is_source(dst)
            && !used_in_rhs(b, dst);
        if generated_post && b.face.outputs.contains(src) && !b.face.is_source(src) {
            return Some((i, dst.clone(), src.clone()));
        }
    }
    None
}

/// Merges `phi(phi(a, b), c)` into `phi(a, b, c)` when the inner result is a
/// local variable read exactly once.
fn flatten_phi(b: &mut FlatBox) -> bool {
    let bound: BTreeSet<Ident> = b.binders.iter().cloned().collect();
    for i in 0..b.assigns.len() {
        let Rhs::Op { op: OpRef::Phi, args, .. } = &b.assigns[i].rhs else { continue };
        for (k, arg) in args.iter().enumerate() {
            if !bound.contains(arg) || b.face.contains(arg) {
                continue;
            }
            let reads = b.assigns.iter().filter(|a| a.rhs.uses().contains(&arg)).count();
            if reads != 1 {
                continue;
            }
            let Some(j) = b.writer(arg) else { continue };
            let Rhs::Op { op: OpRef::Phi, args: inner, .. } = &b.assigns[j].rhs else { continue };
            if j == i {
                continue;
            }
            let arg = arg.clone();
            let inner = inner.clone();
            if let Rhs::Op { args, .. } = &mut b.assigns[i].rhs {
                args.splice(k..=k, inner);
            }
            b.assigns.remove(j);
            b.binders.retain(|v| *v != arg);
            return true;
        }
    }
    false
}

/// Inlines copies into local variables, retargets local results written only
/// to feed a face output, and merges nested phony nodes. Face inputs and
/// pre-state are never renamed.
pub fn copy_propagate(mut b: FlatBox) -> (FlatBox, Renames) {
    let mut renames = Renames::new();
    while let Some((i, from, to)) = find_step(&b) {
        b.assigns.remove(i);
        rename_everywhere(&mut b, &from, &to);
        for v in renames.values_mut() {
            if *v == from {
                *v = to.clone();
            }
        }
        renames.insert(from, to);
    }
    while flatten_phi(&mut b) {}
    let live: BTreeSet<Ident> = b
        .assigns
        .iter()
        .flat_map(|a| a.assigned().chain(a.rhs.uses()).cloned().collect::<Vec<_>>())
        .collect();
    b.binders.retain(|v| live.contains(v));
    let writers: Vec<Option<usize>> = b.binders.iter().map(|v| b.writer(v)).collect();
    let mut keyed: Vec<(Option<usize>, Ident)> = writers.into_iter().zip(b.binders.drain(..)).collect();
    keyed.sort_by_key(|(w, _)| w.unwrap_or(usize::MAX));
    b.binders = keyed.into_iter().map(|(_, v)| v).collect();
    (b, renames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{vars, Face};
    use crate::normalize::flat::FlatAssign;

    fn v(n: &str) -> Ident {
        Ident::new(n)
    }

    fn copy(t: &str, s: &str) -> FlatAssign {
        FlatAssign::new(vec![v(t)], Rhs::Var(v(s)))
    }

    fn call(t: &str, f: &str, a: &[&str]) -> FlatAssign {
        FlatAssign::new(vec![v(t)], Rhs::Op { op: OpRef::Fun(v(f)), state: vec![], args: vars(a) })
    }

    #[test]
    fn single_copy_chain_is_inlined() {
        let b = FlatBox {
            face: Face::io(vars(&["x"]), vars(&["y"])),
            binders: vars(&["v"]),
            assigns: vec![copy("v", "x"), call("y", "f", &["v"])],
        };
        let (out, renames) = copy_propagate(b);
        assert!(out.binders.is_empty());
        assert_eq!(out.assigns, vec![call("y", "f", &["x"])]);
        assert_eq!(resolve(&renames, &v("v")), v("x"));
    }

    #[test]
    fn face_copy_is_kept() {
        let b = FlatBox { face: Face::io(vars(&["x"]), vars(&["y"])), binders: vec![], assigns: vec![copy("y", "x")] };
        let (out, _) = copy_propagate(b.clone());
        assert_eq!(out, b);
    }

    #[test]
    fn local_result_is_retargeted_to_output() {
        let b = FlatBox {
            face: Face::io(vars(&["x"]), vars(&["y"])),
            binders: vars(&["a"]),
            assigns: vec![call("a", "f", &["x"]), copy("y", "a")],
        };
        let (out, _) = copy_propagate(b);
        assert_eq!(out.assigns, vec![call("y", "f", &["x"])]);
    }

    #[test]
    fn nested_phi_is_flattened() {
        let phi = |t: &str, a: &[&str]| FlatAssign::new(vec![v(t)], Rhs::Op { op: OpRef::Phi, state: vec![], args: vars(a) });
        let b = FlatBox {
            face: Face::io(vars(&["a", "b", "c"]), vars(&["y"])),
            binders: vars(&["m"]),
            assigns: vec![phi("m", &["a", "b"]), phi("y", &["m", "c"])],
        };
        let (out, _) = copy_propagate(b);
        assert_eq!(out.assigns, vec![phi("y", &["a", "b", "c"])]);
        assert!(out.binders.is_empty());
    }
}
