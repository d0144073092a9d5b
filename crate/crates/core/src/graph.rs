//! Data-flow graphs of flat boxes in DOT syntax.
//!
//! Every non-copy assignment is a box, every variable an edge from its
//! producer to its consumers. Copies are drawn as plain wires. Control
//! wires are dashed. Pre-state ports sit on the top rank and post-state
//! ports on the bottom rank.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::ast::{Ident, OpRef};
use crate::normalize::{FlatBox, Rhs};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum End {
    Pre(usize),
    In(usize),
    Node(usize),
}

impl End {
    fn id(&self) -> String {
        match self {
            End::Pre(i) => format!("pre{i}"),
            End::In(i) => format!("in{i}"),
            End::Node(i) => format!("n{i}"),
        }
    }
}

fn quote(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}

fn label(rhs: &Rhs) -> String {
    match rhs {
        Rhs::Var(_) => "=".into(),
        Rhs::Lit(v) => v.to_string(),
        Rhs::Op { op, .. } => match op {
            OpRef::Cons(k) => format!("{k}"),
            OpRef::ConsInv(k) => format!("{k}⁻¹"),
            OpRef::Gamma => "γ".into(),
            OpRef::Phi => "φ".into(),
            OpRef::Delta(_) => "δ".into(),
            OpRef::Fun(f) => f.to_string(),
        },
    }
}

/// Variables carrying control values: control outputs of inverse
/// constructors and control inputs of guards, closed under copies.
fn controls(b: &FlatBox) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    for a in &b.assigns {
        match &a.rhs {
            Rhs::Op { op: OpRef::ConsInv(_), .. } => {
                out.extend(a.targets.last().cloned());
            }
            Rhs::Op { op: OpRef::Gamma, args, .. } => out.extend(args[1..].iter().cloned()),
            _ => {}
        }
    }
    loop {
        let before = out.len();
        for a in &b.assigns {
            if let Rhs::Var(x) = &a.rhs {
                if out.contains(x) || out.contains(&a.targets[0]) {
                    out.insert(x.clone());
                    out.insert(a.targets[0].clone());
                }
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

/// DOT rendering of `b` as a digraph named `name`.
pub fn to_dot(b: &FlatBox, name: &str) -> String {
    let face = &b.face;
    let mut producer: BTreeMap<Ident, End> = BTreeMap::new();
    for (i, v) in face.pre_state.iter().enumerate() {
        producer.insert(v.clone(), End::Pre(i));
    }
    for (i, v) in face.inputs.iter().enumerate() {
        producer.insert(v.clone(), End::In(i));
    }
    for (i, a) in b.assigns.iter().enumerate() {
        if !matches!(a.rhs, Rhs::Var(_)) {
            for v in a.assigned() {
                producer.insert(v.clone(), End::Node(i));
            }
        }
    }
    // Resolve copies to the producer of their source.
    loop {
        let mut changed = false;
        for a in &b.assigns {
            if let Rhs::Var(x) = &a.rhs {
                if let Some(p) = producer.get(x).cloned() {
                    if producer.get(&a.targets[0]) != Some(&p) {
                        producer.insert(a.targets[0].clone(), p);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let ctl = controls(b);
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", quote(name));
    let _ = writeln!(s, "  rankdir=TB;");
    let _ = writeln!(s, "  node [fontname=\"Helvetica\"];");
    let port = |s: &mut String, id: String, v: &Ident| {
        let _ = writeln!(s, "  {id} [shape=plaintext, label={}];", quote(v.as_str()));
    };
    if !face.pre_state.is_empty() {
        let _ = writeln!(s, "  {{ rank=source;");
        for (i, v) in face.pre_state.iter().enumerate() {
            port(&mut s, format!("pre{i}"), v);
        }
        let _ = writeln!(s, "  }}");
    }
    for (i, v) in face.inputs.iter().enumerate() {
        port(&mut s, format!("in{i}"), v);
    }
    for (i, a) in b.assigns.iter().enumerate() {
        if !matches!(a.rhs, Rhs::Var(_)) {
            let _ = writeln!(s, "  n{i} [shape=box, label={}];", quote(&label(&a.rhs)));
        }
    }
    for (i, v) in face.outputs.iter().enumerate() {
        port(&mut s, format!("out{i}"), v);
    }
    if !face.post_state.is_empty() {
        let _ = writeln!(s, "  {{ rank=sink;");
        for (i, v) in face.post_state.iter().enumerate() {
            port(&mut s, format!("post{i}"), v);
        }
        let _ = writeln!(s, "  }}");
    }
    let edge = |s: &mut String, v: &Ident, to: String, extra: &str| match producer.get(v) {
        Some(p) => {
            let style = if ctl.contains(v) { ", style=dashed" } else { "" };
            let _ = writeln!(s, "  {} -> {to} [label={}{style}{extra}];", p.id(), quote(v.as_str()));
        }
        None => {
            let _ = writeln!(s, "  {} [shape=point];", quote(&format!("free {v}")));
            let _ = writeln!(s, "  {} -> {to} [label={}];", quote(&format!("free {v}")), quote(v.as_str()));
        }
    };
    for (i, a) in b.assigns.iter().enumerate() {
        if let Rhs::Op { state, args, .. } = &a.rhs {
            for v in state {
                edge(&mut s, v, format!("n{i}"), ", headport=n");
            }
            for v in args {
                edge(&mut s, v, format!("n{i}"), "");
            }
        }
    }
    for (i, v) in face.outputs.iter().enumerate() {
        edge(&mut s, v, format!("out{i}"), "");
    }
    for (i, v) in face.post_state.iter().enumerate() {
        edge(&mut s, v, format!("post{i}"), ", tailport=s");
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_source;
    use crate::normalize::{normalize_program, NormalizeOptions};

    fn dot(src: &str, def: &str) -> String {
        let db = load_source(src).unwrap();
        let prog = normalize_program(&db, NormalizeOptions::default()).unwrap();
        to_dot(&prog.get(&Ident::new(def)).unwrap().flat, def)
    }

    fn count(s: &str, pat: &str) -> usize {
        s.matches(pat).count()
    }

    #[test]
    fn identity_is_one_edge() {
        let d = dot("fun id = [x -> y where y := x]", "id");
        assert_eq!(count(&d, " -> "), 1);
        assert!(d.contains("in0 -> out0"));
        assert_eq!(count(&d, "shape=box"), 0);
    }

    #[test]
    fn sample_and_hold_boxes() {
        let d = dot(crate::exec::corpus::SAH.text, "sah");
        assert_eq!(count(&d, "⁻¹\""), 2);
        assert_eq!(count(&d, "label=\"γ\""), 2);
        assert_eq!(count(&d, "label=\"φ\""), 1);
        assert_eq!(count(&d, "style=dashed"), 2);
    }

    #[test]
    fn delay_crosses_state_ports() {
        let d = dot(crate::exec::corpus::DELAY.text, "delay");
        assert!(d.contains("pre0 -> out0"));
        assert!(d.contains("in0 -> post0"));
    }
}
