//! Whole-program normalization to second form.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::causality::{causality_check, DependencyOrder};
use super::copyprop::{copy_propagate, resolve};
use super::flat::{FlatBox, Rhs};
use super::rewrite::{CalleeInfo, CaseInfo, Rewriter};
use super::NormalizeError;
use crate::ast::{Abs, Builtin, FormTag, FunDef, Ident, OpRef, Shape};
use crate::frontend::ProgramDB;
use crate::relsem::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormalizeOptions {
    pub copy_propagation: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { copy_propagation: true }
    }
}

/// A definition in flat second form with its evaluation order.
#[derive(Clone, Debug, PartialEq)]
pub struct Compiled {
    pub name: Ident,
    pub flat: FlatBox,
    pub order: DependencyOrder,
    /// Pattern-matching sites, in the order their `case` was rewritten.
    pub cases: Vec<CaseInfo>,
    pub source_form: FormTag,
}

impl Compiled {
    pub fn shape(&self) -> Shape {
        let f = &self.flat.face;
        Shape::new(f.pre_state.len(), f.inputs.len(), f.outputs.len())
    }
}

/// Declaration tables needed to evaluate compiled definitions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Signature {
    pub conses: BTreeMap<Ident, usize>,
    /// Constructor names in declaration order.
    pub cons_order: Vec<Ident>,
    pub prims: BTreeMap<Ident, Builtin>,
}

impl Signature {
    pub fn from_db(db: &ProgramDB) -> Signature {
        Signature {
            conses: db.conses().map(|c| (c.name.clone(), c.arity)).collect(),
            cons_order: db.conses().map(|c| c.name.clone()).collect(),
            prims: db
                .decls()
                .iter()
                .filter_map(|d| match d {
                    crate::ast::Declaration::Prim(p) => Some((p.name.clone(), p.builtin.clone())),
                    _ => None,
                })
                .collect(),
        }
    }
}

/// A program whose first- and second-form definitions are compiled; third
/// form and mixed definitions are listed but not compiled.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormalProgram {
    pub sig: Signature,
    pub defs: BTreeMap<Ident, Arc<Compiled>>,
    /// Compiled definition names in program order.
    pub order: Vec<Ident>,
    pub skipped: Vec<(Ident, FormTag)>,
}

impl NormalProgram {
    pub fn get(&self, name: &Ident) -> Option<&Arc<Compiled>> {
        self.defs.get(name)
    }

    /// The named definition, or the last compiled one.
    pub fn select(&self, name: Option<&str>) -> Option<&Arc<Compiled>> {
        match name {
            Some(n) => self.defs.get(&Ident::new(n)),
            None => self.order.last().and_then(|n| self.defs.get(n)),
        }
    }
}

struct Env<'a> {
    db: &'a ProgramDB,
    compiled: &'a BTreeMap<Ident, Arc<Compiled>>,
}

impl CalleeInfo for Env<'_> {
    fn shape(&self, name: &Ident) -> Option<Shape> {
        self.compiled.get(name).map(|c| c.shape()).or_else(|| self.db.shape_of(name))
    }

    fn cons_arity(&self, name: &Ident) -> Option<usize> {
        self.db.cons(name).map(|c| c.arity)
    }

    fn init(&self, name: &Ident) -> Vec<Option<Value>> {
        self.compiled.get(name).map(|c| c.flat.face.init.clone()).unwrap_or_default()
    }
}

fn in_def(def: &FunDef, e: impl Into<NormalizeError>) -> NormalizeError {
    NormalizeError::InDef { def: def.name.clone(), source: Box::new(e.into()) }
}

/// Checks that every user-function call targets a compiled definition with
/// its state passed explicitly.
fn check_calls(
    def: &FunDef,
    flat: &FlatBox,
    db: &ProgramDB,
    compiled: &BTreeMap<Ident, Arc<Compiled>>,
) -> Result<(), NormalizeError> {
    for a in &flat.assigns {
        if let Rhs::Op { op: OpRef::Fun(f), state, .. } = &a.rhs {
            if db.prim(f).is_some() {
                continue;
            }
            let callee = compiled
                .get(f)
                .ok_or_else(|| NormalizeError::UncompilableCallee { def: def.name.clone(), callee: f.clone() })?;
            if callee.flat.face.pre_state.len() != state.len() {
                return Err(NormalizeError::NotCompilable { def: def.name.clone(), form: FormTag::Second });
            }
        }
    }
    Ok(())
}

/// Compiles one definition given the already compiled earlier ones.
pub fn compile_def(
    def: &FunDef,
    db: &ProgramDB,
    compiled: &BTreeMap<Ident, Arc<Compiled>>,
    opts: NormalizeOptions,
) -> Result<Compiled, NormalizeError> {
    let form = def.form.unwrap_or_else(|| crate::ast::classify_abs(&def.abs));
    let (flat, cases) = match (form, &def.abs) {
        (FormTag::First, abs) => {
            let env = Env { db, compiled };
            let mut rw = Rewriter::new(&env);
            let boxed = rw.rewrite_abs(abs).map_err(|e| in_def(def, e))?;
            let flat = FlatBox::from_box(&boxed).map_err(|e| in_def(def, e))?;
            let mut cases = rw.cases;
            let flat = if opts.copy_propagation {
                let (flat, renames) = copy_propagate(flat);
                for c in &mut cases {
                    for v in c.scrutinee.iter_mut().chain(c.branches.iter_mut().flatten()) {
                        *v = resolve(&renames, v);
                    }
                }
                flat
            } else {
                flat
            };
            (flat, cases)
        }
        (FormTag::Second, Abs::Box(b)) => (FlatBox::from_box(b).map_err(|e| in_def(def, e))?, Vec::new()),
        (form, _) => return Err(NormalizeError::NotCompilable { def: def.name.clone(), form }),
    };
    check_calls(def, &flat, db, compiled)?;
    let order = causality_check(&flat).map_err(|e| in_def(def, e))?;
    Ok(Compiled { name: def.name.clone(), flat, order, cases, source_form: form })
}

/// Compiles every first- and second-form definition in program order.
pub fn normalize_program(db: &ProgramDB, opts: NormalizeOptions) -> Result<NormalProgram, NormalizeError> {
    let mut prog = NormalProgram { sig: Signature::from_db(db), ..NormalProgram::default() };
    for def in db.funs() {
        match def.form.unwrap_or_else(|| crate::ast::classify_abs(&def.abs)) {
            FormTag::First | FormTag::Second => {
                let c = compile_def(def, db, &prog.defs, opts)?;
                prog.order.push(def.name.clone());
                prog.defs.insert(def.name.clone(), Arc::new(c));
            }
            tag => prog.skipped.push((def.name.clone(), tag)),
        }
    }
    Ok(prog)
}

/// Renders a program in second form: declarations followed by one `fun` per
/// compiled definition.
pub fn print_normal_program(db: &ProgramDB, prog: &NormalProgram) -> String {
    use crate::ast::Declaration;
    let decls: Vec<Declaration> = db
        .decls()
        .iter()
        .filter_map(|d| match d {
            Declaration::Fun(f) => match prog.defs.get(&f.name) {
                Some(c) => Some(Declaration::Fun(FunDef {
                    name: f.name.clone(),
                    abs: c.flat.to_abs(),
                    form: None,
                    span: f.span,
                })),
                None => Some(d.clone()),
            },
            other => Some(other.clone()),
        })
        .collect();
    crate::frontend::print_program(&decls)
}
