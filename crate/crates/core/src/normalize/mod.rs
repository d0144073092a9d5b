//! Rewriting from first to second form, prenex normalization, copy
//! propagation and causality ordering.

mod causality;
mod copyprop;
mod flat;
mod pipeline;
mod prenex;
mod rewrite;

pub use causality::{causality_check, check_box_causality, CausalityError, DependencyOrder};
pub use copyprop::{copy_propagate, resolve, Renames};
pub use flat::{FlatAssign, FlatBox, NotFlat, Rhs};
pub use pipeline::{
    compile_def, normalize_program, print_normal_program, Compiled, NormalProgram, NormalizeOptions, Signature,
};
pub use prenex::prenex;
pub use rewrite::{free_vars, CalleeInfo, CaseInfo, FreshSupply, Judgement, RewriteError, Rewriter};

use crate::ast::{FormTag, Ident};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error(transparent)]
    NotFlat(#[from] NotFlat),
    #[error(transparent)]
    Causality(#[from] CausalityError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error("`{def}` is in {form} form and has no second form")]
    NotCompilable { def: Ident, form: FormTag },
    #[error("`{def}` calls `{callee}`, which has no second form")]
    UncompilableCallee { def: Ident, callee: Ident },
    #[error("in `{def}`: {source}")]
    InDef { def: Ident, source: Box<NormalizeError> },
}

impl NormalizeError {
    /// Diagnostic category name.
    pub fn kind(&self) -> &'static str {
        match self {
            NormalizeError::NotFlat(_) => "NotFlat",
            NormalizeError::Causality(_) => "CausalityError",
            NormalizeError::Rewrite(_) => "RewriteError",
            NormalizeError::NotCompilable { .. } => "NotCompilable",
            NormalizeError::UncompilableCallee { .. } => "UncompilableCallee",
            NormalizeError::InDef { source, .. } => source.kind(),
        }
    }
}
