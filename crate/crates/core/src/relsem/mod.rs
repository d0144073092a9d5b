//! Values, semantic building blocks, stateful relations and their
//! compositions, and the internal/external/deterministic hierarchy.

mod domain;
mod dump;
mod eval;
mod prims;
mod relation;
mod value;

pub use domain::{DomainError, DomainSpec, FiniteDomain, DEFAULT_LIMIT};
pub use dump::{dump_jsonl, row_json};
pub use eval::{EvalError, Plan, Results, Step, StepOp};
pub use prims::{eval_builtin, eval_cons, eval_cons_inv, eval_gamma, eval_phi, eval_prim};
pub use relation::{
    enumerate_relation, AcceptableStateSpace, DeterminismError, Key, Mode, Ports, RelError, Rep, Row, StepFn,
    StepRelation,
};
pub use value::{show_tuple, Value};
