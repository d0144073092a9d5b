//! Deterministic execution, traces, generated inputs and the example corpus.

pub mod corpus;
pub mod input;
pub mod machine;
pub mod trace;

pub use corpus::{build_corpus, CorpusError, Golden, Source};
pub use input::{generate_inputs, Generator, InputError};
pub use machine::{unroll_plan, Certificate, ExecError, MachineProgram};
pub use trace::{parse_value, read_csv, Column, ColumnKind, Trace, TraceError};
