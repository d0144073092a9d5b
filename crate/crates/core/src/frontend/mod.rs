//! Concrete syntax: lexer, parser, pretty printer and program loading.

mod lexer;
mod load;
mod parser;
mod pretty;

pub use lexer::{is_keyword, LexError};
pub use load::{load, LoadError, ProgramDB, Warning};
pub use parser::{parse, parse_expr, parse_named, ParseError, SourceUnit};
pub use pretty::{
    print_abs, print_decl, print_expr, print_face, print_form, print_op, print_pat, print_program,
    print_rules, print_value,
};

/// Parses and loads a single source text.
pub fn load_source(source: &str) -> Result<ProgramDB, FrontendError> {
    let unit = parse(source)?;
    Ok(load(&[unit])?)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Load(#[from] LoadError),
}
