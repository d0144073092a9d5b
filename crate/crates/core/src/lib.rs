//! Compiler and interpreter toolkit for a core calculus of synchronous
//! stream programs.

pub mod ast;
pub mod exec;
pub mod frontend;
pub mod graph;
pub mod logic;
pub mod normalize;
pub mod relsem;
