//! Mini-C frontend: lexing, parsing, type checking, rendering and the
//! semantics-preserving rewrites applied before analysis.

pub mod ast;
mod lexer;
mod parser;
mod preprocess;
pub mod render;
mod testcase;
mod typeck;

pub use ast::*;
pub use parser::parse_expr;
pub use preprocess::preprocess;
pub use render::{expr_to_compact, expr_to_string, render_program, stmt_to_string};
pub use testcase::strip_testcase_loop;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: u32, column: u32, message: String },
    #[error("type error at {line}:{column}: {message}")]
    Type { line: u32, column: u32, message: String },
    #[error("unsupported construct at {line}:{column}: {what}")]
    Unsupported { line: u32, column: u32, what: String },
}

/// Parse and type-check a mini-C translation unit.
pub fn parse(source: &str) -> Result<Program, FrontendError> {
    let p = parser::parse_program(source)?;
    typeck::check_program(&p)?;
    Ok(p)
}

/// Parse, type-check, strip a test-case wrapper and pre-process.
pub fn load(source: &str) -> Result<Program, FrontendError> {
    Ok(preprocess(&strip_testcase_loop(&parse(source)?)))
}
