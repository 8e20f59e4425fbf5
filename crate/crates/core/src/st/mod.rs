//! Structured-text front end: lexing, parsing, canonical emission.
//!
//! The accepted subset is `PROGRAM ... END_PROGRAM` with `VAR` blocks of
//! BOOL/REAL/PID declarations, `IF/THEN/ELSE/END_IF`, `:=` assignments,
//! inequality comparisons against literals, `NOT`/`AND`/`OR`, and PID
//! block calls with named parameters and one `OUT =>` binding.

pub mod ast;
pub mod emit;
pub mod eval;
mod lexer;
mod parser;

use thiserror::Error;

pub use ast::*;
pub use emit::{emit_expr, emit_program};
pub use parser::parse_str;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    pub(crate) fn new(span: Span, expected: impl Into<String>, found: impl Into<String>) -> Self {
        Self {
            line: span.line,
            column: span.column,
            expected: expected.into(),
            found: found.into(),
        }
    }
}

/// Parses a source file. The file's role is not checked here; it only
/// matters to the extraction stage.
pub fn parse_program(source: &SourceFile) -> Result<Program, ParseError> {
    parse_str(&source.body)
}
