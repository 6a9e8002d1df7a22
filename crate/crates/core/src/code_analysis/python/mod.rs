//! A self-contained Python front end: tokenizer, parser and printer.

pub mod ast;
pub mod lexer;
mod parser;
mod unparse;

pub use parser::{is_keyword, parse_expression, parse_module};
pub use unparse::{unparse_expr, unparse_module};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}
