//! Lexing, parsing and printing of the mini-R source language.

pub mod ast;
pub mod builtins;
pub mod lexer;
mod parser;
pub mod print;

pub use ast::{BinopKind, Expr, ExprKind, NodeId};
pub use builtins::{builtin_table, lookup_builtin, Arity, BuiltinDesc, BuiltinKind};
pub use parser::parse;
pub use print::{print_expr, print_program};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{col}: {msg}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}
