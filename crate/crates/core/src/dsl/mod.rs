//! The definition language: expression trees, lexer and parser.

pub mod ast;
pub mod lexer;
pub mod parser;

pub use ast::{BinOp, EvalError, Expr};
pub use lexer::Diagnostic;
pub use parser::{parse_expr, parse_file};
