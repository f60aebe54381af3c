//! The While language: syntax, parsing, and a fuel-bounded interpreter.

mod ast;
mod interp;
mod parser;

pub use ast::{assigned_vars, free_vars, BinOp, Command, Expr, FreeVars, VarRef};
pub use interp::{exec, Outcome, Store};
pub use parser::{parse_expr, parse_fixed_program, parse_program, parse_program_with};
