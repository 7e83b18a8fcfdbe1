//! The RRP (Reactive Reachability Program) front end.
//!
//! ```text
//! inputs 1..5;
//! var a = 1;
//! step(in) {
//!     if (in == 3) { a = 2; emit 20; } else { reject; }
//! }
//! ```
//!
//! A program declares an inclusive input alphabet, a list of integer globals
//! and a loop-free step body that runs once per input symbol.

pub mod ast;
pub mod diagnostic;
pub mod interp;
mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{list_error_ids, Alphabet, BinOp, Expr, Global, Program, Stmt, UnOp};
pub use diagnostic::{Diagnostic, Position, Severity};
pub use interp::{interpret_step, StepOutcome};
pub use parser::{parse_program, parse_with_warnings, ParseOutcome};
pub use printer::{expr_to_string, pretty_print};
