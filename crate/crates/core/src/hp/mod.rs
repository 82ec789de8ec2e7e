//! Hybrid programs: syntax, parsing, evaluation, transforms and the
//! finite-grid enumeration oracle.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod model;
pub mod oracle;
pub mod parse;
pub mod print;
pub mod random;
pub mod transform;

pub use ast::{CmpOp, Formula, Ode, Program, Term};
pub use eval::{eval_formula, eval_term, Environment, EvalError, State};
pub use model::Model;
pub use parse::{parse_formula, parse_model, parse_program, parse_term, ParseError};
pub use transform::{cut_restrict, restrict};
