//! Scalar functions of time: a small closed expression language used for
//! coefficients, forcing terms, initial functions and delay laws.

mod delay;
mod expr;
mod matrix;
mod parse;

pub use delay::{validate_delay, DelayCheck, DelayLaw};
pub use expr::{BinOp, EvalError, Expr, Func, TimeExpr};
pub use matrix::MatrixFunction;
pub use parse::{ParseError, ParseErrorKind};
