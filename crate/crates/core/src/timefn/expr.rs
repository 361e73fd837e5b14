use std::fmt;

use thiserror::Error;

use super::parse::Parser;
use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
    Pow,
}

impl Func {
    pub(super) fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Expression tree over the single variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Evaluation failure, carrying the canonical text of the subexpression
/// whose value left the real domain.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error in `{expr}` at t = {t}: {reason}")]
pub struct EvalError {
    pub expr: String,
    pub t: f64,
    pub reason: &'static str,
}

impl Expr {
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let fail = |reason| EvalError { expr: self.to_string(), t, reason };
        let value = match self {
            Expr::Num(v) => *v,
            Expr::Var => t,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(t)?, b.eval(t)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(fail("division by zero"));
                        }
                        x / y
                    }
                }
            }
            Expr::Call(f, args) => {
                let x = args[0].eval(t)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if x <= 0.0 {
                            return Err(fail("logarithm of a nonpositive number"));
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Abs => x.abs(),
                    Func::Pow => x.powf(args[1].eval(t)?),
                }
            }
        };
        if value.is_nan() {
            Err(fail("undefined result"))
        } else if value.is_infinite() {
            Err(fail("overflow"))
        } else {
            Ok(value)
        }
    }

    /// True when the tree does not mention `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var => false,
            Expr::Neg(e) => e.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
            Expr::Call(_, args) => args.iter().all(Expr::is_constant),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var => 1,
            Expr::Neg(e) => 1 + e.depth(),
            Expr::Bin(_, a, b) => 1 + a.depth().max(b.depth()),
            Expr::Call(_, args) => 1 + args.iter().map(Expr::depth).max().unwrap_or(0),
        }
    }
}

// Canonical form: every compound node is parenthesized and literals use the
// shortest representation that parses back to the same f64.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "(-{:?})", v.abs()),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var => f.write_str("t"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A parsed scalar function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeExpr {
    root: Expr,
}

impl TimeExpr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Parser::new(text).parse().map(|root| Self { root })
    }

    pub fn constant(value: f64) -> Self {
        Self { root: Expr::Num(value) }
    }

    pub fn from_expr(root: Expr) -> Self {
        Self { root }
    }

    pub fn expr(&self) -> &Expr {
        &self.root
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        self.root.eval(t)
    }

    /// True for a literal zero, which lets callers skip evaluation.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Expr::Num(v) if v == 0.0)
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }

    /// `factor * self`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            root: Expr::Bin(BinOp::Mul, Box::new(Expr::Num(factor)), Box::new(self.root.clone())),
        }
    }

    /// `self + other`.
    pub fn plus(&self, other: &TimeExpr) -> Self {
        Self {
            root: Expr::Bin(BinOp::Add, Box::new(self.root.clone()), Box::new(other.root.clone())),
        }
    }
}

impl fmt::Display for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
