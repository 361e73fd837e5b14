use std::fmt;

use super::expr::{BinOp, Expr};
use super::{EvalError, ParseError, TimeExpr};
use crate::error::{Error, Result};

/// Deviating argument `h(t)` of a delay term.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayLaw {
    /// `h(t) = t - lag`.
    ConstantLag(f64),
    /// `h(t) = ratio * t`.
    Pantograph(f64),
    Expression(TimeExpr),
}

impl DelayLaw {
    /// Accepts `lag X`, `constant_lag X`, `pantograph R`, or any time
    /// expression.
    pub fn parse(text: &str) -> std::result::Result<Self, ParseError> {
        let trimmed = text.trim_start();
        let lead = text.len() - trimmed.len();
        let (head, rest) = match trimmed.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r),
            None => (trimmed, ""),
        };
        let arg_offset = lead + head.len() + (rest.len() - rest.trim_start().len()) + 1;
        let number = |what: &str| -> std::result::Result<f64, ParseError> {
            let value = TimeExpr::parse(rest).map_err(|e| ParseError {
                offset: e.offset + lead + head.len() + 1,
                kind: e.kind,
            })?;
            let not_constant = || ParseError::syntax(arg_offset.min(text.len()), format!("{what} must be a constant"));
            if !value.is_constant() {
                return Err(not_constant());
            }
            value.eval(0.0).map_err(|_| not_constant())
        };
        match head {
            "lag" | "constant_lag" => {
                let lag = number("lag")?;
                if lag < 0.0 {
                    return Err(ParseError::syntax(arg_offset, "lag must be nonnegative"));
                }
                Ok(DelayLaw::ConstantLag(lag))
            }
            "pantograph" => {
                let ratio = number("pantograph ratio")?;
                if !(ratio > 0.0 && ratio <= 1.0) {
                    return Err(ParseError::syntax(arg_offset, "pantograph ratio must lie in (0, 1]"));
                }
                Ok(DelayLaw::Pantograph(ratio))
            }
            _ => TimeExpr::parse(text).map(DelayLaw::Expression),
        }
    }

    pub fn eval(&self, t: f64) -> std::result::Result<f64, EvalError> {
        match self {
            DelayLaw::ConstantLag(lag) => Ok(t - lag),
            DelayLaw::Pantograph(ratio) => Ok(ratio * t),
            DelayLaw::Expression(e) => e.eval(t),
        }
    }

    /// The same law written as a general expression.
    pub fn as_expression(&self) -> TimeExpr {
        match self {
            DelayLaw::ConstantLag(lag) => TimeExpr::from_expr(Expr::Bin(
                BinOp::Sub,
                Box::new(Expr::Var),
                Box::new(Expr::Num(*lag)),
            )),
            DelayLaw::Pantograph(ratio) => TimeExpr::from_expr(Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Num(*ratio)),
                Box::new(Expr::Var),
            )),
            DelayLaw::Expression(e) => e.clone(),
        }
    }

    /// `h(t) = t`, i.e. the term acts on the current state.
    pub fn is_instantaneous(&self) -> bool {
        match self {
            DelayLaw::ConstantLag(lag) => *lag == 0.0,
            DelayLaw::Pantograph(ratio) => *ratio == 1.0,
            DelayLaw::Expression(e) => matches!(e.expr(), Expr::Var),
        }
    }
}

impl fmt::Display for DelayLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelayLaw::ConstantLag(lag) => write!(f, "lag {lag:?}"),
            DelayLaw::Pantograph(ratio) => write!(f, "pantograph {ratio:?}"),
            DelayLaw::Expression(e) => e.fmt(f),
        }
    }
}

/// Outcome of checking `h(t) <= t` on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayCheck {
    /// `max (t - h(t))` over the grid.
    pub sup_lag: f64,
    /// Grid point where the maximum lag occurs.
    pub argmax: f64,
    /// Smallest value of `h(t)` seen on the grid.
    pub min_argument: f64,
}

pub fn validate_delay(law: &DelayLaw, grid: &[f64]) -> Result<DelayCheck> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("delay validation needs a nonempty grid".into()));
    }
    let mut check = DelayCheck {
        sup_lag: f64::NEG_INFINITY,
        argmax: grid[0],
        min_argument: f64::INFINITY,
    };
    for &t in grid {
        let h = law.eval(t)?;
        if h > t {
            return Err(Error::DelayViolation { t, value: h });
        }
        if t - h > check.sup_lag {
            check.sup_lag = t - h;
            check.argmax = t;
        }
        check.min_argument = check.min_argument.min(h);
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| end * i as f64 / n as f64).collect()
    }

    #[test]
    fn parses_named_laws() {
        assert_eq!(DelayLaw::parse("pantograph 0.5").unwrap(), DelayLaw::Pantograph(0.5));
        assert_eq!(DelayLaw::parse("lag 0.1").unwrap(), DelayLaw::ConstantLag(0.1));
        assert_eq!(DelayLaw::parse("constant_lag 1").unwrap(), DelayLaw::ConstantLag(1.0));
        assert!(matches!(DelayLaw::parse("t - 0.2").unwrap(), DelayLaw::Expression(_)));
        assert!(DelayLaw::parse("pantograph 1.5").is_err());
        assert!(DelayLaw::parse("pantograph t").is_err());
        assert!(DelayLaw::parse("lag -1").is_err());
        let e = DelayLaw::parse("lag 0.1 +").unwrap_err();
        assert_eq!(e.offset, 9);
    }

    #[test]
    fn pantograph_validation() {
        let c = validate_delay(&DelayLaw::Pantograph(0.5), &grid(10.0, 100)).unwrap();
        assert_eq!(c.sup_lag, 5.0);
        assert_eq!(c.argmax, 10.0);
    }

    #[test]
    fn constant_lag_validation() {
        let c = validate_delay(&DelayLaw::ConstantLag(0.1), &grid(10.0, 100)).unwrap();
        assert!((c.sup_lag - 0.1).abs() < 1e-12);
        assert!((c.min_argument + 0.1).abs() < 1e-15);
    }

    #[test]
    fn advanced_argument_is_rejected() {
        let law = DelayLaw::parse("t+1").unwrap();
        let g = grid(10.0, 100);
        match validate_delay(&law, &g) {
            Err(Error::DelayViolation { t, .. }) => assert_eq!(t, g[0]),
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn closed_forms_match_expression_forms() {
        for law in [DelayLaw::ConstantLag(0.1), DelayLaw::Pantograph(0.5)] {
            let expr = law.as_expression();
            for t in grid(7.0, 70) {
                assert_eq!(law.eval(t).unwrap(), expr.eval(t).unwrap());
            }
        }
    }

    #[test]
    fn instantaneous_laws() {
        assert!(DelayLaw::parse("t").unwrap().is_instantaneous());
        assert!(DelayLaw::ConstantLag(0.0).is_instantaneous());
        assert!(!DelayLaw::Pantograph(0.5).is_instantaneous());
    }
}
