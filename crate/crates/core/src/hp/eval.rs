//! Exact valuation of terms and first-order formulas under standard arithmetic.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{Formula, Term};

/// Valuation of state variables.
pub type State = BTreeMap<String, f64>;
/// Valuation of logical variables.
pub type Environment = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("variable `{0}` has no value")]
    Unbound(String),
    #[error("unsupported construct in first-order evaluation: {0}")]
    Unsupported(&'static str),
}

pub fn eval_term(state: &State, env: &Environment, t: &Term) -> Result<f64, EvalError> {
    Ok(match t {
        Term::Const(c) => *c,
        Term::Var(v) => *state.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))?,
        Term::Param(p) => *env.get(p).ok_or_else(|| EvalError::Unbound(p.clone()))?,
        Term::Neg(a) => -eval_term(state, env, a)?,
        Term::Add(a, b) => eval_term(state, env, a)? + eval_term(state, env, b)?,
        Term::Sub(a, b) => eval_term(state, env, a)? - eval_term(state, env, b)?,
        Term::Mul(a, b) => eval_term(state, env, a)? * eval_term(state, env, b)?,
        Term::Div(a, b) => {
            let d = eval_term(state, env, b)?;
            if d == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            eval_term(state, env, a)? / d
        }
        Term::Pow(a, n) => eval_term(state, env, a)?.powi(*n as i32),
        Term::Sqrt(a) => {
            let v = eval_term(state, env, a)?;
            if v < 0.0 {
                return Err(EvalError::NegativeSqrt(v));
            }
            v.sqrt()
        }
    })
}

pub fn eval_formula(state: &State, env: &Environment, f: &Formula) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Cmp(a, op, b) => op.holds(eval_term(state, env, a)?, eval_term(state, env, b)?),
        Formula::Not(a) => !eval_formula(state, env, a)?,
        Formula::And(a, b) => eval_formula(state, env, a)? && eval_formula(state, env, b)?,
        Formula::Or(a, b) => eval_formula(state, env, a)? || eval_formula(state, env, b)?,
        Formula::Imp(a, b) => !eval_formula(state, env, a)? || eval_formula(state, env, b)?,
        Formula::Forall(..) | Formula::Exists(..) => return Err(EvalError::Unsupported("quantifier")),
        Formula::Box(..) | Formula::Diamond(..) => return Err(EvalError::Unsupported("modality")),
    })
}
