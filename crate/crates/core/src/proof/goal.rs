//! Goals and the three structural rules: loop invariant, forward invariant
//! cut, and barrier certificate.

use std::fmt;

use crate::hp::{cut_restrict, CmpOp, Formula, Ode, Program, Term};
use crate::icp::lie_derivative;

use super::ProofError;

/// `Γ → [α]S`, or `Γ → S` when there is no program.
#[derive(Clone, Debug, PartialEq)]
pub struct Goal {
    pub assumptions: Formula,
    pub program: Option<Program>,
    pub conclusion: Formula,
}

impl Goal {
    pub fn new(assumptions: Formula, program: Option<Program>, conclusion: Formula) -> Goal {
        Goal { assumptions, program, conclusion }
    }

    /// Splits `Γ → [α]S`; any other formula becomes `true → F`.
    pub fn from_formula(f: &Formula) -> Goal {
        match f {
            Formula::Imp(a, b) => match &**b {
                Formula::Box(p, s) => Goal::new((**a).clone(), Some((**p).clone()), (**s).clone()),
                other => Goal::new((**a).clone(), None, other.clone()),
            },
            Formula::Box(p, s) => Goal::new(Formula::True, Some((**p).clone()), (**s).clone()),
            other => Goal::new(Formula::True, None, other.clone()),
        }
    }

    pub fn to_formula(&self) -> Formula {
        let post = match &self.program {
            Some(p) => Formula::boxed(p.clone(), self.conclusion.clone()),
            None => self.conclusion.clone(),
        };
        Formula::imp(self.assumptions.clone(), post)
    }

    fn star_body(&self, rule: &str) -> Result<&Program, ProofError> {
        match &self.program {
            Some(Program::Star(body)) => Ok(body),
            _ => Err(ProofError::Shape { rule: rule.into(), expected: "I -> [a*]S".into(), goal: self.to_string() }),
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// `I → [α*]S` into `I → C`, `C → [α]C`, `C → S`.
pub fn apply_invariant_rule(g: &Goal, c: &Formula) -> Result<[Goal; 3], ProofError> {
    let body = g.star_body("loop-inv")?;
    Ok([
        Goal::new(g.assumptions.clone(), None, c.clone()),
        Goal::new(c.clone(), Some(body.clone()), c.clone()),
        Goal::new(c.clone(), None, g.conclusion.clone()),
    ])
}

/// `I → [α*]S` into `I ∧ ¬C → [(α; ?¬C)*]S`, `C → [α]C`, `C → S`.
pub fn apply_fwd_inv_cut(g: &Goal, c: &Formula) -> Result<[Goal; 3], ProofError> {
    let body = g.star_body("fwd-inv-cut")?;
    if !c.is_modality_free() {
        return Err(ProofError::Shape { rule: "fwd-inv-cut".into(), expected: "a modality-free cut formula".into(), goal: c.to_string() });
    }
    Ok([
        Goal::new(Formula::and(g.assumptions.clone(), Formula::not(c.clone())), Some(Program::star(cut_restrict(body, c))), g.conclusion.clone()),
        Goal::new(c.clone(), Some(body.clone()), c.clone()),
        Goal::new(c.clone(), None, g.conclusion.clone()),
    ])
}

/// `init → [x' = f & H]safe` with `B` into `init → B ≤ 0`,
/// `B = 0 → Ḃ < 0` and `B ≤ 0 → safe`.
pub fn apply_barrier_rule(g: &Goal, b: &Term) -> Result<[Goal; 3], ProofError> {
    let ode = ode_of(g)?;
    let zero = || Term::c(0.0);
    let bdot = lie_derivative(b, &ode.eqs);
    Ok([
        Goal::new(g.assumptions.clone(), None, Formula::cmp(b.clone(), CmpOp::Le, zero())),
        Goal::new(Formula::cmp(b.clone(), CmpOp::Eq, zero()), None, Formula::cmp(bdot, CmpOp::Lt, zero())),
        Goal::new(Formula::cmp(b.clone(), CmpOp::Le, zero()), None, g.conclusion.clone()),
    ])
}

fn ode_of(g: &Goal) -> Result<&Ode, ProofError> {
    match &g.program {
        Some(Program::Ode(o)) => Ok(o),
        _ => Err(ProofError::Shape { rule: "barrier".into(), expected: "init -> [{x' = f & H}]safe".into(), goal: g.to_string() }),
    }
}

/// Rewrites strict comparisons to non-strict ones (`<` to `<=`, `>` to `>=`),
/// returning whether anything changed.
pub fn relax_strict(f: &Formula) -> (Formula, bool) {
    fn go(f: &Formula, neg: bool, changed: &mut bool) -> Formula {
        match f {
            Formula::Cmp(a, op, b) => {
                // under negation a strict atom is already closed after pushing ¬
                let op2 = match (op, neg) {
                    (CmpOp::Lt, false) => CmpOp::Le,
                    (CmpOp::Gt, false) => CmpOp::Ge,
                    (CmpOp::Le, true) => CmpOp::Lt,
                    (CmpOp::Ge, true) => CmpOp::Gt,
                    (o, _) => *o,
                };
                if op2 != *op {
                    *changed = true;
                }
                Formula::Cmp(a.clone(), op2, b.clone())
            }
            Formula::Not(g) => Formula::not(go(g, !neg, changed)),
            Formula::And(a, b) => Formula::and(go(a, neg, changed), go(b, neg, changed)),
            Formula::Or(a, b) => Formula::or(go(a, neg, changed), go(b, neg, changed)),
            Formula::Imp(a, b) => Formula::imp(go(a, !neg, changed), go(b, neg, changed)),
            other => other.clone(),
        }
    }
    let mut changed = false;
    let out = go(f, false, &mut changed);
    (out, changed)
}
