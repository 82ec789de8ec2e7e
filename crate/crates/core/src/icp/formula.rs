//! Quantifier- and modality-free formulas as disjunctions of constraint
//! systems, so that satisfiability of an arbitrary arithmetic formula reduces to
//! one `check` per disjunct.

use crate::hp::{CmpOp, Formula};

use super::{check_with, Constraint, ConstraintSystem, DeltaResult, IcpConfig, IcpError, IntervalBox, Stats};

/// Disjuncts beyond this count are reported as a resource limit.
const MAX_DISJUNCTS: usize = 4096;

fn cmp_dnf(a: &crate::hp::Term, op: CmpOp, b: &crate::hp::Term) -> Vec<Vec<Constraint>> {
    match Constraint::from_cmp(a, op, b) {
        Some(c) => vec![vec![c]],
        None => vec![
            vec![Constraint::from_cmp(a, CmpOp::Lt, b).expect("strict")],
            vec![Constraint::from_cmp(a, CmpOp::Gt, b).expect("strict")],
        ],
    }
}

fn product(a: Vec<Vec<Constraint>>, b: Vec<Vec<Constraint>>) -> Result<Vec<Vec<Constraint>>, IcpError> {
    if a.len().saturating_mul(b.len()) > MAX_DISJUNCTS {
        return Err(IcpError::ResourceLimit(MAX_DISJUNCTS));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in &a {
        for y in &b {
            let mut c = x.clone();
            c.extend(y.iter().cloned());
            out.push(c);
        }
    }
    Ok(out)
}

fn dnf(f: &Formula, positive: bool) -> Result<Vec<Vec<Constraint>>, IcpError> {
    use Formula::*;
    Ok(match (f, positive) {
        (True, true) | (False, false) => vec![Vec::new()],
        (True, false) | (False, true) => Vec::new(),
        (Cmp(a, op, b), true) => cmp_dnf(a, *op, b),
        (Cmp(a, op, b), false) => cmp_dnf(a, op.negate(), b),
        (Not(g), p) => dnf(g, !p)?,
        (And(a, b), true) | (Or(a, b), false) => product(dnf(a, positive)?, dnf(b, positive)?)?,
        (Or(a, b), true) | (And(a, b), false) => {
            let mut l = dnf(a, positive)?;
            l.extend(dnf(b, positive)?);
            if l.len() > MAX_DISJUNCTS {
                return Err(IcpError::ResourceLimit(MAX_DISJUNCTS));
            }
            l
        }
        (Imp(a, b), true) => {
            let mut l = dnf(a, false)?;
            l.extend(dnf(b, true)?);
            l
        }
        (Imp(a, b), false) => product(dnf(a, true)?, dnf(b, false)?)?,
        (Forall(..) | Exists(..), _) => return Err(IcpError::Unsupported("quantifier")),
        (Box(..) | Diamond(..), _) => return Err(IcpError::Unsupported("modality")),
    })
}

/// Disjunctive normal form; `[]` is false and `[[]]` is true.
pub fn to_dnf(f: &Formula) -> Result<Vec<Vec<Constraint>>, IcpError> {
    dnf(f, true)
}

/// δ-satisfiability of a formula over a box: Unsat only if every disjunct is.
pub fn check_formula(
    f: &Formula,
    domain: &IntervalBox,
    delta: f64,
    cfg: &IcpConfig,
) -> Result<(DeltaResult, Stats), IcpError> {
    let mut stats = Stats::default();
    for constraints in to_dnf(f)? {
        let sys = ConstraintSystem { constraints, domain: domain.clone(), delta };
        let (r, s) = check_with(&sys, cfg)?;
        stats.boxes += s.boxes;
        if !r.is_unsat() {
            return Ok((r, stats));
        }
    }
    Ok((DeltaResult::Unsat, stats))
}
