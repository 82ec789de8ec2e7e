//! Propositional simplification: exact `v = c` pins and constant folding.

use std::collections::BTreeMap;

use crate::hp::{CmpOp, Formula, Term};

/// `(v, c)` for every conjunct `v = c` (either orientation).
pub fn pins(fs: &[Formula]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for f in fs {
        for c in f.conjuncts() {
            if let Formula::Cmp(Term::Var(v), CmpOp::Eq, t) | Formula::Cmp(t, CmpOp::Eq, Term::Var(v)) = &c {
                if let Some(k) = t.constant_value() {
                    if !out.iter().any(|(w, _)| w == v) {
                        out.push((v.clone(), k));
                    }
                }
            }
        }
    }
    out
}

/// Folds constant comparisons and boolean identities.
pub fn fold(f: &Formula) -> Formula {
    use Formula::*;
    match f {
        Cmp(a, op, b) => match (a.constant_value(), b.constant_value()) {
            (Some(x), Some(y)) => {
                if op.holds(x, y) {
                    True
                } else {
                    False
                }
            }
            _ => f.clone(),
        },
        Not(g) => match fold(g) {
            True => False,
            False => True,
            Not(h) => *h,
            h => Formula::not(h),
        },
        And(a, b) => match (fold(a), fold(b)) {
            (False, _) | (_, False) => False,
            (True, x) | (x, True) => x,
            (x, y) => Formula::and(x, y),
        },
        Or(a, b) => match (fold(a), fold(b)) {
            (True, _) | (_, True) => True,
            (False, x) | (x, False) => x,
            (x, y) => Formula::or(x, y),
        },
        Imp(a, b) => match (fold(a), fold(b)) {
            (False, _) | (_, True) => True,
            (True, x) => x,
            (x, False) => fold(&Formula::not(x)),
            (x, y) => Formula::imp(x, y),
        },
        other => other.clone(),
    }
}

/// Substitutes pinned values into a modality-free formula and folds.
pub fn apply_pins(f: &Formula, pins: &[(String, f64)]) -> Formula {
    if pins.is_empty() || !f.is_modality_free() {
        return fold(f);
    }
    let map: Vec<(String, Term)> = pins.iter().map(|(v, c)| (v.clone(), Term::c(*c))).collect();
    fold(&f.substitute(&map))
}

/// Per-variable bounds implied by simple atoms `x ≤ c`, `x ≥ c`, `x = c` of `f`.
pub(crate) fn atom_bounds(f: &Formula) -> BTreeMap<String, (f64, f64)> {
    let mut out: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for c in f.conjuncts() {
        let Formula::Cmp(a, op, b) = &c else { continue };
        let (x, op, k) = match (a, b.constant_value(), b, a.constant_value()) {
            (Term::Var(x), Some(k), _, _) => (x.clone(), *op, k),
            (_, _, Term::Var(x), Some(k)) => (
                x.clone(),
                match op {
                    CmpOp::Le => CmpOp::Ge,
                    CmpOp::Lt => CmpOp::Gt,
                    CmpOp::Ge => CmpOp::Le,
                    CmpOp::Gt => CmpOp::Lt,
                    o => *o,
                },
                k,
            ),
            _ => continue,
        };
        let e = out.entry(x).or_insert((f64::NEG_INFINITY, f64::INFINITY));
        match op {
            CmpOp::Le | CmpOp::Lt => e.1 = e.1.min(k),
            CmpOp::Ge | CmpOp::Gt => e.0 = e.0.max(k),
            CmpOp::Eq => *e = (e.0.max(k), e.1.min(k)),
            CmpOp::Ne => {}
        }
    }
    out
}
