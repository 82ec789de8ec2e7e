//! Plain-text query dumps for cross-checking with an external δ-solver.
//!
//! One item per line: `delta <v>`, then `domain <var> in [lo, hi]` per axis,
//! then one constraint per line in model-file formula syntax.

use std::fmt::Write;

use super::ConstraintSystem;

pub fn dump_query(sys: &ConstraintSystem, label: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {label}");
    let _ = writeln!(out, "delta {}", sys.delta);
    for (v, iv) in sys.domain.vars.iter().zip(&sys.domain.ivs) {
        let _ = writeln!(out, "domain {v} in [{}, {}]", iv.lo, iv.hi);
    }
    for c in &sys.constraints {
        let _ = writeln!(out, "{c}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp::Term;
    use crate::icp::{Constraint, IntervalBox, Rel};

    #[test]
    fn layout() {
        let sys = ConstraintSystem {
            constraints: vec![Constraint::new(Term::pow(Term::var("x"), 2), Rel::Lt)],
            domain: IntervalBox::from_bounds(&[("x", -1.0, 1.0)]),
            delta: 0.001,
        };
        assert_eq!(dump_query(&sys, "q"), "# q\ndelta 0.001\ndomain x in [-1, 1]\nx^2 < 0\n");
    }
}
