//! Syntactic program transforms used by the proof rules.

use super::ast::{Formula, Ode, Program};

/// The premise program `α; ?¬C` of the forward invariant cut.
pub fn cut_restrict(alpha: &Program, c: &Formula) -> Program {
    Program::seq(alpha.clone(), Program::test(negate(c)))
}

/// `¬C` with the constant cases folded, so `C = false` yields `?true`.
fn negate(c: &Formula) -> Formula {
    match c {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        other => Formula::not(other.clone()),
    }
}

/// Domain restriction `α↓D`: every transition of the result starts and ends in `D`.
pub fn restrict(alpha: &Program, d: &Formula) -> Program {
    match alpha {
        Program::Assign(_) | Program::Havoc(_) => Program::seq(
            Program::test(d.clone()),
            Program::seq(alpha.clone(), Program::test(d.clone())),
        ),
        Program::Test(phi) => Program::test(Formula::and(phi.clone(), d.clone())),
        Program::Ode(ode) => Program::Ode(Ode {
            eqs: ode.eqs.clone(),
            domain: Formula::and(ode.domain.clone(), d.clone()),
        }),
        Program::Seq(a, b) => Program::seq(restrict(a, d), restrict(b, d)),
        Program::Choice(a, b) => Program::choice(restrict(a, d), restrict(b, d)),
        Program::Star(b) => Program::seq(Program::test(d.clone()), Program::star(restrict(b, d))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp::ast::{CmpOp, Term};

    fn x_gt0() -> Formula {
        Formula::cmp(Term::var("x"), CmpOp::Gt, Term::c(0.0))
    }

    #[test]
    fn cut_builds_premise_program() {
        let a = Program::assign("x", Term::c(1.0));
        assert_eq!(
            cut_restrict(&a, &x_gt0()),
            Program::seq(a.clone(), Program::test(Formula::not(x_gt0())))
        );
        assert_eq!(cut_restrict(&a, &Formula::False), Program::seq(a.clone(), Program::skip()));
        assert_eq!(cut_restrict(&a, &Formula::True), Program::seq(a, Program::test(Formula::False)));
    }

    #[test]
    fn restrict_atomic_and_test() {
        let d = Formula::cmp(Term::var("x"), CmpOp::Ge, Term::c(0.0));
        let a = Program::assign("x", Term::c(1.0));
        assert_eq!(
            restrict(&a, &d),
            Program::seq(Program::test(d.clone()), Program::seq(a, Program::test(d.clone())))
        );
        assert_eq!(
            restrict(&Program::test(x_gt0()), &d),
            Program::test(Formula::and(x_gt0(), d))
        );
    }
}
