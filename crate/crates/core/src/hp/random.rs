//! Seeded generators of small ODE-free programs and formulas, for fuzzing
//! proof rules against the enumeration oracle.

use rand::Rng;

use super::ast::{CmpOp, Formula, Program, Term};

/// Generator over a fixed variable set and small integer constants.
pub struct ProgramGen<'a> {
    pub vars: &'a [&'a str],
    pub consts: &'a [f64],
}

const OPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt, CmpOp::Le, CmpOp::Lt];

impl ProgramGen<'_> {
    fn var<R: Rng>(&self, rng: &mut R) -> &str {
        self.vars[rng.gen_range(0..self.vars.len())]
    }

    fn konst<R: Rng>(&self, rng: &mut R) -> f64 {
        self.consts[rng.gen_range(0..self.consts.len())]
    }

    pub fn term<R: Rng>(&self, rng: &mut R) -> Term {
        match rng.gen_range(0..5) {
            0 => Term::c(self.konst(rng)),
            1 => Term::var(self.var(rng)),
            2 => Term::add(Term::var(self.var(rng)), Term::c(1.0)),
            3 => Term::sub(Term::var(self.var(rng)), Term::c(1.0)),
            _ => Term::sub(Term::var(self.var(rng)), Term::var(self.var(rng))),
        }
    }

    pub fn atom<R: Rng>(&self, rng: &mut R) -> Formula {
        let lhs = Term::var(self.var(rng));
        let rhs = if rng.gen_bool(0.6) { Term::c(self.konst(rng)) } else { Term::var(self.var(rng)) };
        Formula::cmp(lhs, OPS[rng.gen_range(0..OPS.len())], rhs)
    }

    pub fn formula<R: Rng>(&self, rng: &mut R, depth: u32) -> Formula {
        if depth == 0 || rng.gen_bool(0.4) {
            return self.atom(rng);
        }
        match rng.gen_range(0..3) {
            0 => Formula::not(self.formula(rng, depth - 1)),
            1 => Formula::and(self.formula(rng, depth - 1), self.formula(rng, depth - 1)),
            _ => Formula::or(self.formula(rng, depth - 1), self.formula(rng, depth - 1)),
        }
    }

    pub fn program<R: Rng>(&self, rng: &mut R, depth: u32) -> Program {
        if depth == 0 || rng.gen_bool(0.3) {
            return match rng.gen_range(0..4) {
                0 | 1 => Program::assign(self.var(rng), self.term(rng)),
                2 => Program::Havoc(self.var(rng).to_string()),
                _ => Program::test(self.formula(rng, 1)),
            };
        }
        match rng.gen_range(0..3) {
            0 => Program::seq(self.program(rng, depth - 1), self.program(rng, depth - 1)),
            1 => Program::choice(self.program(rng, depth - 1), self.program(rng, depth - 1)),
            _ => Program::star(self.program(rng, depth - 1)),
        }
    }
}
