//! Seeded generators of terms and constraint systems for solver testing.

use rand::Rng;

use crate::hp::eval::{eval_term, Environment, State};
use crate::hp::Term;

use super::{Constraint, ConstraintSystem, IntervalBox, Rel};

/// Random term over `vars` with all operators, including `/` and `sqrt`.
pub fn random_term<R: Rng>(rng: &mut R, vars: &[&str], depth: u32) -> Term {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            Term::var(vars[rng.gen_range(0..vars.len())])
        } else {
            Term::c((rng.gen_range(-40..=40) as f64) / 8.0)
        };
    }
    match rng.gen_range(0..8) {
        0 => Term::add(random_term(rng, vars, depth - 1), random_term(rng, vars, depth - 1)),
        1 => Term::sub(random_term(rng, vars, depth - 1), random_term(rng, vars, depth - 1)),
        2 | 3 => Term::mul(random_term(rng, vars, depth - 1), random_term(rng, vars, depth - 1)),
        4 => Term::div(random_term(rng, vars, depth - 1), random_term(rng, vars, depth - 1)),
        5 => {
            let n = rng.gen_range(0..4);
            Term::pow(random_term(rng, vars, depth - 1), n)
        }
        6 => Term::sqrt(random_term(rng, vars, depth - 1)),
        _ => Term::neg(random_term(rng, vars, depth - 1)),
    }
}

/// Random polynomial term (no division or sqrt).
pub fn random_poly<R: Rng>(rng: &mut R, vars: &[&str], depth: u32) -> Term {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            Term::var(vars[rng.gen_range(0..vars.len())])
        } else {
            Term::c((rng.gen_range(-24..=24) as f64) / 8.0)
        };
    }
    match rng.gen_range(0..4) {
        0 => Term::add(random_poly(rng, vars, depth - 1), random_poly(rng, vars, depth - 1)),
        1 => Term::sub(random_poly(rng, vars, depth - 1), random_poly(rng, vars, depth - 1)),
        2 => Term::mul(random_poly(rng, vars, depth - 1), random_poly(rng, vars, depth - 1)),
        _ => Term::pow(random_poly(rng, vars, depth - 1), 2),
    }
}

/// Random box with dyadic bounds inside `[-r, r]`.
pub fn random_box<R: Rng>(rng: &mut R, vars: &[&str], r: f64) -> IntervalBox {
    IntervalBox::new(vars.iter().map(|v| {
        let a = (rng.gen_range(-r..r) * 8.0).round() / 8.0;
        let b = (rng.gen_range(-r..r) * 8.0).round() / 8.0;
        (v.to_string(), super::Interval::new(a.min(b), a.max(b)))
    }))
}

pub fn random_point_in<R: Rng>(rng: &mut R, b: &IntervalBox) -> State {
    b.vars.iter().cloned().zip(b.ivs.iter().map(|iv| if iv.width() > 0.0 { rng.gen_range(iv.lo..=iv.hi) } else { iv.lo })).collect()
}

/// System with a planted dyadic solution: each constraint `t(x) - t(p) [+ s] rel 0`
/// holds at the planted point `p`. Returns the system and the point.
pub fn planted_system<R: Rng>(rng: &mut R, vars: &[&str], n_constraints: usize, delta: f64) -> (ConstraintSystem, State) {
    let domain = IntervalBox::new(vars.iter().map(|v| (v.to_string(), super::Interval::new(-4.0, 4.0))));
    let point: State = vars.iter().map(|v| (v.to_string(), rng.gen_range(-24..=24) as f64 / 8.0)).collect();
    let env = Environment::new();
    let mut constraints = Vec::new();
    while constraints.len() < n_constraints {
        let t = random_poly(rng, vars, 3);
        let Ok(tp) = eval_term(&point, &env, &t) else { continue };
        let shifted = Term::sub(t, Term::c(tp));
        let c = match rng.gen_range(0..3) {
            0 => Constraint::new(shifted, Rel::Le),
            1 => Constraint::new(Term::sub(shifted, Term::c(0.5)), Rel::Lt),
            _ => Constraint::new(shifted, Rel::Eq),
        };
        constraints.push(c);
    }
    (ConstraintSystem { constraints, domain, delta }, point)
}

/// `Σ (aᵢ xᵢ + bᵢ)² + c ≤ 0` with `c > 0`: infeasible by construction.
pub fn sos_infeasible<R: Rng>(rng: &mut R, vars: &[&str], delta: f64) -> ConstraintSystem {
    let squares = vars.iter().map(|v| {
        let a = rng.gen_range(1..=16) as f64 / 4.0;
        let b = rng.gen_range(-16..=16) as f64 / 4.0;
        Term::pow(Term::add(Term::mul(Term::c(a), Term::var(v)), Term::c(b)), 2)
    }).collect::<Vec<_>>();
    let c = rng.gen_range(1..=80) as f64 / 8.0;
    let term = Term::add(Term::sum(squares), Term::c(c));
    ConstraintSystem {
        constraints: vec![Constraint::new(term, Rel::Le)],
        domain: IntervalBox::new(vars.iter().map(|v| (v.to_string(), super::Interval::new(-10.0, 10.0)))),
        delta,
    }
}
