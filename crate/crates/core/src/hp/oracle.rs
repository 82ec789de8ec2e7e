//! Exact transition semantics of ODE-free programs over a finite grid.
//!
//! Havoc ranges over the grid values of its variable and assignments whose
//! value leaves the grid have no transition, so every relation is closed over
//! the grid. Star is the reflexive-transitive closure, computed as a
//! reachability fixed point.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{Formula, Program};
use super::eval::{eval_formula, eval_term, Environment, EvalError, State};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("the enumeration oracle cannot execute continuous evolution")]
    OdeInOracle,
    #[error("variable `{0}` is not a grid axis")]
    NotOnGrid(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Cartesian grid of states; states are numbered in mixed radix, first axis slowest.
#[derive(Clone, Debug)]
pub struct Grid {
    pub vars: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Grid {
    pub fn new(axes: Vec<(String, Vec<f64>)>) -> Grid {
        let (vars, values) = axes.into_iter().unzip();
        Grid { vars, values }
    }

    /// Same value set on every axis.
    pub fn uniform(vars: &[&str], values: &[f64]) -> Grid {
        Grid::new(vars.iter().map(|v| (v.to_string(), values.to_vec())).collect())
    }

    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut d = vec![0; self.vars.len()];
        for k in (0..self.vars.len()).rev() {
            let r = self.values[k].len();
            d[k] = idx % r;
            idx /= r;
        }
        d
    }

    fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.values)
            .fold(0, |acc, (d, vals)| acc * vals.len() + d)
    }

    pub fn state(&self, idx: usize) -> State {
        self.digits(idx)
            .into_iter()
            .enumerate()
            .map(|(k, d)| (self.vars[k].clone(), self.values[k][d]))
            .collect()
    }

    pub fn states(&self) -> Vec<State> {
        (0..self.len()).map(|i| self.state(i)).collect()
    }

    fn value_index(&self, axis: usize, v: f64) -> Option<usize> {
        self.values[axis].iter().position(|g| (g - v).abs() <= 1e-9 * (1.0 + g.abs()))
    }

    fn axis(&self, var: &str) -> Result<usize, OracleError> {
        self.vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| OracleError::NotOnGrid(var.to_string()))
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        let digits: Option<Vec<usize>> = self
            .vars
            .iter()
            .enumerate()
            .map(|(k, v)| self.value_index(k, *s.get(v)?))
            .collect();
        Some(self.compose(&digits?))
    }

    /// Indices of grid states satisfying a first-order formula.
    pub fn satisfying(&self, env: &Environment, f: &Formula) -> Result<BTreeSet<usize>, OracleError> {
        let mut out = BTreeSet::new();
        for i in 0..self.len() {
            if eval_formula(&self.state(i), env, f)? {
                out.insert(i);
            }
        }
        Ok(out)
    }
}

/// Finite transition relation as pairs of grid-state indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransitionRelation {
    pub pairs: BTreeSet<(usize, usize)>,
}

impl TransitionRelation {
    pub fn identity_on(states: impl IntoIterator<Item = usize>) -> Self {
        TransitionRelation { pairs: states.into_iter().map(|s| (s, s)).collect() }
    }

    pub fn union(&self, other: &Self) -> Self {
        TransitionRelation { pairs: self.pairs.union(&other.pairs).copied().collect() }
    }

    pub fn compose(&self, other: &Self) -> Self {
        let mut pairs = BTreeSet::new();
        for &(a, b) in &self.pairs {
            for &(_, c) in other.pairs.range((b, 0)..=(b, usize::MAX)) {
                pairs.insert((a, c));
            }
        }
        TransitionRelation { pairs }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.pairs.range((s, 0)..=(s, usize::MAX)).map(|&(_, t)| t)
    }

    /// The relation with states expanded, for display and comparison.
    pub fn to_states(&self, grid: &Grid) -> Vec<(State, State)> {
        self.pairs.iter().map(|&(a, b)| (grid.state(a), grid.state(b))).collect()
    }
}

pub fn enumerate_transitions(
    alpha: &Program,
    grid: &Grid,
    env: &Environment,
    star_bound: usize,
) -> Result<TransitionRelation, OracleError> {
    let n = grid.len();
    match alpha {
        Program::Ode(_) => Err(OracleError::OdeInOracle),
        Program::Test(f) => Ok(TransitionRelation::identity_on(grid.satisfying(env, f)?)),
        Program::Assign(pairs) => {
            let axes: Vec<usize> = pairs.iter().map(|(v, _)| grid.axis(v)).collect::<Result<_, _>>()?;
            let mut rel = TransitionRelation::default();
            'states: for i in 0..n {
                let s = grid.state(i);
                let mut digits = grid.digits(i);
                for ((_, t), &k) in pairs.iter().zip(&axes) {
                    match grid.value_index(k, eval_term(&s, env, t)?) {
                        Some(d) => digits[k] = d,
                        None => continue 'states,
                    }
                }
                rel.pairs.insert((i, grid.compose(&digits)));
            }
            Ok(rel)
        }
        Program::Havoc(v) => {
            let k = grid.axis(v)?;
            let mut rel = TransitionRelation::default();
            for i in 0..n {
                let mut digits = grid.digits(i);
                for d in 0..grid.values[k].len() {
                    digits[k] = d;
                    rel.pairs.insert((i, grid.compose(&digits)));
                }
            }
            Ok(rel)
        }
        Program::Choice(a, b) => Ok(enumerate_transitions(a, grid, env, star_bound)?
            .union(&enumerate_transitions(b, grid, env, star_bound)?)),
        Program::Seq(a, b) => Ok(enumerate_transitions(a, grid, env, star_bound)?
            .compose(&enumerate_transitions(b, grid, env, star_bound)?)),
        Program::Star(a) => {
            let step = enumerate_transitions(a, grid, env, star_bound)?;
            let mut acc = TransitionRelation::identity_on(0..n);
            for _ in 0..star_bound {
                let next = acc.union(&acc.compose(&step));
                if next == acc {
                    break;
                }
                acc = next;
            }
            Ok(acc)
        }
    }
}

/// Truth of a (possibly modal) quantifier-free formula at a grid state.
pub fn holds_at(
    f: &Formula,
    grid: &Grid,
    env: &Environment,
    state: usize,
    star_bound: usize,
) -> Result<bool, OracleError> {
    Ok(match f {
        Formula::Box(p, post) => {
            let rel = enumerate_transitions(p, grid, env, star_bound)?;
            for t in rel.successors(state) {
                if !holds_at(post, grid, env, t, star_bound)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Diamond(p, post) => {
            let rel = enumerate_transitions(p, grid, env, star_bound)?;
            for t in rel.successors(state) {
                if holds_at(post, grid, env, t, star_bound)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Not(a) => !holds_at(a, grid, env, state, star_bound)?,
        Formula::And(a, b) => holds_at(a, grid, env, state, star_bound)? && holds_at(b, grid, env, state, star_bound)?,
        Formula::Or(a, b) => holds_at(a, grid, env, state, star_bound)? || holds_at(b, grid, env, state, star_bound)?,
        Formula::Imp(a, b) => !holds_at(a, grid, env, state, star_bound)? || holds_at(b, grid, env, state, star_bound)?,
        other => eval_formula(&grid.state(state), env, other)?,
    })
}

/// Validity of a formula over every grid state.
pub fn valid_on(f: &Formula, grid: &Grid, env: &Environment, star_bound: usize) -> Result<bool, OracleError> {
    for s in 0..grid.len() {
        if !holds_at(f, grid, env, s, star_bound)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp::ast::{CmpOp, Term};

    fn x_grid(vals: &[f64]) -> Grid {
        Grid::uniform(&["x"], vals)
    }

    fn pairs(rel: &TransitionRelation, g: &Grid) -> BTreeSet<(i64, i64)> {
        rel.to_states(g).into_iter().map(|(a, b)| (a["x"] as i64, b["x"] as i64)).collect()
    }

    #[test]
    fn two_branch_choice() {
        let g = x_grid(&[0.0, 1.0]);
        let p = Program::choice(Program::assign("x", Term::c(0.0)), Program::assign("x", Term::c(1.0)));
        let rel = enumerate_transitions(&p, &g, &Environment::new(), 10).unwrap();
        assert_eq!(pairs(&rel, &g), [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().collect());
    }

    #[test]
    fn test_is_partial_identity() {
        let g = x_grid(&[0.0, 1.0]);
        let p = Program::test(Formula::cmp(Term::var("x"), CmpOp::Eq, Term::c(0.0)));
        let rel = enumerate_transitions(&p, &g, &Environment::new(), 10).unwrap();
        assert_eq!(pairs(&rel, &g), [(0, 0)].into_iter().collect());
    }

    #[test]
    fn star_of_increment() {
        let g = x_grid(&[0.0, 1.0, 2.0]);
        let p = Program::star(Program::assign("x", Term::add(Term::var("x"), Term::c(1.0))));
        let rel = enumerate_transitions(&p, &g, &Environment::new(), 100).unwrap();
        let expect: BTreeSet<_> = (0..3).flat_map(|v| (v..3).map(move |w| (v, w))).collect();
        assert_eq!(pairs(&rel, &g), expect);
    }

    #[test]
    fn ode_rejected() {
        let g = x_grid(&[0.0]);
        let p = Program::Ode(crate::hp::ast::Ode { eqs: vec![("x".into(), Term::c(1.0))], domain: Formula::True });
        assert_eq!(enumerate_transitions(&p, &g, &Environment::new(), 1), Err(OracleError::OdeInOracle));
    }

    #[test]
    fn havoc_covers_axis() {
        let g = Grid::uniform(&["x", "y"], &[0.0, 1.0]);
        let rel = enumerate_transitions(&Program::Havoc("x".into()), &g, &Environment::new(), 1).unwrap();
        assert_eq!(rel.pairs.len(), 8);
        for (a, b) in rel.to_states(&g) {
            assert_eq!(a["y"], b["y"]);
        }
    }

    #[test]
    fn box_modality_on_grid() {
        let g = x_grid(&[0.0, 1.0, 2.0]);
        let inc = Program::star(Program::assign("x", Term::add(Term::var("x"), Term::c(1.0))));
        let f = Formula::boxed(inc, Formula::cmp(Term::var("x"), CmpOp::Ge, Term::c(1.0)));
        let env = Environment::new();
        assert!(!holds_at(&f, &g, &env, 0, 10).unwrap());
        assert!(holds_at(&f, &g, &env, 1, 10).unwrap());
    }
}
