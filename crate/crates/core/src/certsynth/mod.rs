//! Certificate construction: exact quadratic Lyapunov functions for linear
//! modes, LP-based polynomial candidates refined against counterexamples, and
//! the sublevel-set machinery (level selection, linear images, containment).

mod file;
mod level;
mod lp;
mod lyapunov;
mod refine;
mod search;
pub mod simplex;

use thiserror::Error;

use crate::hp::{CmpOp, Formula, State, Term};
use crate::icp::{IcpError, IntervalBox};
use crate::linalg::{cholesky, Matrix};
use crate::poly::{monomial_eval, Monomial, Poly};

pub use file::{read_certificate, write_certificate, Certificate, CertificateFile};
pub use level::{ellipsoid_image, level_passes, select_level, sublevel_contained, Containment, LevelFailure};
pub use lp::{build_problem, lp_candidate, replay_row, LpOutcome, LpProblem, LpRow, LpSpec, Provenance, RowKind};
pub use lyapunov::solve_lyapunov_linear;
pub use refine::{refine_loop, RefineConfig, RefineFailure, RefineSuccess};
pub use search::{counterexample_search, halton, multistart, nelder_mead};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("no quadratic certificate: {0}")]
    NoQuadratic(String),
    #[error("singular reset matrix (|det| = {0:e})")]
    SingularReset(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("LP infeasible")]
    Infeasible,
    #[error(transparent)]
    Icp(#[from] IcpError),
    #[error("certificate file line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// `C = {x | xᵀPx ≤ ℓ} ∧ guard`, with the Cholesky factor of `P` as the
/// positive-definiteness witness.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticCertificate {
    pub vars: Vec<String>,
    pub p: Matrix,
    pub level: Option<f64>,
    pub guard: Option<Formula>,
    pub cholesky: Matrix,
}

impl QuadraticCertificate {
    /// Validates symmetry and definiteness.
    pub fn new(vars: Vec<String>, p: Matrix) -> Result<QuadraticCertificate, CertError> {
        let n = vars.len();
        if p.len() != n || p.iter().any(|r| r.len() != n) {
            return Err(CertError::Dimension(format!("P must be {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..n {
                if (p[i][j] - p[j][i]).abs() >= 1e-12 {
                    return Err(CertError::NoQuadratic(format!("P is not symmetric at ({i},{j})")));
                }
            }
        }
        let l = cholesky(&p).ok_or_else(|| CertError::NoQuadratic("P is not positive definite".into()))?;
        Ok(QuadraticCertificate { vars, p, level: None, guard: None, cholesky: l })
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = Some(level);
        self
    }

    pub fn with_guard(mut self, guard: Formula) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn poly(&self) -> Poly {
        let mut out = Poly::default();
        for (i, vi) in self.vars.iter().enumerate() {
            for (j, vj) in self.vars.iter().enumerate().skip(i) {
                let c = if i == j { self.p[i][i] } else { 2.0 * self.p[i][j] };
                out = out.add(&Poly::var(vi).mul(&Poly::var(vj)).scale(c));
            }
        }
        out
    }

    /// `xᵀPx` as an expanded term.
    pub fn value_term(&self) -> Term {
        self.poly().to_term()
    }

    pub fn value(&self, s: &State) -> f64 {
        self.poly().eval(s)
    }

    /// `xᵀPx ≤ ℓ ∧ guard`; the level defaults to 0 when unset.
    pub fn formula(&self) -> Formula {
        let sub = Formula::cmp(self.value_term(), CmpOp::Le, Term::c(self.level.unwrap_or(0.0)));
        match &self.guard {
            Some(g) => Formula::and(g.clone(), sub),
            None => sub,
        }
    }
}

/// Polynomial `B(x) = Σ cₖ zₖ(x − center)` over a monomial basis `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierCertificate {
    pub vars: Vec<String>,
    pub basis: Vec<Monomial>,
    pub coeffs: Vec<f64>,
    /// Expansion point of the basis (the equilibrium for Lyapunov candidates).
    pub center: Vec<f64>,
    pub domain: IntervalBox,
    pub margin: f64,
}

impl BarrierCertificate {
    fn shifted(&self, s: &State) -> State {
        self.vars.iter().zip(&self.center).map(|(v, c)| (v.clone(), s.get(v).copied().unwrap_or(f64::NAN) - c)).collect()
    }

    pub fn eval(&self, s: &State) -> f64 {
        let y = self.shifted(s);
        self.basis.iter().zip(&self.coeffs).map(|(m, c)| c * monomial_eval(m, &y)).sum()
    }

    /// The polynomial in the original coordinates, expanded.
    pub fn poly(&self) -> Poly {
        let shift: Vec<(String, Poly)> = self
            .vars
            .iter()
            .zip(&self.center)
            .map(|(v, c)| (v.clone(), Poly::var(v).sub(&Poly::constant(*c))))
            .collect();
        let mut out = Poly::default();
        for (m, c) in self.basis.iter().zip(&self.coeffs) {
            if *c == 0.0 {
                continue;
            }
            let mut p = Poly::constant(*c);
            for (v, e) in m {
                let base = shift.iter().find(|(w, _)| w == v).map(|(_, p)| p.clone()).unwrap_or_else(|| Poly::var(v));
                p = p.mul(&base.pow(*e));
            }
            out = out.add(&p);
        }
        out
    }

    pub fn term(&self) -> Term {
        self.poly().to_term()
    }

    /// The polynomial in shifted coordinates `y = x − center`, named like `x`.
    pub fn shifted_term(&self) -> Term {
        let mut out = Poly::default();
        for (m, c) in self.basis.iter().zip(&self.coeffs) {
            if *c != 0.0 {
                out.add_term(m.clone(), *c);
            }
        }
        out.to_term()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_poly_matches_matrix() {
        let q = QuadraticCertificate::new(vec!["x".into(), "y".into()], vec![vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let s: State = [("x".to_string(), 1.5), ("y".to_string(), -2.0)].into_iter().collect();
        assert!((q.value(&s) - (2.0 * 2.25 + 2.0 * 0.5 * 1.5 * -2.0 + 4.0)).abs() < 1e-12);
        assert!(QuadraticCertificate::new(vec!["x".into()], vec![vec![-1.0]]).is_err());
    }

    #[test]
    fn barrier_shift() {
        let b = BarrierCertificate {
            vars: vec!["x".into()],
            basis: vec![vec![("x".into(), 2)]],
            coeffs: vec![1.0],
            center: vec![2.0],
            domain: IntervalBox::from_bounds(&[("x", -5.0, 5.0)]),
            margin: 0.0,
        };
        let s: State = [("x".to_string(), 5.0)].into_iter().collect();
        assert_eq!(b.eval(&s), 9.0);
        assert_eq!(b.poly().eval(&s), 9.0);
    }
}
