//! Sparse multivariate polynomials over state variables.
//!
//! Used for expanded normal forms (tighter interval enclosures, quadratic
//! definiteness tests) and for certificate bases.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::hp::{State, Term};

/// Exponent vector as sorted `(variable, exponent > 0)` pairs; empty is the constant monomial.
pub type Monomial = Vec<(String, u32)>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, f64>,
}

pub fn monomial_degree(m: &Monomial) -> u32 {
    m.iter().map(|(_, e)| e).sum()
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut map: BTreeMap<String, u32> = a.iter().cloned().collect();
    for (v, e) in b {
        *map.entry(v.clone()).or_insert(0) += e;
    }
    map.into_iter().collect()
}

pub fn monomial_term(m: &Monomial) -> Term {
    let factors = m.iter().map(|(v, e)| if *e == 1 { Term::var(v) } else { Term::pow(Term::var(v), *e) });
    let mut it = factors;
    match it.next() {
        None => Term::c(1.0),
        Some(first) => it.fold(first, Term::mul),
    }
}

pub fn monomial_eval(m: &Monomial, s: &State) -> f64 {
    m.iter().map(|(v, e)| s.get(v).copied().unwrap_or(f64::NAN).powi(*e as i32)).product()
}

/// All monomials of total degree in `min_deg..=max_deg`, graded then lexicographic.
pub fn monomial_basis(vars: &[String], min_deg: u32, max_deg: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for d in min_deg..=max_deg {
        let mut cur = vec![0u32; vars.len()];
        fn rec(k: usize, left: u32, cur: &mut Vec<u32>, vars: &[String], out: &mut Vec<Monomial>) {
            if k == vars.len() {
                if left == 0 {
                    out.push(
                        vars.iter().zip(cur.iter()).filter(|(_, e)| **e > 0).map(|(v, e)| (v.clone(), *e)).collect(),
                    );
                }
                return;
            }
            for e in (0..=left).rev() {
                cur[k] = e;
                rec(k + 1, left - e, cur, vars, out);
            }
            cur[k] = 0;
        }
        rec(0, d, &mut cur, vars, &mut out);
    }
    out
}

impl Poly {
    pub fn constant(c: f64) -> Poly {
        let mut p = Poly::default();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn var(v: &str) -> Poly {
        let mut p = Poly::default();
        p.add_term(vec![(v.to_string(), 1)], 1.0);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(m).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            // remove exact cancellations
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn scale(&self, k: f64) -> Poly {
        let mut out = Poly::default();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * k);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Expanded form of a term; `None` for non-polynomial terms (sqrt, division
    /// by a non-constant) and terms with logical variables.
    pub fn from_term(t: &Term) -> Option<Poly> {
        Some(match t {
            Term::Const(c) => Poly::constant(*c),
            Term::Var(v) => Poly::var(v),
            Term::Param(_) => return None,
            Term::Neg(a) => Poly::from_term(a)?.scale(-1.0),
            Term::Add(a, b) => Poly::from_term(a)?.add(&Poly::from_term(b)?),
            Term::Sub(a, b) => Poly::from_term(a)?.sub(&Poly::from_term(b)?),
            Term::Mul(a, b) => Poly::from_term(a)?.mul(&Poly::from_term(b)?),
            Term::Div(a, b) => {
                let d = Poly::from_term(b)?.as_constant()?;
                if d == 0.0 {
                    return None;
                }
                Poly::from_term(a)?.scale(1.0 / d)
            }
            Term::Pow(a, n) => Poly::from_term(a)?.pow(*n),
            Term::Sqrt(a) => {
                let v = Poly::from_term(a)?.as_constant()?;
                if v < 0.0 {
                    return None;
                }
                Poly::constant(v.sqrt())
            }
        })
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(monomial_degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| v.clone())).collect()
    }

    pub fn eval(&self, s: &State) -> f64 {
        self.terms.iter().map(|(m, c)| c * monomial_eval(m, s)).sum()
    }

    /// Part of exactly the given total degree.
    pub fn homogeneous(&self, d: u32) -> Poly {
        Poly { terms: self.terms.iter().filter(|(m, _)| monomial_degree(m) == d).map(|(m, c)| (m.clone(), *c)).collect() }
    }

    /// Symmetric matrix of a homogeneous quadratic over `vars`, or `None` when
    /// a quadratic monomial mentions a variable outside `vars`.
    pub fn quadratic_matrix(&self, vars: &[String]) -> Option<Vec<Vec<f64>>> {
        let n = vars.len();
        let mut q = vec![vec![0.0; n]; n];
        let idx = |v: &str| vars.iter().position(|w| w == v);
        for (m, c) in &self.terms {
            if monomial_degree(m) != 2 {
                continue;
            }
            match m.as_slice() {
                [(v, 2)] => {
                    let i = idx(v)?;
                    q[i][i] += c;
                }
                [(v, 1), (w, 1)] => {
                    let (i, j) = (idx(v)?, idx(w)?);
                    q[i][j] += c / 2.0;
                    q[j][i] += c / 2.0;
                }
                _ => unreachable!("degree-2 monomial shape"),
            }
        }
        Some(q)
    }

    pub fn to_term(&self) -> Term {
        if self.terms.is_empty() {
            return Term::c(0.0);
        }
        let mut acc: Option<Term> = None;
        for (m, c) in &self.terms {
            let mono = monomial_term(m);
            let (neg, piece) = if m.is_empty() {
                (false, Term::c(*c))
            } else if *c == 1.0 {
                (false, mono)
            } else if *c == -1.0 {
                (true, mono)
            } else if *c < 0.0 {
                (true, Term::mul(Term::c(-c), mono))
            } else {
                (false, Term::mul(Term::c(*c), mono))
            };
            acc = Some(match acc {
                None if neg => Term::neg(piece),
                None => piece,
                Some(a) if neg => Term::sub(a, piece),
                Some(a) => Term::add(a, piece),
            });
        }
        acc.unwrap()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}
