//! Compiled terms and their interval enclosures.
//!
//! A term is evaluated two ways and the results intersected: the natural
//! interval extension of its syntax tree, and (for polynomials) the expanded
//! monomial form, where a degree-≤2 part with a definite quadratic form gets a
//! completed-square lower bound. Other terms get a mean-value form
//! `f(m) + ∇f(X)·(X − m)` on boxes where they are smooth.

use crate::hp::Term;
use crate::linalg::{self, Matrix};
use crate::poly::{monomial_degree, Poly};

use super::interval::{Interval, SLACK};
use super::lie::differentiate;
use super::IcpError;

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, u32),
    Sqrt(usize),
}

/// Straight-line program over variable indices; the last op is the root.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
}

impl Tape {
    pub fn compile(t: &Term, vars: &[String]) -> Result<Tape, IcpError> {
        let mut ops = Vec::new();
        fn go(t: &Term, vars: &[String], ops: &mut Vec<Op>) -> Result<usize, IcpError> {
            let op = match t {
                Term::Const(c) => Op::Const(*c),
                Term::Var(v) | Term::Param(v) => Op::Var(
                    vars.iter().position(|w| w == v).ok_or_else(|| IcpError::UnknownVariable(v.clone()))?,
                ),
                Term::Neg(a) => Op::Neg(go(a, vars, ops)?),
                Term::Add(a, b) => Op::Add(go(a, vars, ops)?, go(b, vars, ops)?),
                Term::Sub(a, b) => Op::Sub(go(a, vars, ops)?, go(b, vars, ops)?),
                Term::Mul(a, b) => Op::Mul(go(a, vars, ops)?, go(b, vars, ops)?),
                Term::Div(a, b) => Op::Div(go(a, vars, ops)?, go(b, vars, ops)?),
                Term::Pow(a, n) => Op::Pow(go(a, vars, ops)?, *n),
                Term::Sqrt(a) => Op::Sqrt(go(a, vars, ops)?),
            };
            ops.push(op);
            Ok(ops.len() - 1)
        }
        go(t, vars, &mut ops)?;
        Ok(Tape { ops })
    }

    pub fn eval_interval(&self, b: &[Interval]) -> Interval {
        let mut v: Vec<Interval> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let r = match *op {
                Op::Const(c) => Interval::point(c),
                Op::Var(i) => b[i],
                Op::Neg(a) => v[a].neg(),
                Op::Add(a, c) => v[a].add(v[c]),
                Op::Sub(a, c) => v[a].sub(v[c]),
                Op::Mul(a, c) if a == c => v[a].powi(2),
                Op::Mul(a, c) => v[a].mul(v[c]),
                Op::Div(a, c) => v[a].div(v[c]),
                Op::Pow(a, n) => v[a].powi(n),
                Op::Sqrt(a) => v[a].sqrt(),
            };
            v.push(r);
        }
        *v.last().expect("nonempty tape")
    }

    /// Natural extension plus whether the term is smooth on the box: every
    /// square root argument positive and every divisor bounded away from 0.
    fn eval_smooth(&self, b: &[Interval]) -> (Interval, bool) {
        let mut v: Vec<Interval> = Vec::with_capacity(self.ops.len());
        let mut smooth = true;
        for op in &self.ops {
            let r = match *op {
                Op::Const(c) => Interval::point(c),
                Op::Var(i) => b[i],
                Op::Neg(a) => v[a].neg(),
                Op::Add(a, c) => v[a].add(v[c]),
                Op::Sub(a, c) => v[a].sub(v[c]),
                Op::Mul(a, c) if a == c => v[a].powi(2),
                Op::Mul(a, c) => v[a].mul(v[c]),
                Op::Div(a, c) => {
                    smooth &= v[c].lo > 0.0 || v[c].hi < 0.0;
                    v[a].div(v[c])
                }
                Op::Pow(a, n) => v[a].powi(n),
                Op::Sqrt(a) => {
                    smooth &= v[a].lo > 0.0;
                    v[a].sqrt()
                }
            };
            v.push(r);
        }
        (*v.last().expect("nonempty tape"), smooth)
    }

    /// Point evaluation; NaN where the term is undefined.
    pub fn eval_point(&self, x: &[f64]) -> f64 {
        let mut v: Vec<f64> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let r = match *op {
                Op::Const(c) => c,
                Op::Var(i) => x[i],
                Op::Neg(a) => -v[a],
                Op::Add(a, c) => v[a] + v[c],
                Op::Sub(a, c) => v[a] - v[c],
                Op::Mul(a, c) => v[a] * v[c],
                Op::Div(a, c) => {
                    if v[c] == 0.0 {
                        f64::NAN
                    } else {
                        v[a] / v[c]
                    }
                }
                Op::Pow(a, n) => v[a].powi(n as i32),
                Op::Sqrt(a) => v[a].sqrt(),
            };
            v.push(r);
        }
        *v.last().expect("nonempty tape")
    }
}

fn has_param(t: &Term) -> bool {
    match t {
        Term::Param(_) => true,
        Term::Const(_) | Term::Var(_) => false,
        Term::Neg(a) | Term::Pow(a, _) | Term::Sqrt(a) => has_param(a),
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => has_param(a) || has_param(b),
    }
}

type Mono = Vec<(usize, u32)>;

fn eval_mono(m: &Mono, b: &[Interval]) -> Interval {
    m.iter().fold(Interval::point(1.0), |acc, &(i, e)| acc.mul(b[i].powi(e)))
}

/// Completed-square bound `s·q(x) ≥ m‖x − c‖² + s·r(x)` for a degree-≤2 part.
#[derive(Clone, Debug)]
struct QuadBound {
    sign: f64,
    vars: Vec<usize>,
    center: Vec<f64>,
    margin: f64,
    /// residual affine part `g·x + k`, coefficients as enclosures
    lin: Vec<Interval>,
    k: Interval,
    /// centered at the origin with no linear part: expansion error of the
    /// quadratic monomials is already folded into `margin`
    homogeneous: bool,
}

impl QuadBound {
    fn build(p2: &Poly, names: &[String]) -> Option<QuadBound> {
        let vars_s: Vec<String> = p2.vars().into_iter().collect();
        if vars_s.is_empty() {
            return None;
        }
        let q = p2.quadratic_matrix(&vars_s)?;
        let b: Vec<f64> = vars_s.iter().map(|v| p2.coeff(&vec![(v.clone(), 1)])).collect();
        let c = p2.coeff(&Vec::new());
        for sign in [1.0, -1.0] {
            let sq: Matrix = q.iter().map(|r| r.iter().map(|x| sign * x).collect()).collect();
            let Some(margin) = linalg::definite_margin(&sq) else { continue };
            let sb: Vec<f64> = b.iter().map(|x| sign * x).collect();
            // center = -1/2 (sQ)^-1 (sb)
            let rhs: Vec<f64> = sb.iter().map(|x| -0.5 * x).collect();
            let center = linalg::solve(&sq, &rhs)?;
            let n = vars_s.len();
            // residual g = sb + 2 sQ c, k = sc - cᵀ sQ c, in interval arithmetic
            let mut lin = Vec::with_capacity(n);
            for i in 0..n {
                let mut g = Interval::point(sb[i]);
                for j in 0..n {
                    g = g.add(Interval::point(2.0).mul(Interval::point(sq[i][j])).mul(Interval::point(center[j])));
                }
                lin.push(g);
            }
            let mut k = Interval::point(sign * c);
            for i in 0..n {
                for j in 0..n {
                    k = k.sub(Interval::point(center[i]).mul(Interval::point(sq[i][j])).mul(Interval::point(center[j])));
                }
            }
            let vars = vars_s.iter().map(|v| names.iter().position(|w| w == v)).collect::<Option<Vec<_>>>()?;
            let homogeneous = b.iter().all(|x| *x == 0.0) && center.iter().all(|x| *x == 0.0);
            let mut margin = margin;
            if homogeneous {
                let quad_abs: f64 = p2.homogeneous(2).terms.values().map(|c| c.abs()).sum();
                margin -= 1e-12 * quad_abs;
                if margin <= 0.0 {
                    continue;
                }
            }
            return Some(QuadBound { sign, vars, center, margin, lin, k, homogeneous });
        }
        None
    }

    /// Lower bound of `sign * q` over the box.
    fn lower(&self, b: &[Interval]) -> f64 {
        let mut d2 = 0.0;
        let mut r = self.k;
        for (t, &i) in self.vars.iter().enumerate() {
            let x = b[i];
            let c = self.center[t];
            let d = (x.lo - c).max(c - x.hi).max(0.0);
            d2 += d * d;
            r = r.add(self.lin[t].mul(x));
        }
        let sq = self.margin * d2;
        let sq = sq - 4.0 * SLACK * sq;
        let lo = sq + r.lo;
        lo - SLACK * lo.abs()
    }
}

#[derive(Clone, Debug)]
struct PolyForm {
    low: Vec<(f64, Mono)>,
    high: Vec<(f64, Mono)>,
    quad: Option<QuadBound>,
}

/// Sound enclosure of one term over boxes.
#[derive(Clone, Debug)]
pub struct Enclosure {
    pub tape: Tape,
    poly: Option<PolyForm>,
    /// `(variable index, ∂f/∂x)` for the mean-value form of non-polynomials.
    grad: Vec<(usize, Tape)>,
}

impl Enclosure {
    pub fn new(t: &Term, vars: &[String]) -> Result<Enclosure, IcpError> {
        let tape = Tape::compile(t, vars)?;
        let poly = Poly::from_term(t).and_then(|p| {
            let idx = |v: &String| vars.iter().position(|w| w == v);
            let mut low = Vec::new();
            let mut high = Vec::new();
            let mut p2 = Poly::default();
            for (m, c) in &p.terms {
                let mono: Mono = m.iter().map(|(v, e)| idx(v).map(|i| (i, *e))).collect::<Option<_>>()?;
                if monomial_degree(m) <= 2 {
                    low.push((*c, mono));
                    p2.add_term(m.clone(), *c);
                } else {
                    high.push((*c, mono));
                }
            }
            let quad = QuadBound::build(&p2, vars);
            Some(PolyForm { low, high, quad })
        });
        let mut grad = Vec::new();
        // differentiation treats logical variables as constants, so they opt out
        if poly.is_none() && !has_param(t) {
            let used = t.state_vars();
            for (i, v) in vars.iter().enumerate().filter(|(_, v)| used.contains(*v)) {
                grad.push((i, Tape::compile(&differentiate(t, v), vars)?));
            }
        }
        Ok(Enclosure { tape, poly, grad })
    }

    fn mean_value(&self, b: &[Interval], natural: Interval) -> Interval {
        let mid: Vec<Interval> = b.iter().map(|iv| Interval::point(iv.mid())).collect();
        let mut acc = self.tape.eval_interval(&mid);
        for (i, g) in &self.grad {
            acc = acc.add(g.eval_interval(b).mul(b[*i].sub(mid[*i])));
        }
        if acc.lo.is_nan() || acc.hi.is_nan() {
            return natural;
        }
        natural.meet(&acc).unwrap_or(natural)
    }

    pub fn eval(&self, b: &[Interval]) -> Interval {
        let Some(pf) = &self.poly else {
            let (natural, smooth) = self.tape.eval_smooth(b);
            if smooth && !self.grad.is_empty() && natural.width() > 0.0 {
                return self.mean_value(b, natural);
            }
            return natural;
        };
        let natural = self.tape.eval_interval(b);
        let sum = |terms: &[(f64, Mono)]| {
            terms.iter().fold(Interval::point(0.0), |acc, (c, m)| acc.add(eval_mono(m, b).scale(*c)))
        };
        // cushions for rounding in the coefficient expansion itself
        let cushion = |terms: &[(f64, Mono)], keep: &dyn Fn(&Mono) -> bool| -> f64 {
            1e-12 * terms.iter().filter(|(_, m)| keep(m)).map(|(c, m)| c.abs() * eval_mono(m, b).mag()).sum::<f64>()
        };
        let all = |_: &Mono| true;
        let low_nat = sum(&pf.low);
        let c_low = cushion(&pf.low, &all);
        let (mut lo, mut hi) = (low_nat.lo - c_low, low_nat.hi + c_low);
        if let Some(q) = &pf.quad {
            let c = if q.homogeneous {
                cushion(&pf.low, &|m: &Mono| m.iter().map(|(_, e)| e).sum::<u32>() < 2)
            } else {
                c_low
            };
            let lb = q.lower(b);
            if q.sign > 0.0 {
                lo = lo.max(lb - c);
            } else {
                hi = hi.min(-lb + c);
            }
        }
        if lo > hi {
            // both bounds are sound, so the range is empty: keep the natural one
            return natural;
        }
        let high_nat = sum(&pf.high);
        let c_high = cushion(&pf.high, &all);
        let expanded = Interval { lo, hi }.add(Interval { lo: high_nat.lo - c_high, hi: high_nat.hi + c_high });
        natural.meet(&expanded).unwrap_or(expanded)
    }
}
