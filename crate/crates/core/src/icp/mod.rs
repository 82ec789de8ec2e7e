//! δ-complete satisfiability of conjunctions of real constraints by interval
//! branch-and-prune.

pub mod dump;
pub mod expr;
pub mod formula;
pub mod interval;
pub mod lie;
pub mod random;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::hp::{CmpOp, State, Term};
use crate::poly::Poly;

pub use expr::{Enclosure, Tape};
pub use formula::{check_formula, to_dnf};
pub use interval::Interval;
pub use lie::{differentiate, lie_derivative};

pub const DEFAULT_DELTA: f64 = 1e-4;
pub const DEFAULT_BOX_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IcpError {
    #[error("variable `{0}` is not in the domain box")]
    UnknownVariable(String),
    #[error("domain of `{0}` is unbounded or empty")]
    BadDomain(String),
    #[error("precision delta must be positive, got {0}")]
    BadDelta(f64),
    #[error("box budget of {0} exhausted before a verdict")]
    ResourceLimit(usize),
    #[error("{0} is not supported in arithmetic queries")]
    Unsupported(&'static str),
}

/// Axis-aligned box over named variables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalBox {
    pub vars: Vec<String>,
    pub ivs: Vec<Interval>,
}

impl IntervalBox {
    pub fn new(pairs: impl IntoIterator<Item = (String, Interval)>) -> IntervalBox {
        let (vars, ivs) = pairs.into_iter().unzip();
        IntervalBox { vars, ivs }
    }

    pub fn from_bounds(pairs: &[(&str, f64, f64)]) -> IntervalBox {
        IntervalBox::new(pairs.iter().map(|(v, lo, hi)| (v.to_string(), Interval::new(*lo, *hi))))
    }

    pub fn get(&self, var: &str) -> Option<Interval> {
        self.vars.iter().position(|v| v == var).map(|i| self.ivs[i])
    }

    pub fn set(&mut self, var: &str, iv: Interval) {
        match self.vars.iter().position(|v| v == var) {
            Some(i) => self.ivs[i] = iv,
            None => {
                self.vars.push(var.to_string());
                self.ivs.push(iv);
            }
        }
    }

    pub fn width(&self) -> f64 {
        self.ivs.iter().map(Interval::width).fold(0.0, f64::max)
    }

    pub fn midpoint(&self) -> State {
        self.vars.iter().cloned().zip(self.ivs.iter().map(Interval::mid)).collect()
    }

    pub fn contains(&self, s: &State) -> bool {
        self.vars.iter().zip(&self.ivs).all(|(v, iv)| s.get(v).is_some_and(|x| iv.contains(*x)))
    }
}

impl fmt::Display for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vars.iter().zip(&self.ivs).map(|(v, iv)| format!("{v} in {iv}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Natural interval extension of a term over a box (no dependency tracking).
pub fn interval_eval(t: &Term, b: &IntervalBox) -> Result<Interval, IcpError> {
    Ok(Tape::compile(t, &b.vars)?.eval_interval(&b.ivs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rel {
    /// `e <= 0`
    Le,
    /// `e < 0`
    Lt,
    /// `e = 0`
    Eq,
}

/// Normalized constraint `term rel 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub term: Term,
    pub rel: Rel,
}

impl Constraint {
    pub fn new(term: Term, rel: Rel) -> Constraint {
        Constraint { term, rel }
    }

    /// Normal form of `a op b`; `None` for `!=`, which is a disjunction.
    pub fn from_cmp(a: &Term, op: CmpOp, b: &Term) -> Option<Constraint> {
        let d = |x: &Term, y: &Term| {
            if matches!(y, Term::Const(c) if *c == 0.0) {
                x.clone()
            } else {
                Term::sub(x.clone(), y.clone())
            }
        };
        Some(match op {
            CmpOp::Le => Constraint::new(d(a, b), Rel::Le),
            CmpOp::Lt => Constraint::new(d(a, b), Rel::Lt),
            CmpOp::Ge => Constraint::new(d(b, a), Rel::Le),
            CmpOp::Gt => Constraint::new(d(b, a), Rel::Lt),
            CmpOp::Eq => Constraint::new(d(a, b), Rel::Eq),
            CmpOp::Ne => return None,
        })
    }

    /// Satisfaction with every bound relaxed by `delta`, judged on an enclosure.
    fn weakly_holds(&self, iv: Interval, delta: f64) -> bool {
        match self.rel {
            Rel::Le | Rel::Lt => iv.lo <= delta,
            Rel::Eq => iv.lo <= delta && iv.hi >= -delta,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.rel {
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Eq => "=",
        };
        write!(f, "{} {op} 0", self.term)
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub constraints: Vec<Constraint>,
    pub domain: IntervalBox,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum DeltaResult {
    Unsat,
    DeltaSat(IntervalBox),
}

impl DeltaResult {
    pub fn is_unsat(&self) -> bool {
        matches!(self, DeltaResult::Unsat)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub boxes: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct IcpConfig {
    pub max_boxes: usize,
}

impl Default for IcpConfig {
    fn default() -> Self {
        let max_boxes = std::env::var("FICUT_BOX_BUDGET")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(DEFAULT_BOX_BUDGET);
        IcpConfig { max_boxes }
    }
}

pub fn check(sys: &ConstraintSystem) -> Result<DeltaResult, IcpError> {
    check_with(sys, &IcpConfig::default()).map(|(r, _)| r)
}

struct Compiled {
    enc: Enclosure,
    rel: Rel,
}

/// Does the point satisfy the δ-weakened system? Judged by interval
/// evaluation at the point; undefined terms fail.
pub fn satisfies_weakened(sys: &ConstraintSystem, point: &State) -> Result<bool, IcpError> {
    let b = IntervalBox::new(sys.domain.vars.iter().map(|v| {
        let x = point.get(v).copied().unwrap_or(f64::NAN);
        (v.clone(), Interval::point(x))
    }));
    for c in &sys.constraints {
        let iv = Tape::compile(&c.term, &b.vars)?.eval_interval(&b.ivs);
        if iv.lo.is_nan() || !c.weakly_holds(iv, sys.delta) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact `var = value` from an equality that is `±var + const`.
fn pinned_value(c: &Constraint) -> Option<(String, f64)> {
    if c.rel != Rel::Eq {
        return None;
    }
    let p = Poly::from_term(&c.term)?;
    if p.degree() != 1 {
        return None;
    }
    let vars = p.vars();
    if vars.len() != 1 {
        return None;
    }
    let v = vars.into_iter().next()?;
    let a = p.coeff(&vec![(v.clone(), 1)]);
    let k = p.coeff(&Vec::new());
    if a.abs() != 1.0 {
        return None;
    }
    Some((v, -k * a))
}

/// Redundant nonnegative combinations `g_i + λ g_j` that cancel a shared monomial.
fn combinations(cs: &[Constraint]) -> Vec<Constraint> {
    let polys: Vec<Option<Poly>> = cs
        .iter()
        .map(|c| if c.rel == Rel::Eq { None } else { Poly::from_term(&c.term) })
        .collect();
    let mut out = Vec::new();
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            let (Some(pi), Some(pj)) = (&polys[i], &polys[j]) else { continue };
            for (m, ci) in &pi.terms {
                if m.is_empty() {
                    continue;
                }
                let cj = pj.coeff(m);
                // cancel m with a positive multiple of g_j
                if cj == 0.0 || ci.signum() == cj.signum() {
                    continue;
                }
                let lambda = -ci / cj;
                let term = Term::add(cs[i].term.clone(), Term::mul(Term::c(lambda), cs[j].term.clone()));
                let rel = if cs[i].rel == Rel::Lt || cs[j].rel == Rel::Lt { Rel::Lt } else { Rel::Le };
                out.push(Constraint::new(term, rel));
            }
        }
    }
    out
}

enum Verdict {
    Prune,
    Certain,
    Unknown,
}

fn judge(cs: &[Compiled], ivs: &[Interval]) -> Verdict {
    let mut certain = true;
    for c in cs {
        let iv = c.enc.eval(ivs);
        if iv.lo.is_nan() || iv.hi.is_nan() {
            certain = false;
            continue;
        }
        match c.rel {
            Rel::Le => {
                if iv.lo > 0.0 {
                    return Verdict::Prune;
                }
                certain &= iv.hi <= 0.0;
            }
            Rel::Lt => {
                if iv.lo >= 0.0 {
                    return Verdict::Prune;
                }
                certain &= iv.hi < 0.0;
            }
            Rel::Eq => {
                if !iv.contains(0.0) {
                    return Verdict::Prune;
                }
                certain &= iv.lo == 0.0 && iv.hi == 0.0;
            }
        }
    }
    if certain {
        Verdict::Certain
    } else {
        Verdict::Unknown
    }
}

/// Witness box of width at most `delta`, centered in `ivs`.
fn witness(vars: &[String], ivs: &[Interval], delta: f64) -> IntervalBox {
    IntervalBox::new(vars.iter().cloned().zip(ivs.iter().map(|iv| {
        if iv.width() <= delta {
            *iv
        } else {
            let (m, half) = (iv.mid(), 0.499_999 * delta);
            Interval::new((m - half).max(iv.lo), (m + half).min(iv.hi))
        }
    })))
}

pub fn check_with(sys: &ConstraintSystem, cfg: &IcpConfig) -> Result<(DeltaResult, Stats), IcpError> {
    if !(sys.delta > 0.0) {
        return Err(IcpError::BadDelta(sys.delta));
    }
    for (v, iv) in sys.domain.vars.iter().zip(&sys.domain.ivs) {
        if !iv.is_finite() || iv.lo > iv.hi {
            return Err(IcpError::BadDomain(v.clone()));
        }
    }
    let mut stats = Stats::default();
    let mut domain = sys.domain.clone();
    let mut constraints = sys.constraints.clone();

    // pin variables fixed by exact equalities
    loop {
        let Some(pos) = constraints.iter().position(|c| pinned_value(c).is_some()) else { break };
        let (v, x) = pinned_value(&constraints[pos]).expect("checked");
        let Some(iv) = domain.get(&v) else { return Err(IcpError::UnknownVariable(v)) };
        if !iv.contains(x) {
            return Ok((DeltaResult::Unsat, stats));
        }
        domain.set(&v, Interval::point(x));
        constraints.remove(pos);
        let map = [(v.clone(), Term::c(x))];
        for c in &mut constraints {
            c.term = c.term.substitute(&map);
        }
    }
    // the weakened check is judged on the constraints proper, not the combinations
    let weak_sys = ConstraintSystem { constraints: constraints.clone(), domain: domain.clone(), delta: sys.delta };
    let extra = combinations(&constraints);
    constraints.extend(extra);

    let compiled: Vec<Compiled> = constraints
        .iter()
        .map(|c| Ok(Compiled { enc: Enclosure::new(&c.term, &domain.vars)?, rel: c.rel }))
        .collect::<Result<_, IcpError>>()?;

    let vars = domain.vars.clone();
    let mut stack: Vec<Vec<Interval>> = vec![domain.ivs.clone()];
    while let Some(ivs) = stack.pop() {
        stats.boxes += 1;
        if stats.boxes > cfg.max_boxes {
            return Err(IcpError::ResourceLimit(cfg.max_boxes));
        }
        match judge(&compiled, &ivs) {
            Verdict::Prune => continue,
            Verdict::Certain => return Ok((DeltaResult::DeltaSat(witness(&vars, &ivs, sys.delta)), stats)),
            Verdict::Unknown => {}
        }
        let (axis, width) = ivs
            .iter()
            .enumerate()
            .map(|(i, iv)| (i, iv.width()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if width <= sys.delta {
            let b = IntervalBox::new(vars.iter().cloned().zip(ivs.iter().copied()));
            if satisfies_weakened(&weak_sys, &b.midpoint())? {
                return Ok((DeltaResult::DeltaSat(b), stats));
            }
            if width == 0.0 {
                // a single point that is not a weak solution
                continue;
            }
        }
        let mid = ivs[axis].mid();
        let mut left = ivs.clone();
        let mut right = ivs;
        left[axis].hi = mid;
        right[axis].lo = mid;
        stack.push(right);
        stack.push(left);
    }
    Ok((DeltaResult::Unsat, stats))
}
