//! Sublevel-set cuts: picking a separating level, images under linear
//! resets, and containment between sublevel sets.

use std::fmt;

use crate::hp::{CmpOp, Formula, Term};
use crate::icp::{check_formula, interval_eval, DeltaResult, IcpConfig, IntervalBox};
use crate::linalg::{determinant, inverse, mat_mul, transpose, Matrix};

use super::{CertError, QuadraticCertificate};

const GRID: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct LevelFailure {
    pub reason: String,
    /// state of `must_contain` outside the sublevel set
    pub contain_witness: Option<IntervalBox>,
    /// state of `must_exclude` inside the sublevel set
    pub exclude_witness: Option<IntervalBox>,
}

impl fmt::Display for LevelFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)?;
        if let Some(w) = &self.contain_witness {
            write!(f, "; not contained at {w}")?;
        }
        if let Some(w) = &self.exclude_witness {
            write!(f, "; not excluded at {w}")?;
        }
        Ok(())
    }
}

fn witness(r: DeltaResult) -> Option<IntervalBox> {
    match r {
        DeltaResult::Unsat => None,
        DeltaResult::DeltaSat(b) => Some(b),
    }
}

fn contain_check(v: &Term, must_contain: &Formula, level: f64, domain: &IntervalBox, delta: f64, icp: &IcpConfig) -> Result<Option<IntervalBox>, CertError> {
    let q = Formula::and(must_contain.clone(), Formula::cmp(v.clone(), CmpOp::Gt, Term::c(level)));
    Ok(witness(check_formula(&q, domain, delta, icp)?.0))
}

fn exclude_check(v: &Term, must_exclude: &Formula, level: f64, domain: &IntervalBox, delta: f64, icp: &IcpConfig) -> Result<Option<IntervalBox>, CertError> {
    let q = Formula::and(must_exclude.clone(), Formula::cmp(v.clone(), CmpOp::Le, Term::c(level)));
    Ok(witness(check_formula(&q, domain, delta, icp)?.0))
}

/// Both separation checks at one level; `Ok(())` when `V ≤ ℓ` contains
/// `must_contain` and is disjoint from `must_exclude`.
pub fn level_passes(
    v: &Term,
    must_contain: &Formula,
    must_exclude: &Formula,
    domain: &IntervalBox,
    delta: f64,
    icp: &IcpConfig,
    level: f64,
) -> Result<Result<(), LevelFailure>, CertError> {
    let c = contain_check(v, must_contain, level, domain, delta, icp)?;
    let e = exclude_check(v, must_exclude, level, domain, delta, icp)?;
    if c.is_none() && e.is_none() {
        Ok(Ok(()))
    } else {
        Ok(Err(LevelFailure { reason: format!("level {level} does not separate"), contain_witness: c, exclude_witness: e }))
    }
}

/// Smallest level on a grid of `ℓ_hi / 1000` steps (ℓ_hi = upper enclosure of
/// `V` on the domain) whose sublevel set contains `must_contain`; it must then
/// also exclude `must_exclude`. Containment is monotone in ℓ, so bisection
/// finds that grid point.
pub fn select_level(
    v: &Term,
    must_contain: &Formula,
    must_exclude: &Formula,
    domain: &IntervalBox,
    delta: f64,
    icp: &IcpConfig,
) -> Result<Result<f64, LevelFailure>, CertError> {
    let hi = interval_eval(v, domain)?.hi;
    if !(hi > 0.0) || !hi.is_finite() {
        return Ok(Err(LevelFailure { reason: format!("no positive finite level bound (upper enclosure {hi})"), contain_witness: None, exclude_witness: None }));
    }
    let step = hi / GRID as f64;
    let at = |k: usize| k as f64 * step;
    if let Some(w) = contain_check(v, must_contain, at(GRID), domain, delta, icp)? {
        return Ok(Err(LevelFailure { reason: "no level on the grid contains the required set".into(), contain_witness: Some(w), exclude_witness: None }));
    }
    let (mut lo, mut up) = (0usize, GRID);
    let mut below = None;
    if contain_check(v, must_contain, at(0), domain, delta, icp)?.is_none() {
        up = 0;
    } else {
        while up - lo > 1 {
            let mid = (lo + up) / 2;
            match contain_check(v, must_contain, at(mid), domain, delta, icp)? {
                None => up = mid,
                Some(w) => {
                    lo = mid;
                    below = Some(w);
                }
            }
        }
    }
    let level = at(up);
    match exclude_check(v, must_exclude, level, domain, delta, icp)? {
        None => Ok(Ok(level)),
        Some(w) => Ok(Err(LevelFailure {
            reason: format!("smallest containing level {level} meets the excluded set"),
            contain_witness: below,
            exclude_witness: Some(w),
        })),
    }
}

/// Image of `{x | xᵀPx ≤ ℓ}` under `x ↦ Rx`: `P′ = R⁻ᵀ P R⁻¹`, same level.
pub fn ellipsoid_image(cert: &QuadraticCertificate, r: &Matrix) -> Result<QuadraticCertificate, CertError> {
    let n = cert.vars.len();
    if r.len() != n || r.iter().any(|row| row.len() != n) {
        return Err(CertError::Dimension(format!("reset must be {n}x{n}")));
    }
    let det = determinant(r);
    if det.abs() <= 1e-12 {
        return Err(CertError::SingularReset(det.abs()));
    }
    let inv = inverse(r).ok_or(CertError::SingularReset(det.abs()))?;
    let p = mat_mul(&transpose(&inv), &mat_mul(&cert.p, &inv));
    let sym: Matrix = (0..n).map(|i| (0..n).map(|j| 0.5 * (p[i][j] + p[j][i])).collect()).collect();
    let mut out = QuadraticCertificate::new(cert.vars.clone(), sym)?;
    out.level = cert.level;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Containment {
    Contained,
    NotProven(IntervalBox),
}

/// Decides `inner ⊆ outer` (guards included) by refuting `inner ∧ ¬outer`.
pub fn sublevel_contained(
    inner: &QuadraticCertificate,
    outer: &QuadraticCertificate,
    domain: &IntervalBox,
    delta: f64,
    icp: &IcpConfig,
) -> Result<Containment, CertError> {
    let q = Formula::and(inner.formula(), Formula::not(outer.formula()));
    Ok(match check_formula(&q, domain, delta, icp)?.0 {
        DeltaResult::Unsat => Containment::Contained,
        DeltaResult::DeltaSat(b) => Containment::NotProven(b),
    })
}
