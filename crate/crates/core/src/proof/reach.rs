//! Bounded-time reach envelopes from interval derivative bounds.

use crate::hp::{CmpOp, Formula, Term};
use crate::icp::{interval_eval, Interval, IntervalBox};

use super::ProofError;

#[derive(Clone, Debug, PartialEq)]
pub struct ReachEnvelope {
    /// Over-approximation of the states reachable within the time window.
    pub region: IntervalBox,
    pub t_lo: f64,
    pub t_hi: f64,
    pub init: IntervalBox,
    /// Derivative enclosure per evolving variable over the domain.
    pub rates: Vec<(String, Interval)>,
}

/// `init` grown by `[t·lo, t·hi]` per variable, where `[lo, hi]` encloses the
/// field over `domain` (0 is always included so the init set stays inside).
pub fn bounded_reach_envelope(
    eqs: &[(String, Term)],
    init: &IntervalBox,
    time: f64,
    domain: &IntervalBox,
) -> Result<ReachEnvelope, ProofError> {
    let mut rates = Vec::new();
    let mut region = init.clone();
    for (x, rhs) in eqs {
        let r = interval_eval(rhs, domain)?;
        if !r.is_finite() {
            return Err(ProofError::Unbounded(x.clone()));
        }
        rates.push((x.clone(), r));
        if let Some(iv) = init.get(x) {
            region.set(x, Interval::new(iv.lo + time * r.lo.min(0.0), iv.hi + time * r.hi.max(0.0)));
        }
    }
    Ok(ReachEnvelope { region, t_lo: 0.0, t_hi: time, init: init.clone(), rates })
}

impl ReachEnvelope {
    pub fn rate(&self, x: &str) -> Option<Interval> {
        self.rates.iter().find(|(v, _)| v == x).map(|(_, r)| *r)
    }

    /// Time-indexed tube `0 ≤ τ ≤ T ∧ lo + τ·ṙlo ≤ x ≤ hi + τ·ṙhi`, with τ the
    /// clock; the plain box at `T` when there is no clock.
    pub fn formula(&self, clock: Option<&str>) -> Formula {
        let mut parts = Vec::new();
        if let Some(tau) = clock {
            parts.push(Formula::cmp(Term::var(tau), CmpOp::Ge, Term::c(self.t_lo)));
            parts.push(Formula::cmp(Term::var(tau), CmpOp::Le, Term::c(self.t_hi)));
        }
        for (x, iv) in self.init.vars.iter().zip(&self.init.ivs) {
            if Some(x.as_str()) == clock {
                continue;
            }
            let r = self.rate(x).unwrap_or(Interval::point(0.0));
            let (lo, hi) = match clock {
                Some(tau) => (
                    Term::add(Term::c(iv.lo), Term::mul(Term::c(r.lo.min(0.0)), Term::var(tau))),
                    Term::add(Term::c(iv.hi), Term::mul(Term::c(r.hi.max(0.0)), Term::var(tau))),
                ),
                None => {
                    let b = self.region.get(x).unwrap_or(*iv);
                    (Term::c(b.lo), Term::c(b.hi))
                }
            };
            parts.push(Formula::cmp(Term::var(x), CmpOp::Ge, lo));
            parts.push(Formula::cmp(Term::var(x), CmpOp::Le, hi));
        }
        Formula::conj(parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovery_mode_envelope() {
        let eqs = vec![("r".to_string(), Term::var("l2"))];
        let init = IntervalBox::from_bounds(&[("r", -0.001, 0.001)]);
        let dom = IntervalBox::from_bounds(&[("r", -0.2, 0.2), ("l2", -0.17, 0.18)]);
        let env = bounded_reach_envelope(&eqs, &init, 0.008, &dom).unwrap();
        let r = env.region.get("r").unwrap();
        assert!((r.lo + 0.00236).abs() < 1e-9 && (r.hi - 0.00244).abs() < 1e-9, "{r:?}");
        assert!(r.mag() <= 0.0025);
    }

    #[test]
    fn trivial_cases() {
        let eqs = vec![("x".to_string(), Term::neg(Term::var("x")))];
        let dom = IntervalBox::from_bounds(&[("x", -1.0, 1.0)]);
        let init = IntervalBox::from_bounds(&[("x", 0.0, 0.0)]);
        assert_eq!(bounded_reach_envelope(&eqs, &init, 0.0, &dom).unwrap().region, init);
        let env = bounded_reach_envelope(&eqs, &init, 1.0, &dom).unwrap();
        assert_eq!(env.region.get("x").unwrap(), Interval::new(-1.0, 1.0));
        let inv = vec![("x".to_string(), Term::div(Term::c(1.0), Term::var("x")))];
        assert!(matches!(bounded_reach_envelope(&inv, &init, 1.0, &dom), Err(ProofError::Unbounded(_))));
    }
}
