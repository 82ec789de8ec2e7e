//! Counterexample-guided refinement: LP candidate, optimizer attack, then
//! δ-decision of the certificate conditions; every refutation adds rows.

use std::fmt;

use crate::hp::{CmpOp, Formula, State, Term};
use crate::icp::{check_formula, lie_derivative, DeltaResult, IcpConfig, Interval, IntervalBox};
use crate::sim::Trace;

use super::lp::{lp_candidate, LpSpec};
use super::search::counterexample_search;
use super::{BarrierCertificate, CertError};

#[derive(Clone, Debug)]
pub struct RefineConfig {
    pub max_iter: usize,
    pub delta: f64,
    pub seed: u64,
    pub icp: IcpConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { max_iter: 50, delta: 1e-3, seed: 0, icp: IcpConfig::default() }
    }
}

#[derive(Clone, Debug)]
pub struct RefineSuccess {
    pub cert: BarrierCertificate,
    pub iterations: usize,
    pub counterexamples: Vec<State>,
}

#[derive(Clone, Debug)]
pub struct RefineFailure {
    pub reason: String,
    pub iterations: usize,
    pub last_candidate: Option<BarrierCertificate>,
    pub last_witness: Option<State>,
}

impl fmt::Display for RefineFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} after {} iteration(s)", self.reason, self.iterations)?;
        if let Some(w) = &self.last_witness {
            write!(f, "; last witness {w:?}")?;
        }
        Ok(())
    }
}

/// Conditions of a candidate in shifted coordinates `y = x − center` (same
/// variable names), where the center is the origin.
pub(crate) struct ShiftedQueries {
    pub domain: IntervalBox,
    /// `V(y) − ε‖y‖² < 0`
    pub positivity: Formula,
    /// `V̇(y) > 0`
    pub decrease: Formula,
}

pub(crate) fn shifted_queries(cert: &BarrierCertificate, field: &[(String, Term)]) -> ShiftedQueries {
    let back: Vec<(String, Term)> =
        cert.vars.iter().zip(&cert.center).map(|(v, c)| (v.clone(), Term::add(Term::var(v), Term::c(*c)))).collect();
    let field_y: Vec<(String, Term)> = field.iter().map(|(v, t)| (v.clone(), t.substitute(&back))).collect();
    let v = cert.shifted_term();
    let norm2 = Term::sum(cert.vars.iter().map(|x| Term::pow(Term::var(x), 2)));
    let positivity = Formula::cmp(Term::sub(v.clone(), Term::mul(Term::c(cert.margin), norm2)), CmpOp::Lt, Term::c(0.0));
    let decrease = Formula::cmp(lie_derivative(&v, &field_y), CmpOp::Gt, Term::c(0.0));
    let mut domain = cert.domain.clone();
    for (x, c) in cert.vars.iter().zip(&cert.center) {
        if let Some(iv) = domain.get(x) {
            domain.set(x, Interval::new(iv.lo - c, iv.hi - c));
        }
    }
    ShiftedQueries { domain, positivity, decrease }
}

pub fn refine_loop(
    traces: &[Trace],
    spec: &LpSpec,
    cfg: &RefineConfig,
) -> Result<Result<RefineSuccess, RefineFailure>, CertError> {
    let mut cexs: Vec<State> = Vec::new();
    let mut last_candidate = None;
    let mut last_witness = None;
    for iter in 1..=cfg.max_iter {
        let fail = |reason: String, cand, wit| Ok(Err(RefineFailure { reason, iterations: iter, last_candidate: cand, last_witness: wit }));
        let cand = match lp_candidate(spec, traces, &cexs) {
            Ok(out) => out.cert,
            Err(CertError::Infeasible) => return fail("LP infeasible: every candidate is refuted".into(), last_candidate, last_witness),
            Err(e) => return Err(e),
        };
        last_candidate = Some(cand.clone());
        if let Some(x) = counterexample_search(&cand, &spec.field, &spec.domain, cfg.seed.wrapping_add(iter as u64)) {
            last_witness = Some(x.clone());
            cexs.push(x);
            continue;
        }
        let q = shifted_queries(&cand, &spec.field);
        let mut refuted = false;
        for query in [&q.positivity, &q.decrease] {
            if let (DeltaResult::DeltaSat(b), _) = check_formula(query, &q.domain, cfg.delta, &cfg.icp)? {
                let mut x = b.midpoint();
                for (v, c) in cand.vars.iter().zip(&cand.center) {
                    if let Some(val) = x.get_mut(v) {
                        *val += c;
                    }
                }
                if cexs.contains(&x) {
                    return fail(format!("icp witness {b} repeats; candidate cannot be separated"), last_candidate, Some(x));
                }
                last_witness = Some(x.clone());
                cexs.push(x);
                refuted = true;
                break;
            }
        }
        if !refuted {
            return Ok(Ok(RefineSuccess { cert: cand, iterations: iter, counterexamples: cexs }));
        }
    }
    Ok(Err(RefineFailure {
        reason: format!("iteration cap {} reached", cfg.max_iter),
        iterations: cfg.max_iter,
        last_candidate,
        last_witness,
    }))
}
