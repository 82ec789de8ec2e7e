//! Arithmetic obligations as δ-decision queries over the model's domain.

use crate::hp::{eval_formula, Environment, Formula, Model};
use crate::icp::dump::dump_query;
use crate::icp::{check_formula, to_dnf, ConstraintSystem, DeltaResult, IcpConfig, IcpError, Interval, IntervalBox};

use super::simplify::{apply_pins, fold, pins};
use super::tree::CheckStats;

#[derive(Clone, Debug, PartialEq)]
pub enum Sat {
    Unsat,
    /// δ-sat; `exact` when the witness midpoint satisfies the undeformed query.
    Sat { region: IntervalBox, exact: bool },
    Unknown(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Holds(&'static str),
    Refuted { region: IntervalBox, exact: bool },
    Unknown(String),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds(_))
    }
}

/// Query runner shared by a whole proof: precision, resource limits, query
/// dumps and running statistics.
pub struct Checker<'m> {
    pub model: &'m Model,
    pub delta: f64,
    pub eps: f64,
    pub icp: IcpConfig,
    /// Remaining queries; `None` is unlimited.
    pub budget: Option<usize>,
    pub dumps: Option<Vec<(String, String)>>,
    stats: CheckStats,
    issued: usize,
}

impl<'m> Checker<'m> {
    pub fn new(model: &'m Model, delta: f64, eps: f64, icp: IcpConfig) -> Checker<'m> {
        Checker { model, delta, eps, icp, budget: None, dumps: None, stats: CheckStats::default(), issued: 0 }
    }

    /// Statistics since the last call.
    pub fn take_stats(&mut self) -> CheckStats {
        std::mem::take(&mut self.stats)
    }

    pub(crate) fn domain_for(&self, f: &Formula) -> Result<IntervalBox, String> {
        let mut pairs = Vec::new();
        for v in f.state_vars() {
            match self.model.domain_of(&v) {
                Some((lo, hi)) => pairs.push((v, Interval::new(lo, hi))),
                None => return Err(format!("no domain of interest declared for `{v}`")),
            }
        }
        Ok(IntervalBox::new(pairs))
    }

    /// δ-satisfiability of a modality-free formula.
    pub fn sat(&mut self, f: &Formula, label: &str) -> Sat {
        let f = apply_pins(f, &pins(std::slice::from_ref(f)));
        match f {
            Formula::False => return Sat::Unsat,
            Formula::True => return Sat::Sat { region: IntervalBox::new(Vec::new()), exact: true },
            _ => {}
        }
        let domain = match self.domain_for(&f) {
            Ok(d) => d,
            Err(e) => return Sat::Unknown(e),
        };
        if let Some(b) = &mut self.budget {
            if *b == 0 {
                return Sat::Unknown("query budget exhausted".into());
            }
            *b -= 1;
        }
        self.issued += 1;
        self.stats.queries += 1;
        if let Some(dumps) = &mut self.dumps {
            let name = format!("{:04}-{label}", self.issued);
            if let Ok(disjuncts) = to_dnf(&f) {
                let text: String = disjuncts
                    .into_iter()
                    .map(|constraints| dump_query(&ConstraintSystem { constraints, domain: domain.clone(), delta: self.delta }, &name))
                    .collect::<Vec<_>>()
                    .join("\n");
                dumps.push((name, text));
            }
        }
        match check_formula(&f, &domain, self.delta, &self.icp) {
            Ok((DeltaResult::Unsat, s)) => {
                self.stats.boxes += s.boxes;
                Sat::Unsat
            }
            Ok((DeltaResult::DeltaSat(region), s)) => {
                self.stats.boxes += s.boxes;
                let exact = eval_formula(&region.midpoint(), &Environment::new(), &f).unwrap_or(false);
                Sat::Sat { region, exact }
            }
            Err(IcpError::ResourceLimit(n)) => Sat::Unknown(format!("box budget of {n} exhausted")),
            Err(e) => Sat::Unknown(e.to_string()),
        }
    }

    /// `hyps → concl`: propositional first, then refutation of `hyps ∧ ¬concl`.
    pub fn valid(&mut self, hyps: &[Formula], concl: &Formula, label: &str) -> Verdict {
        let p = pins(hyps);
        let concl = apply_pins(concl, &p);
        if concl == Formula::True {
            return Verdict::Holds("propositional");
        }
        let hyp: Vec<Formula> = hyps.iter().map(|h| apply_pins(h, &p)).collect();
        if hyp.contains(&Formula::False) {
            return Verdict::Holds("propositional (empty antecedent)");
        }
        let q = fold(&Formula::and(Formula::conj(hyp), Formula::not(concl)));
        match self.sat(&q, label) {
            Sat::Unsat => Verdict::Holds("icp"),
            Sat::Sat { region, exact } => Verdict::Refuted { region, exact },
            Sat::Unknown(r) => Verdict::Unknown(r),
        }
    }
}
