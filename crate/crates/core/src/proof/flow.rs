//! Single-flow obligations `Γ → [{x' = f & H}]ψ`: certificates, per-atom
//! barriers and sublevel sets chosen per goal.

use crate::certsynth::{select_level, sublevel_contained, Containment, QuadraticCertificate};
use crate::hp::{CmpOp, Formula, Ode, Term};
use crate::icp::{lie_derivative, IntervalBox};
use crate::poly::Poly;

use super::check::{Checker, Sat, Verdict};
use super::simplify::{apply_pins, pins};
use super::tree::{Status, Witness};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Level {
    Fixed(f64),
    /// Chosen per goal by `select_level`.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecreaseCheck {
    /// `{B ≤ 0 ∧ Ḃ > 0}` Unsat.
    Weak,
    /// `{B = 0 ∧ Ḃ > −ε}` Unsat.
    Strict,
    /// Weak, then strict.
    Either,
}

/// A certificate attached to the flow of one mode: `{V ≤ level}` is claimed
/// invariant under `field`.
#[derive(Clone, Debug)]
pub struct Attached {
    pub name: String,
    pub field: Vec<(String, Term)>,
    pub v: Term,
    pub level: Level,
    pub check: DecreaseCheck,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeafOutcome {
    pub status: Status,
    pub log: Vec<String>,
    pub witnesses: Vec<Witness>,
}

/// `xᵀPx + k ≤ c` over `vars` as a quadratic certificate at level `c − k`.
pub fn as_quadratic(f: &Formula, vars: &[String]) -> Option<QuadraticCertificate> {
    let (l, r) = match f {
        Formula::Cmp(l, CmpOp::Le | CmpOp::Lt, r) => (l, r),
        Formula::Cmp(r, CmpOp::Ge | CmpOp::Gt, l) => (l, r),
        _ => return None,
    };
    let p = Poly::from_term(&Term::sub(l.clone(), r.clone()))?;
    let quad = p.homogeneous(2);
    let k = p.sub(&quad).as_constant()?;
    if quad.vars().iter().any(|v| !vars.contains(v)) {
        return None;
    }
    let m = quad.quadratic_matrix(vars)?;
    QuadraticCertificate::new(vars.to_vec(), m).ok().map(|q| q.with_level(-k))
}

fn ge_zero_form(a: &Formula) -> Option<Term> {
    match a {
        Formula::Cmp(l, CmpOp::Le | CmpOp::Lt, r) => Some(Term::sub(l.clone(), r.clone())),
        Formula::Cmp(l, CmpOp::Ge | CmpOp::Gt, r) => Some(Term::sub(r.clone(), l.clone())),
        _ => None,
    }
}

fn consequent(f: &Formula) -> &Formula {
    match f {
        Formula::Imp(_, b) => consequent(b),
        other => other,
    }
}

/// Invariance of `{B ≤ 0}` under the flow, given hypotheses that hold
/// throughout it.
pub fn invariance(
    ck: &mut Checker,
    hyps: &[Formula],
    b: &Term,
    field: &[(String, Term)],
    check: DecreaseCheck,
    eps: f64,
    label: &str,
) -> Result<&'static str, (String, Option<IntervalBox>)> {
    let bdot = lie_derivative(b, field);
    let zero = || Term::c(0.0);
    let mut last = (String::new(), None);
    if matches!(check, DecreaseCheck::Weak | DecreaseCheck::Either) {
        let q = Formula::conj(
            hyps.iter()
                .cloned()
                .chain([Formula::cmp(b.clone(), CmpOp::Le, zero()), Formula::cmp(bdot.clone(), CmpOp::Gt, zero())]),
        );
        match ck.sat(&q, &format!("{label}-weak")) {
            Sat::Unsat => return Ok("weak decrease"),
            Sat::Sat { region, .. } => last = ("weak decrease check is δ-sat".into(), Some(region)),
            Sat::Unknown(r) => last = (r, None),
        }
    }
    if matches!(check, DecreaseCheck::Strict | DecreaseCheck::Either) {
        let q = Formula::conj(
            hyps.iter()
                .cloned()
                .chain([Formula::cmp(b.clone(), CmpOp::Eq, zero()), Formula::cmp(bdot, CmpOp::Gt, Term::c(-eps))]),
        );
        match ck.sat(&q, &format!("{label}-strict")) {
            Sat::Unsat => return Ok("strict boundary decrease"),
            Sat::Sat { region, .. } => last = ("strict boundary check is δ-sat".into(), Some(region)),
            Sat::Unknown(r) => last = (r, None),
        }
    }
    Err(last)
}

struct Flow<'c, 'm> {
    ck: &'c mut Checker<'m>,
    gamma: Vec<Formula>,
    field: Vec<(String, Term)>,
    /// Facts true all along the flow: constant conjuncts of Γ, the evolution
    /// domain, and invariants proven so far.
    hyps: Vec<Formula>,
    log: Vec<String>,
    witnesses: Vec<Witness>,
    label: String,
}

impl Flow<'_, '_> {
    fn valid_along(&mut self, f: &Formula, tag: &str) -> Verdict {
        let label = format!("{}-{tag}", self.label);
        self.ck.valid(&self.hyps, f, &label)
    }

    fn valid_initially(&mut self, f: &Formula, tag: &str) -> Verdict {
        let label = format!("{}-{tag}", self.label);
        self.ck.valid(&self.gamma, f, &label)
    }

    fn mentions_flow(&self, f: &Formula) -> bool {
        self.field.iter().any(|(x, _)| f.mentions(x))
    }

    /// Tries `{V ≤ ℓ}` as an invariant; records it on success.
    fn try_region(&mut self, name: &str, v: &Term, level: f64, check: DecreaseCheck, eps: f64) -> bool {
        let region = Formula::cmp(v.clone(), CmpOp::Le, Term::c(level));
        match self.valid_initially(&region, &format!("{name}-init")) {
            Verdict::Holds(how) => self.log.push(format!("{name}: initial states inside ({how})")),
            other => {
                self.log.push(format!("{name}: initial states not inside at level {level} ({})", verdict_text(&other)));
                return false;
            }
        }
        let b = Term::sub(v.clone(), Term::c(level));
        let label = format!("{}-{name}", self.label);
        let field = self.field.clone();
        match invariance(self.ck, &self.hyps, &b, &field, check, eps, &label) {
            Ok(how) => {
                self.log.push(format!("{name}: invariant by {how}"));
                self.hyps.push(region);
                true
            }
            Err((why, w)) => {
                self.log.push(format!("{name}: not proven invariant ({why})"));
                if let Some(region) = w {
                    self.witnesses.push(Witness { label: format!("{name} invariance"), region });
                }
                false
            }
        }
    }

    fn atom(&mut self, a: &Formula, eps: f64) -> bool {
        if !self.mentions_flow(a) {
            let v = self.valid_initially(a, "const");
            self.log.push(format!("`{a}` is constant along the flow: {}", verdict_text(&v)));
            return v.holds();
        }
        if self.valid_along(a, "atom").holds() {
            self.log.push(format!("`{a}` follows from the flow invariants"));
            return true;
        }
        match ge_zero_form(a) {
            Some(b) => self.try_region(&format!("barrier `{a}`"), &b, 0.0, DecreaseCheck::Either, eps),
            None => false,
        }
    }

    fn auto_level(&mut self, cert: &Attached, psi: &Formula) -> bool {
        let contain = Formula::conj(self.gamma.clone());
        let exclude = Formula::conj(self.hyps.iter().cloned().chain([Formula::not(psi.clone())]));
        let all = Formula::conj([contain.clone(), exclude.clone(), Formula::cmp(cert.v.clone(), CmpOp::Le, Term::c(0.0))]);
        let domain = match self.ck.domain_for(&all) {
            Ok(d) => d,
            Err(e) => {
                self.log.push(format!("{}: {e}", cert.name));
                return false;
            }
        };
        let (delta, icp) = (self.ck.delta, self.ck.icp);
        let level = match select_level(&cert.v, &contain, &exclude, &domain, delta, &icp) {
            Ok(Ok(l)) => l,
            Ok(Err(f)) => {
                self.log.push(format!("{}: no separating level ({f})", cert.name));
                return false;
            }
            Err(e) => {
                self.log.push(format!("{}: level selection failed ({e})", cert.name));
                return false;
            }
        };
        self.log.push(format!("{}: bisected level {level}", cert.name));
        if !self.try_region(&cert.name, &cert.v, level, cert.check, cert.eps) {
            return false;
        }
        self.containment_chain(cert, level, psi, &domain);
        true
    }

    /// Quadratic bookkeeping for a chosen sublevel set: image-of-Γ ⊆ C* ⊆ ψ.
    fn containment_chain(&mut self, cert: &Attached, level: f64, psi: &Formula, domain: &IntervalBox) {
        let vars: Vec<String> = self.field.iter().map(|(x, _)| x.clone()).collect();
        let Some(star) = as_quadratic(&Formula::cmp(cert.v.clone(), CmpOp::Le, Term::c(level)), &vars) else { return };
        let domain = IntervalBox::new(vars.iter().filter_map(|v| domain.get(v).map(|i| (v.clone(), i))).collect::<Vec<_>>());
        let (delta, icp) = (self.ck.delta, self.ck.icp);
        let check = |inner: &QuadraticCertificate, outer: &QuadraticCertificate, what: &str, log: &mut Vec<String>| {
            match sublevel_contained(inner, outer, &domain, delta, &icp) {
                Ok(Containment::Contained) => log.push(format!("sublevel_contained({what}): contained")),
                Ok(Containment::NotProven(b)) => log.push(format!("sublevel_contained({what}): not proven at {b}")),
                Err(e) => log.push(format!("sublevel_contained({what}): {e}")),
            }
        };
        if let Some(img) = self.gamma.iter().find_map(|g| as_quadratic(g, &vars)) {
            check(&img, &star, "initial set, chosen level", &mut self.log);
        }
        if let Some(target) = as_quadratic(psi, &vars) {
            check(&star, &target, "chosen level, postcondition", &mut self.log);
        }
    }
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Holds(how) => format!("holds ({how})"),
        Verdict::Refuted { region, .. } => format!("refuted near {region}"),
        Verdict::Unknown(r) => format!("unknown ({r})"),
    }
}

/// Discharges `Γ → [ode]post`. The antecedent is assumed consistent.
pub fn discharge_flow(ck: &mut Checker, certs: &[Attached], gamma: &[Formula], ode: &Ode, post: &Formula, label: &str) -> LeafOutcome {
    let flow_vars: Vec<&str> = ode.vars();
    let is_static = |f: &Formula| !flow_vars.iter().any(|x| f.mentions(x));
    let mut hyps: Vec<Formula> = gamma.iter().filter(|f| is_static(f)).cloned().collect();
    let static_pins = pins(&hyps);
    hyps.extend(ode.domain.conjuncts().into_iter().filter(|f| *f != Formula::True));
    let mut fl = Flow {
        ck,
        gamma: gamma.to_vec(),
        field: ode.eqs.clone(),
        hyps,
        log: Vec::new(),
        witnesses: Vec::new(),
        label: label.to_string(),
    };
    let mine: Vec<&Attached> = certs.iter().filter(|c| c.field == ode.eqs).collect();
    for c in mine.iter().filter(|c| matches!(c.level, Level::Fixed(_))) {
        if let Level::Fixed(l) = c.level {
            fl.try_region(&c.name, &c.v, l, c.check, c.eps);
        }
    }
    let post = apply_pins(post, &static_pins);
    let mut open = Vec::new();
    for psi in post.conjuncts() {
        if fl.valid_along(&psi, "post").holds() {
            fl.log.push(format!("`{psi}` follows along the flow"));
            continue;
        }
        let eps = fl.ck.eps;
        let target = consequent(&psi).clone();
        if target.conjuncts().iter().all(|a| fl.atom(a, eps)) {
            continue;
        }
        if mine.iter().filter(|c| c.level == Level::Auto).any(|c| fl.auto_level(c, &target)) && fl.valid_along(&target, "post").holds() {
            continue;
        }
        open.push(psi);
    }
    if open.is_empty() {
        return LeafOutcome { status: Status::Closed, log: fl.log, witnesses: fl.witnesses };
    }
    // duration 0 is a run, so a genuine initial counterexample refutes the goal
    let mut status = Status::open(format!("no invariant found for `{}`", Formula::conj(open.clone())));
    let domain: Vec<Formula> = ode.domain.conjuncts();
    let zero_time = Formula::conj(gamma.iter().cloned().chain(domain).chain([Formula::not(Formula::conj(open))]));
    match fl.ck.sat(&zero_time, &format!("{label}-initial")) {
        Sat::Sat { region, exact: true } => {
            status = Status::failed("an initial state violates the postcondition");
            fl.witnesses.push(Witness { label: "initial counterexample".into(), region });
        }
        Sat::Unknown(r) if r.contains("budget") => status = Status::open(format!("budget: {r}")),
        _ => {}
    }
    LeafOutcome { status, log: fl.log, witnesses: fl.witnesses }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp::{parse_formula, parse_model, Program};
    use crate::icp::IcpConfig;

    const SRC: &str = "statevar x1, x2.\nmodevar M = {q0, q1}.\ndomain x1 in [-20, 20], x2 in [-20, 20].\n\
        m1 ::= {x1' = -(x2 + 1)*x1, x2' = x1^2}.\n\
        m2 ::= {x1' = -3*x1 + 13*x2, x2' = -5*x1 - x2}.\n";

    fn ode(m: &crate::hp::Model, name: &str) -> Ode {
        match m.program(name).unwrap() {
            Program::Ode(o) => o.clone(),
            p => panic!("{p:?}"),
        }
    }

    #[test]
    fn per_atom_barrier_closes_mode_q1() {
        let m = parse_model(SRC).unwrap();
        let f = |s: &str| parse_formula(s, &m).unwrap();
        let mut ck = Checker::new(&m, 1e-3, 1e-6, IcpConfig { max_boxes: 200_000 });
        let g = [f("M = q1"), f("0.5*x1^2 + 0.5*(x2-2)^2 <= 5")];
        let out = discharge_flow(&mut ck, &[], &g, &ode(&m, "m1"), &f("M = q1 & 0.5*x1^2 + 0.5*(x2-2)^2 <= 5"), "t");
        assert_eq!(out.status, Status::Closed, "{:?}", out.log);
        assert!(out.log.iter().any(|l| l.contains("weak decrease")));
    }

    #[test]
    fn auto_level_certificate() {
        let m = parse_model(SRC).unwrap();
        let f = |s: &str| parse_formula(s, &m).unwrap();
        let o = ode(&m, "m2");
        let mut ck = Checker::new(&m, 1e-3, 1e-6, IcpConfig { max_boxes: 200_000 });
        let cert = Attached {
            name: "V2".into(),
            field: o.eqs.clone(),
            v: crate::hp::parse_term("2*x1^2 + 4*x2^2", &m).unwrap(),
            level: Level::Auto,
            check: DecreaseCheck::Weak,
            eps: 1e-6,
        };
        let out = discharge_flow(&mut ck, &[cert], &[f("x1^2 + x2^2 <= 4")], &o, &f("x1 <= 10"), "t");
        assert_eq!(out.status, Status::Closed, "{:?}", out.log);
        assert!(out.log.iter().any(|l| l.contains("bisected level")));
    }

    #[test]
    fn initial_counterexample_fails() {
        let m = parse_model(SRC).unwrap();
        let f = |s: &str| parse_formula(s, &m).unwrap();
        let mut ck = Checker::new(&m, 1e-3, 1e-6, IcpConfig { max_boxes: 200_000 });
        let out = discharge_flow(&mut ck, &[], &[f("x1 = 3"), f("x2 = 0")], &ode(&m, "m1"), &f("x1 <= 1"), "t");
        assert!(matches!(out.status, Status::Failed { .. }), "{:?}", out);
        assert!(!out.witnesses.is_empty());
    }

    #[test]
    fn quadratic_shapes() {
        let m = parse_model(SRC).unwrap();
        let f = |s: &str| parse_formula(s, &m).unwrap();
        let v = vec!["x1".to_string(), "x2".to_string()];
        let q = as_quadratic(&f("2*x1^2 + x1*x2 + 4*x2^2 + 1 <= 17"), &v).unwrap();
        assert_eq!(q.level, Some(16.0));
        assert_eq!(q.p, vec![vec![2.0, 0.5], vec![0.5, 4.0]]);
        assert!(as_quadratic(&f("x1 <= 1"), &v).is_none());
    }
}
