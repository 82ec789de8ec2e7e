//! Automatic discharge of open leaves: branch excision, symbolic execution of
//! discrete steps, flow obligations and arithmetic validity.

use crate::certsynth::ellipsoid_image;
use crate::hp::{CmpOp, Formula, Program, Term};
use crate::linalg::{determinant, inverse, Matrix};
use crate::poly::Poly;

use super::check::{Checker, Sat, Verdict};
use super::flow::{as_quadratic, discharge_flow, Attached};
use super::goal::Goal;
use super::simplify::{apply_pins, pins};
use super::tree::{ProofNode, Status, Witness};

#[derive(Clone)]
struct Path {
    gamma: Vec<Formula>,
    label: String,
    ghosts: usize,
    log: Vec<String>,
}

impl Path {
    fn drop_mentions(&mut self, x: &str) {
        self.gamma.retain(|g| !g.mentions(x));
    }
}

/// Matrix `R` when every right-hand side is a homogeneous linear form over
/// the targets.
fn linear_reset(pairs: &[(String, Term)]) -> Option<Matrix> {
    let targets: Vec<String> = pairs.iter().map(|(x, _)| x.clone()).collect();
    let mut r = Vec::new();
    for (_, rhs) in pairs {
        let p = Poly::from_term(rhs)?;
        if p.degree() > 1 || p.coeff(&Vec::new()) != 0.0 || p.vars().iter().any(|v| !targets.contains(v)) {
            return None;
        }
        r.push(targets.iter().map(|x| p.coeff(&vec![(x.clone(), 1)])).collect());
    }
    Some(r)
}

fn fmt_matrix(m: &Matrix) -> String {
    let rows: Vec<String> = m.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")).collect();
    format!("[[{}]]", rows.join("], ["))
}

/// Weakest precondition of a flow's discrete tail: tests become implications
/// and assignments substitutions.
fn tail_wp(rest: &[Program], post: &Formula) -> Option<Formula> {
    let mut out = post.clone();
    for p in rest.iter().rev() {
        out = match p {
            Program::Test(f) => Formula::imp(f.clone(), out),
            Program::Assign(pairs) => out.substitute(pairs),
            Program::Seq(..) => tail_wp(&p.seq_items().into_iter().cloned().collect::<Vec<_>>(), &out)?,
            _ => return None,
        };
    }
    Some(out)
}

struct Exec<'a, 'c, 'm> {
    ck: &'a mut Checker<'m>,
    certs: &'a [Attached],
    post: &'c Formula,
    out: Vec<ProofNode>,
}

impl Exec<'_, '_, '_> {
    fn push(&mut self, goal: Goal, rule: &str, path: &Path, status: Status, log: Vec<String>, witnesses: Vec<Witness>) {
        let mut n = ProofNode::leaf(goal);
        n.rule = rule.into();
        n.args = vec![path.label.clone()];
        n.status = status;
        n.log = path.log.iter().cloned().chain(log).collect();
        n.witnesses = witnesses;
        n.stats = self.ck.take_stats();
        self.out.push(n);
    }

    fn run(&mut self, mut path: Path, items: Vec<Program>) {
        let Some((head, rest)) = items.split_first() else {
            return self.arith(path);
        };
        let rest = rest.to_vec();
        match head {
            Program::Seq(a, b) => {
                let mut next = vec![(**a).clone(), (**b).clone()];
                next.extend(rest);
                self.run(path, next)
            }
            Program::Choice(..) => {
                for (i, b) in head.choice_branches().into_iter().enumerate() {
                    let mut p = path.clone();
                    p.label = format!("{}/{}", path.label, i + 1);
                    let mut next = vec![b.clone()];
                    next.extend(rest.iter().cloned());
                    self.run(p, next);
                }
            }
            Program::Test(f) => {
                let f2 = apply_pins(f, &pins(&path.gamma));
                let verdict = match &f2 {
                    Formula::False => Some("propositional (mode pins)".to_string()),
                    Formula::True => None,
                    g if !g.is_modality_free() => {
                        let goal = self.goal(&path, Some(Program::seq_all(&items)));
                        return self.push(goal, "open", &path, Status::open("modal test"), vec![], vec![]);
                    }
                    g => {
                        let q = Formula::conj(path.gamma.iter().cloned().chain([g.clone()]));
                        match self.ck.sat(&q, &format!("excise{}", path.label.replace('/', "-"))) {
                            Sat::Unsat => Some("icp Unsat".to_string()),
                            _ => None,
                        }
                    }
                };
                if let Some(how) = verdict {
                    let goal = self.goal(&path, Some(Program::seq_all(&items)));
                    let log = vec![format!("excised: test `{f}` contradicts the assumptions ({how})")];
                    return self.push(goal, "excise", &path, Status::Closed, log, vec![]);
                }
                path.gamma.extend(f2.conjuncts().into_iter().filter(|c| *c != Formula::True));
                self.run(path, rest)
            }
            Program::Assign(pairs) => {
                self.assign(&mut path, pairs);
                self.run(path, rest)
            }
            Program::Havoc(x) => {
                path.drop_mentions(x);
                self.run(path, rest)
            }
            Program::Star(_) => {
                let goal = self.goal(&path, Some(Program::seq_all(&items)));
                self.push(goal, "open", &path, Status::open("nested loop: needs its own invariant"), vec![], vec![])
            }
            Program::Ode(ode) => {
                let goal_prog = Some(Program::seq_all(&items));
                let Some(post) = tail_wp(&rest, self.post) else {
                    let goal = self.goal(&path, goal_prog);
                    return self.push(goal, "open", &path, Status::open("unsupported program after a flow"), vec![], vec![]);
                };
                let goal = Goal::new(Formula::conj(path.gamma.clone()), Some(Program::Ode(ode.clone())), post.clone());
                let label = format!("flow{}", path.label.replace('/', "-"));
                let o = discharge_flow(self.ck, self.certs, &path.gamma, ode, &post, &label);
                self.push(goal, "flow", &path, o.status, o.log, o.witnesses)
            }
        }
    }

    fn goal(&self, path: &Path, prog: Option<Program>) -> Goal {
        Goal::new(Formula::conj(path.gamma.clone()), prog, self.post.clone())
    }

    fn assign(&mut self, path: &mut Path, pairs: &[(String, Term)]) {
        if pairs.iter().all(|(_, t)| t.constant_value().is_some()) {
            for (x, t) in pairs {
                path.drop_mentions(x);
                path.gamma.push(Formula::cmp(Term::var(x), CmpOp::Eq, t.clone()));
            }
            return;
        }
        let targets: Vec<String> = pairs.iter().map(|(x, _)| x.clone()).collect();
        if let Some(r) = linear_reset(pairs) {
            if determinant(&r).abs() > 1e-12 {
                if let Some(inv) = inverse(&r) {
                    let back: Vec<(String, Term)> = targets
                        .iter()
                        .enumerate()
                        .map(|(i, x)| (x.clone(), Term::sum(targets.iter().enumerate().map(|(j, y)| Term::mul(Term::c(inv[i][j]), Term::var(y))))))
                        .collect();
                    for g in path.gamma.iter_mut() {
                        if !targets.iter().any(|x| g.mentions(x)) {
                            continue;
                        }
                        match as_quadratic(g, &targets).map(|q| ellipsoid_image(&q, &r)) {
                            Some(Ok(img)) => {
                                path.log.push(format!("ellipsoid_image(R = {}) of `{g}`", fmt_matrix(&r)));
                                *g = img.formula();
                            }
                            _ => *g = g.substitute(&back),
                        }
                    }
                    return;
                }
            }
        }
        // old values become ghosts
        let ren: Vec<(String, Term)> = targets
            .iter()
            .map(|x| {
                path.ghosts += 1;
                (x.clone(), Term::var(&format!("{x}#{}", path.ghosts)))
            })
            .collect();
        path.gamma = path.gamma.iter().map(|g| g.substitute(&ren)).collect();
        for (x, t) in pairs {
            path.gamma.push(Formula::cmp(Term::var(x), CmpOp::Eq, t.substitute(&ren)));
        }
    }

    fn arith(&mut self, path: Path) {
        let goal = self.goal(&path, None);
        let (status, log, witnesses) = arith_status(self.ck, &path.gamma, self.post, &format!("post{}", path.label.replace('/', "-")));
        self.push(goal, "arith", &path, status, log, witnesses)
    }
}

fn arith_status(ck: &mut Checker, gamma: &[Formula], concl: &Formula, label: &str) -> (Status, Vec<String>, Vec<Witness>) {
    match ck.valid(gamma, concl, label) {
        Verdict::Holds(how) => (Status::Closed, vec![format!("valid ({how})")], vec![]),
        Verdict::Refuted { region, exact } => {
            let w = vec![Witness { label: "counterexample".into(), region }];
            if exact {
                (Status::failed("counterexample satisfies the negated goal exactly"), vec![], w)
            } else {
                (Status::open("δ-sat negation; counterexample not confirmed exactly"), vec![], w)
            }
        }
        Verdict::Unknown(r) => (Status::open(r), vec![], vec![]),
    }
}

impl Program {
    /// Sequential composition of a non-empty list.
    fn seq_all(items: &[Program]) -> Program {
        let mut it = items.iter().rev().cloned();
        let last = it.next().unwrap_or_else(Program::skip);
        it.fold(last, |acc, p| Program::seq(p, acc))
    }
}

/// Attempts every open leaf of the tree.
pub fn discharge(node: &mut ProofNode, ck: &mut Checker, certs: &[Attached]) {
    if !node.children.is_empty() {
        for c in &mut node.children {
            discharge(c, ck, certs);
        }
        node.refresh();
        return;
    }
    if !matches!(node.status, Status::Open { .. }) {
        return;
    }
    ck.take_stats();
    discharge_leaf(node, ck, certs);
}

fn discharge_leaf(node: &mut ProofNode, ck: &mut Checker, certs: &[Attached]) {
    let g = node.goal.clone();
    let gamma: Vec<Formula> = g.assumptions.conjuncts().into_iter().filter(|f| *f != Formula::True).collect();
    if gamma.iter().all(|f| f.is_modality_free()) {
        match ck.sat(&Formula::conj(gamma.clone()), "antecedent") {
            Sat::Unsat => {
                node.rule = "empty-antecedent".into();
                node.status = Status::Closed;
                node.log.push("antecedent is empty (icp Unsat)".into());
                node.stats.absorb(&ck.take_stats());
                return;
            }
            Sat::Unknown(r) if r.contains("budget") => {
                node.status = Status::open(format!("budget: {r}"));
                return;
            }
            _ => {}
        }
    }
    match &g.program {
        None => {
            let (status, log, witnesses) = arith_status(ck, &gamma, &g.conclusion, "arith");
            node.rule = "arith".into();
            node.status = status;
            node.log.extend(log);
            node.witnesses.extend(witnesses);
            node.stats.absorb(&ck.take_stats());
        }
        Some(Program::Star(_)) => {
            node.status = Status::open("loop goal: needs a cut or loop invariant");
            node.stats.absorb(&ck.take_stats());
        }
        Some(p) => {
            node.stats.absorb(&ck.take_stats());
            let mut ex = Exec { ck, certs, post: &g.conclusion, out: Vec::new() };
            let path = Path { gamma, label: String::new(), ghosts: 0, log: Vec::new() };
            ex.run(path, vec![p.clone()]);
            let children = ex.out;
            node.expand("symbolic-exec", vec![], children);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp::{parse_formula, parse_model};
    use crate::icp::IcpConfig;

    const SRC: &str = "statevar x1, x2.\nmodevar M = {q0, q1, q2, fail}.\ndomain x1 in [-20, 20], x2 in [-20, 20].\n\
        body ::= {?(M = q0); {x1' = -x1, x2' = -x2}}\n\
          ++ {?(M = q0); ?(x1^2 + x2^2 < 1); M := q1}\n\
          ++ {?(M = q1); {x1' = -(x2 + 1)*x1, x2' = x1^2}}\n\
          ++ {?(M = q0); x1 := *; x2 := *; ?(x1^2 + x2^2 < 4); M := q2}\n\
          ++ {?(M = q2); {x1' = -3*x1 + 13*x2, x2' = -5*x1 - x2}}\n\
          ++ {?(-10 > x1 | x1 > 10 | -10 > x2 | x2 > 10); M := fail}\n\
          ++ {?(M = fail)}.\n";

    #[test]
    fn running_example_cut_premises() {
        let m = parse_model(SRC).unwrap();
        let f = |s: &str| parse_formula(s, &m).unwrap();
        let body = m.program("body").unwrap().clone();
        let mut ck = Checker::new(&m, 1e-3, 1e-6, IcpConfig { max_boxes: 500_000 });
        for c in ["M = q1 & 0.5*x1^2 + 0.5*(x2-2)^2 <= 5", "M = q2 & 2*x1^2 + 4*x2^2 <= 16"] {
            let mut n = ProofNode::leaf(Goal::new(f(c), Some(body.clone()), f(c)));
            discharge(&mut n, &mut ck, &[]);
            assert!(n.status.is_closed(), "{}", n.to_json());
            assert_eq!(n.children.len(), 7);
            assert_eq!(n.children.iter().filter(|c| c.rule == "excise").count(), 6);
        }
        // loop invariant premise on the restricted body
        let restricted = Program::seq(
            Program::seq(body, Program::test(Formula::not(f("M = q1 & 0.5*x1^2 + 0.5*(x2-2)^2 <= 5")))),
            Program::test(Formula::not(f("M = q2 & 2*x1^2 + 4*x2^2 <= 16"))),
        );
        let j = f("M = q0 & x1^2 + x2^2 <= 10");
        let mut n = ProofNode::leaf(Goal::new(j.clone(), Some(restricted), j));
        discharge(&mut n, &mut ck, &[]);
        assert!(n.status.is_closed(), "{}", n.to_json());
    }

    #[test]
    fn open_without_certificate() {
        let m = parse_model("statevar x.\ndomain x in [-5, 5].\nf ::= {x' = x^2 - 1}.\n").unwrap();
        let f = |s: &str| parse_formula(s, &m).unwrap();
        let mut ck = Checker::new(&m, 1e-3, 1e-6, IcpConfig { max_boxes: 100_000 });
        let mut n = ProofNode::leaf(Goal::new(f("x <= 0.5 & x >= -0.5"), Some(m.program("f").unwrap().clone()), f("x >= -0.9 & x <= 0.9")));
        discharge(&mut n, &mut ck, &[]);
        assert!(matches!(n.status, Status::Open { .. }), "{}", n.to_json());
    }

    #[test]
    fn ghosts_and_linear_resets() {
        let m = parse_model("statevar x, y.\ndomain x in [-10, 10], y in [-10, 10].\n").unwrap();
        let f = |s: &str| parse_formula(s, &m).unwrap();
        let mut ck = Checker::new(&m, 1e-3, 1e-6, IcpConfig { max_boxes: 100_000 });
        let prog = crate::hp::parse_program("x := x + 1", &m).unwrap();
        let mut n = ProofNode::leaf(Goal::new(f("x >= 0 & x <= 1"), Some(prog), f("x >= 0.9 & x <= 2.1")));
        discharge(&mut n, &mut ck, &[]);
        assert!(n.status.is_closed(), "{}", n.to_json());
        let prog = crate::hp::parse_program("x, y := 2*y, x", &m).unwrap();
        let mut n = ProofNode::leaf(Goal::new(f("x^2 + y^2 <= 1"), Some(prog), f("x^2 + 4*y^2 <= 4")));
        discharge(&mut n, &mut ck, &[]);
        assert!(n.status.is_closed(), "{}", n.to_json());
        assert!(n.children[0].log.iter().any(|l| l.contains("ellipsoid_image")));
    }
}
