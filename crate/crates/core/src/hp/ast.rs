//! Abstract syntax for terms, formulas and hybrid programs.

use std::collections::BTreeSet;

/// Arithmetic term over state variables and logical variables.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Const(f64),
    /// State variable.
    Var(String),
    /// Logical variable (rigid along runs, quantifiable).
    Param(String),
    Neg(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Div(Box<Term>, Box<Term>),
    Pow(Box<Term>, u32),
    Sqrt(Box<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Ge,
    Gt,
    Le,
    Lt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
        }
    }

    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
            CmpOp::Le => a <= b,
            CmpOp::Lt => a < b,
        }
    }

    /// The operator of the negated comparison.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Lt => CmpOp::Ge,
        }
    }
}

/// Formula of differential dynamic logic.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    True,
    False,
    Cmp(Term, CmpOp, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
    Box(Box<Program>, Box<Formula>),
    Diamond(Box<Program>, Box<Formula>),
}

/// Continuous evolution `{x1' = e1, ..., xn' = en & H}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ode {
    pub eqs: Vec<(String, Term)>,
    pub domain: Formula,
}

impl Ode {
    pub fn vars(&self) -> Vec<&str> {
        self.eqs.iter().map(|(v, _)| v.as_str()).collect()
    }

    pub fn binds(&self, var: &str) -> bool {
        self.eqs.iter().any(|(v, _)| v == var)
    }

    /// Structural identity of the vector field, ignoring the evolution domain.
    pub fn same_field(&self, other: &Ode) -> bool {
        self.eqs == other.eqs
    }
}

/// Hybrid program.
#[derive(Clone, Debug, PartialEq)]
pub enum Program {
    /// Simultaneous assignment; a single pair is the ordinary `x := e`.
    Assign(Vec<(String, Term)>),
    Havoc(String),
    Ode(Ode),
    Test(Formula),
    Choice(Box<Program>, Box<Program>),
    Seq(Box<Program>, Box<Program>),
    Star(Box<Program>),
}

// ---- constructors -------------------------------------------------------

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }
    pub fn param(name: &str) -> Term {
        Term::Param(name.to_string())
    }
    pub fn c(v: f64) -> Term {
        Term::Const(v)
    }
    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Term, b: Term) -> Term {
        Term::Div(Box::new(a), Box::new(b))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Term) -> Term {
        Term::Neg(Box::new(a))
    }
    pub fn pow(a: Term, n: u32) -> Term {
        Term::Pow(Box::new(a), n)
    }
    pub fn sqrt(a: Term) -> Term {
        Term::Sqrt(Box::new(a))
    }

    /// Sum of terms; `0` for the empty list.
    pub fn sum(terms: impl IntoIterator<Item = Term>) -> Term {
        let mut it = terms.into_iter();
        match it.next() {
            None => Term::Const(0.0),
            Some(first) => it.fold(first, Term::add),
        }
    }

    /// State variables occurring in the term.
    pub fn state_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out, false);
        out
    }

    /// State and logical variables occurring in the term.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out, true);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>, params: bool) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Param(p) => {
                if params {
                    out.insert(p.clone());
                }
            }
            Term::Neg(a) | Term::Pow(a, _) | Term::Sqrt(a) => a.collect_vars(out, params),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.collect_vars(out, params);
                b.collect_vars(out, params);
            }
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        match self {
            Term::Const(_) => false,
            Term::Var(v) | Term::Param(v) => v == var,
            Term::Neg(a) | Term::Pow(a, _) | Term::Sqrt(a) => a.mentions(var),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.mentions(var) || b.mentions(var)
            }
        }
    }

    /// Replace state variable occurrences by terms, simultaneously.
    pub fn substitute(&self, map: &[(String, Term)]) -> Term {
        match self {
            Term::Var(v) => map
                .iter()
                .find(|(k, _)| k == v)
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| self.clone()),
            Term::Const(_) | Term::Param(_) => self.clone(),
            Term::Neg(a) => Term::neg(a.substitute(map)),
            Term::Pow(a, n) => Term::pow(a.substitute(map), *n),
            Term::Sqrt(a) => Term::sqrt(a.substitute(map)),
            Term::Add(a, b) => Term::add(a.substitute(map), b.substitute(map)),
            Term::Sub(a, b) => Term::sub(a.substitute(map), b.substitute(map)),
            Term::Mul(a, b) => Term::mul(a.substitute(map), b.substitute(map)),
            Term::Div(a, b) => Term::div(a.substitute(map), b.substitute(map)),
        }
    }

    /// Renames a state variable.
    pub fn rename(&self, from: &str, to: &str) -> Term {
        self.substitute(&[(from.to_string(), Term::var(to))])
    }

    /// Value of a variable-free term, if it has one.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Term::Const(c) => Some(*c),
            Term::Var(_) | Term::Param(_) => None,
            Term::Neg(a) => a.constant_value().map(|v| -v),
            Term::Pow(a, n) => a.constant_value().map(|v| v.powi(*n as i32)),
            Term::Sqrt(a) => a.constant_value().filter(|v| *v >= 0.0).map(f64::sqrt),
            Term::Add(a, b) => Some(a.constant_value()? + b.constant_value()?),
            Term::Sub(a, b) => Some(a.constant_value()? - b.constant_value()?),
            Term::Mul(a, b) => Some(a.constant_value()? * b.constant_value()?),
            Term::Div(a, b) => {
                let d = b.constant_value()?;
                if d == 0.0 {
                    None
                } else {
                    Some(a.constant_value()? / d)
                }
            }
        }
    }
}

impl Formula {
    pub fn cmp(a: Term, op: CmpOp, b: Term) -> Formula {
        Formula::Cmp(a, op, b)
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }
    pub fn boxed(p: Program, f: Formula) -> Formula {
        Formula::Box(Box::new(p), Box::new(f))
    }

    /// Conjunction of a list; `true` when empty.
    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Disjunction of a list; `false` when empty.
    pub fn disj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    /// Flattens nested conjunctions.
    pub fn conjuncts(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        fn go(f: &Formula, out: &mut Vec<Formula>) {
            match f {
                Formula::And(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Formula::True => {}
                other => out.push(other.clone()),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn is_modality_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Cmp(..) => true,
            Formula::Not(a) | Formula::Forall(_, a) | Formula::Exists(_, a) => a.is_modality_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.is_modality_free() && b.is_modality_free()
            }
            Formula::Box(..) | Formula::Diamond(..) => false,
        }
    }

    /// First-order, quantifier-free and modality-free.
    pub fn is_arithmetic(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Cmp(..) => true,
            Formula::Not(a) => a.is_arithmetic(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.is_arithmetic() && b.is_arithmetic()
            }
            _ => false,
        }
    }

    /// Free state variables of a modality-free formula (conservative for modal ones).
    pub fn state_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(a, _, b) => {
                out.extend(a.state_vars());
                out.extend(b.state_vars());
            }
            Formula::Not(a) | Formula::Forall(_, a) | Formula::Exists(_, a) => a.collect_vars(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Box(p, f) | Formula::Diamond(p, f) => {
                p.collect_vars(out);
                f.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.state_vars().contains(var)
    }

    /// Simultaneous substitution of state variables in a modality-free formula.
    pub fn substitute(&self, map: &[(String, Term)]) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Cmp(a, op, b) => Formula::Cmp(a.substitute(map), *op, b.substitute(map)),
            Formula::Not(a) => Formula::not(a.substitute(map)),
            Formula::And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Formula::Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            Formula::Imp(a, b) => Formula::imp(a.substitute(map), b.substitute(map)),
            Formula::Forall(p, a) => Formula::Forall(p.clone(), Box::new(a.substitute(map))),
            Formula::Exists(p, a) => Formula::Exists(p.clone(), Box::new(a.substitute(map))),
            Formula::Box(..) | Formula::Diamond(..) => {
                panic!("substitution into a modal formula is not admissible")
            }
        }
    }
}

impl Program {
    pub fn assign(var: &str, t: Term) -> Program {
        Program::Assign(vec![(var.to_string(), t)])
    }
    pub fn test(f: Formula) -> Program {
        Program::Test(f)
    }
    pub fn seq(a: Program, b: Program) -> Program {
        Program::Seq(Box::new(a), Box::new(b))
    }
    pub fn choice(a: Program, b: Program) -> Program {
        Program::Choice(Box::new(a), Box::new(b))
    }
    pub fn star(a: Program) -> Program {
        Program::Star(Box::new(a))
    }
    pub fn skip() -> Program {
        Program::Test(Formula::True)
    }

    pub fn contains_ode(&self) -> bool {
        match self {
            Program::Ode(_) => true,
            Program::Assign(_) | Program::Havoc(_) | Program::Test(_) => false,
            Program::Choice(a, b) | Program::Seq(a, b) => a.contains_ode() || b.contains_ode(),
            Program::Star(a) => a.contains_ode(),
        }
    }

    /// Variables written by the program.
    pub fn bound_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn go(p: &Program, out: &mut BTreeSet<String>) {
            match p {
                Program::Assign(pairs) => out.extend(pairs.iter().map(|(v, _)| v.clone())),
                Program::Havoc(v) => {
                    out.insert(v.clone());
                }
                Program::Ode(ode) => out.extend(ode.eqs.iter().map(|(v, _)| v.clone())),
                Program::Test(_) => {}
                Program::Choice(a, b) | Program::Seq(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Program::Star(a) => go(a, out),
            }
        }
        go(self, &mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Program::Assign(pairs) => {
                for (v, t) in pairs {
                    out.insert(v.clone());
                    out.extend(t.state_vars());
                }
            }
            Program::Havoc(v) => {
                out.insert(v.clone());
            }
            Program::Ode(ode) => {
                for (v, t) in &ode.eqs {
                    out.insert(v.clone());
                    out.extend(t.state_vars());
                }
                ode.domain.collect_vars(out);
            }
            Program::Test(f) => f.collect_vars(out),
            Program::Choice(a, b) | Program::Seq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Program::Star(a) => a.collect_vars(out),
        }
    }

    /// Flattens nested choices into their branches, left to right.
    pub fn choice_branches(&self) -> Vec<&Program> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Program, out: &mut Vec<&'a Program>) {
            match p {
                Program::Choice(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Flattens nested sequences.
    pub fn seq_items(&self) -> Vec<&Program> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Program, out: &mut Vec<&'a Program>) {
            match p {
                Program::Seq(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Every ODE occurring in the program, in syntactic order.
    pub fn odes(&self) -> Vec<&Ode> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Program, out: &mut Vec<&'a Ode>) {
            match p {
                Program::Ode(o) => out.push(o),
                Program::Assign(_) | Program::Havoc(_) | Program::Test(_) => {}
                Program::Choice(a, b) | Program::Seq(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Program::Star(a) => go(a, out),
            }
        }
        go(self, &mut out);
        out
    }
}
