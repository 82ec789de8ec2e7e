//! Pretty printer producing the concrete model-file syntax.
//!
//! Output re-parses to the identical AST; parentheses are emitted only where
//! precedence requires them.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::{Formula, Ode, Program, Term};

const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_NEG: u8 = 3;
const P_POW: u8 = 4;
const P_ATOM: u8 = 5;

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Add(..) | Term::Sub(..) => P_ADD,
        Term::Mul(..) | Term::Div(..) => P_MUL,
        Term::Neg(_) => P_NEG,
        Term::Const(c) if c.is_sign_negative() => P_NEG,
        Term::Pow(..) => P_POW,
        _ => P_ATOM,
    }
}

fn write_term(out: &mut String, t: &Term, ctx: u8) {
    let paren = term_prec(t) < ctx;
    if paren {
        out.push('(');
    }
    match t {
        Term::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Term::Var(v) | Term::Param(v) => out.push_str(v),
        Term::Add(a, b) => {
            write_term(out, a, P_ADD);
            out.push_str(" + ");
            write_term(out, b, P_MUL);
        }
        Term::Sub(a, b) => {
            write_term(out, a, P_ADD);
            out.push_str(" - ");
            write_term(out, b, P_MUL);
        }
        Term::Mul(a, b) => {
            write_term(out, a, P_MUL);
            out.push_str(" * ");
            write_term(out, b, P_NEG);
        }
        Term::Div(a, b) => {
            write_term(out, a, P_MUL);
            out.push_str(" / ");
            write_term(out, b, P_NEG);
        }
        Term::Neg(a) => {
            out.push('-');
            // `-3` would re-parse as a negative literal
            if matches!(**a, Term::Const(_)) {
                out.push('(');
                write_term(out, a, 0);
                out.push(')');
            } else {
                write_term(out, a, P_NEG);
            }
        }
        Term::Pow(a, n) => {
            write_term(out, a, P_ATOM);
            let _ = write!(out, "^{n}");
        }
        Term::Sqrt(a) => {
            out.push_str("sqrt(");
            write_term(out, a, 0);
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}

const F_IMP: u8 = 1;
const F_OR: u8 = 2;
const F_AND: u8 = 3;
const F_UNARY: u8 = 4;
const F_ATOM: u8 = 5;

fn formula_prec(f: &Formula) -> u8 {
    match f {
        Formula::Imp(..) => F_IMP,
        Formula::Or(..) => F_OR,
        Formula::And(..) => F_AND,
        Formula::Not(_)
        | Formula::Forall(..)
        | Formula::Exists(..)
        | Formula::Box(..)
        | Formula::Diamond(..) => F_UNARY,
        _ => F_ATOM,
    }
}

fn write_formula(out: &mut String, f: &Formula, ctx: u8) {
    let paren = formula_prec(f) < ctx;
    if paren {
        out.push('(');
    }
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Cmp(a, op, b) => {
            write_term(out, a, 0);
            let _ = write!(out, " {} ", op.symbol());
            write_term(out, b, 0);
        }
        Formula::Not(a) => {
            out.push('!');
            write_formula(out, a, F_UNARY);
        }
        Formula::And(a, b) => {
            write_formula(out, a, F_AND);
            out.push_str(" & ");
            write_formula(out, b, F_UNARY);
        }
        Formula::Or(a, b) => {
            write_formula(out, a, F_OR);
            out.push_str(" | ");
            write_formula(out, b, F_AND);
        }
        Formula::Imp(a, b) => {
            write_formula(out, a, F_OR);
            out.push_str(" -> ");
            write_formula(out, b, F_IMP);
        }
        Formula::Forall(p, a) => {
            let _ = write!(out, "forall {p}. ");
            write_formula(out, a, F_UNARY);
        }
        Formula::Exists(p, a) => {
            let _ = write!(out, "exists {p}. ");
            write_formula(out, a, F_UNARY);
        }
        Formula::Box(p, a) => {
            out.push('[');
            write_program(out, p, 0);
            out.push(']');
            write_formula(out, a, F_UNARY);
        }
        Formula::Diamond(p, a) => {
            out.push('<');
            write_program(out, p, 0);
            out.push('>');
            write_formula(out, a, F_UNARY);
        }
    }
    if paren {
        out.push(')');
    }
}

const H_CHOICE: u8 = 1;
const H_SEQ: u8 = 2;
const H_ATOM: u8 = 3;

fn program_prec(p: &Program) -> u8 {
    match p {
        Program::Choice(..) => H_CHOICE,
        Program::Seq(..) => H_SEQ,
        _ => H_ATOM,
    }
}

fn write_ode(out: &mut String, ode: &Ode) {
    out.push('{');
    for (i, (v, t)) in ode.eqs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{v}' = ");
        write_term(out, t, 0);
    }
    out.push_str(" & ");
    write_formula(out, &ode.domain, 0);
    out.push('}');
}

fn write_program(out: &mut String, p: &Program, ctx: u8) {
    let group = program_prec(p) < ctx;
    if group {
        out.push('{');
    }
    match p {
        Program::Assign(pairs) => {
            let names: Vec<&str> = pairs.iter().map(|(v, _)| v.as_str()).collect();
            out.push_str(&names.join(", "));
            out.push_str(" := ");
            for (i, (_, t)) in pairs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, t, 0);
            }
        }
        Program::Havoc(v) => {
            let _ = write!(out, "{v} := *");
        }
        Program::Ode(ode) => write_ode(out, ode),
        Program::Test(f) => {
            out.push_str("?(");
            write_formula(out, f, 0);
            out.push(')');
        }
        Program::Choice(a, b) => {
            write_program(out, a, H_CHOICE);
            out.push_str(" ++ ");
            write_program(out, b, H_SEQ);
        }
        Program::Seq(a, b) => {
            write_program(out, a, H_SEQ);
            out.push_str("; ");
            write_program(out, b, H_ATOM);
        }
        Program::Star(a) => {
            out.push('{');
            write_program(out, a, 0);
            out.push_str("}*");
        }
    }
    if group {
        out.push('}');
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_term(&mut s, self, 0);
        f.write_str(&s)
    }
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(&mut s, self, 0);
        f.write_str(&s)
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_program(&mut s, self, 0);
        f.write_str(&s)
    }
}

impl Display for Ode {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_ode(&mut s, self);
        f.write_str(&s)
    }
}
