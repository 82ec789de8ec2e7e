//! Recursive-descent parser for model files.

use std::collections::HashSet;

use thiserror::Error;

use super::ast::{CmpOp, Formula, Ode, Program, Term};
use super::lexer::{lex, Tok, Token};
use super::model::Model;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undeclared variable `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: duplicate definition of `{name}`")]
    Duplicate { line: usize, col: usize, name: String },
}

impl ParseError {
    pub(crate) fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::Undeclared { line, col, .. }
            | ParseError::Duplicate { line, col, .. } => (*line, *col),
        }
    }
}

type PResult<T> = Result<T, ParseError>;

const KEYWORDS: &[&str] = &[
    "true", "false", "forall", "exists", "sqrt", "statevar", "logicalvar", "modevar", "domain", "const", "in",
];

struct Parser<'m> {
    toks: Vec<Token>,
    pos: usize,
    model: &'m mut Model,
}

/// Parses a whole model file.
pub fn parse_model(text: &str) -> PResult<Model> {
    let mut model = Model::default();
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, model: &mut model };
    while p.peek() != &Tok::Eof {
        p.statement()?;
    }
    Ok(model)
}

/// Parses a standalone program against the symbols of `model`.
pub fn parse_program(text: &str, model: &Model) -> PResult<Program> {
    let mut scratch = model.clone();
    let mut p = Parser { toks: lex(text)?, pos: 0, model: &mut scratch };
    let prog = p.program()?;
    p.expect_eof()?;
    Ok(prog)
}

/// Parses a standalone formula against the symbols of `model`.
pub fn parse_formula(text: &str, model: &Model) -> PResult<Formula> {
    let mut scratch = model.clone();
    let mut p = Parser { toks: lex(text)?, pos: 0, model: &mut scratch };
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parses a standalone term against the symbols of `model`.
pub fn parse_term(text: &str, model: &Model) -> PResult<Term> {
    let mut scratch = model.clone();
    let mut p = Parser { toks: lex(text)?, pos: 0, model: &mut scratch };
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError::syntax(line, col, msg))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.err(format!("expected {what}, found {:?}", self.peek()))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            self.err(format!("unexpected trailing {:?}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other:?}")),
        }
    }

    fn is_taken(&self, name: &str) -> bool {
        let m = &*self.model;
        m.is_state_var(name)
            || m.is_logical_var(name)
            || m.constants.contains_key(name)
            || m.mode_value(name).is_some()
            || m.program(name).is_some()
            || m.formula(name).is_some()
    }

    fn fresh_name(&mut self) -> PResult<String> {
        let (line, col) = self.here();
        let name = self.ident()?;
        if KEYWORDS.contains(&name.as_str()) {
            return Err(ParseError::syntax(line, col, format!("`{name}` is a keyword")));
        }
        if self.is_taken(&name) {
            return Err(ParseError::Duplicate { line, col, name });
        }
        Ok(name)
    }

    // ---- statements -----------------------------------------------------

    fn statement(&mut self) -> PResult<()> {
        let head = match self.peek() {
            Tok::Ident(s) => s.clone(),
            other => return self.err(format!("expected a declaration or definition, found {other:?}")),
        };
        match head.as_str() {
            "statevar" | "logicalvar" => {
                self.bump();
                loop {
                    let name = self.fresh_name()?;
                    if head == "statevar" {
                        self.model.state_vars.push(name);
                    } else {
                        self.model.logical_vars.push(name);
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            "modevar" => {
                self.bump();
                let var = self.fresh_name()?;
                self.expect(Tok::Eq, "`=`")?;
                self.expect(Tok::LBrace, "`{`")?;
                let mut values = Vec::new();
                let mut seen = HashSet::new();
                loop {
                    let (line, col) = self.here();
                    let entry = match self.bump() {
                        Tok::Ident(n) => {
                            if self.is_taken(&n) || values.iter().any(|(v, _): &(String, f64)| *v == n) {
                                return Err(ParseError::Duplicate { line, col, name: n });
                            }
                            let idx = values.len() as f64;
                            (n, idx)
                        }
                        Tok::Num(v) => (format!("{v}"), v),
                        other => return Err(ParseError::syntax(line, col, format!("expected mode name, found {other:?}"))),
                    };
                    if !seen.insert(entry.1.to_bits()) {
                        return Err(ParseError::Duplicate { line, col, name: entry.0 });
                    }
                    values.push(entry);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "`}`")?;
                self.model.state_vars.push(var.clone());
                // numeric entries are not symbols
                let named: Vec<(String, f64)> = values;
                self.model.mode_vars.insert(var, named);
            }
            "const" => {
                self.bump();
                let name = self.fresh_name()?;
                self.expect(Tok::Eq, "`=`")?;
                let t = self.term()?;
                let Some(v) = t.constant_value() else {
                    return self.err(format!("constant `{name}` is not a closed numeric term"));
                };
                self.model.constants.insert(name, v);
            }
            "domain" => {
                self.bump();
                loop {
                    let (line, col) = self.here();
                    let var = self.ident()?;
                    if !self.model.is_state_var(&var) && !self.model.is_logical_var(&var) {
                        return Err(ParseError::Undeclared { line, col, name: var });
                    }
                    match self.bump() {
                        Tok::Ident(k) if k == "in" => {}
                        other => return self.err(format!("expected `in`, found {other:?}")),
                    }
                    self.expect(Tok::LBrack, "`[`")?;
                    let lo = self.closed_value()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let hi = self.closed_value()?;
                    self.expect(Tok::RBrack, "`]`")?;
                    if lo > hi {
                        return Err(ParseError::syntax(line, col, format!("empty domain for `{var}`")));
                    }
                    self.model.domain.insert(var, (lo, hi));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            _ => {
                let name = self.fresh_name()?;
                match self.bump() {
                    Tok::ProgDef => {
                        let prog = self.program()?;
                        self.model.programs.push((name, prog));
                    }
                    Tok::FormDef => {
                        let f = self.formula()?;
                        self.model.formulas.push((name, f));
                    }
                    other => return self.err(format!("expected `::=` or `:==`, found {other:?}")),
                }
            }
        }
        self.expect(Tok::Dot, "`.` ending the definition")
    }

    fn closed_value(&mut self) -> PResult<f64> {
        let t = self.term()?;
        match t.constant_value() {
            Some(v) => Ok(v),
            None => self.err("expected a closed numeric term"),
        }
    }

    // ---- programs -------------------------------------------------------

    fn program(&mut self) -> PResult<Program> {
        let mut lhs = self.program_seq()?;
        while self.eat(&Tok::Choice) {
            let rhs = self.program_seq()?;
            lhs = Program::choice(lhs, rhs);
        }
        Ok(lhs)
    }

    fn program_seq(&mut self) -> PResult<Program> {
        let mut lhs = self.program_atom()?;
        while self.eat(&Tok::Semi) {
            let rhs = self.program_atom()?;
            lhs = Program::seq(lhs, rhs);
        }
        Ok(lhs)
    }

    fn program_atom(&mut self) -> PResult<Program> {
        match self.peek().clone() {
            Tok::Quest => {
                self.bump();
                self.expect(Tok::LParen, "`(` after `?`")?;
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Program::Test(f))
            }
            Tok::LBrace => {
                if matches!(self.peek_at(1), Tok::Ident(_)) && self.peek_at(2) == &Tok::Prime {
                    return self.ode();
                }
                self.bump();
                let inner = self.program()?;
                self.expect(Tok::RBrace, "`}`")?;
                if self.eat(&Tok::Star) {
                    Ok(Program::star(inner))
                } else {
                    Ok(inner)
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.program()?;
                self.expect(Tok::RParen, "`)`")?;
                if self.eat(&Tok::Star) {
                    Ok(Program::star(inner))
                } else {
                    Ok(inner)
                }
            }
            Tok::Ident(name) => {
                if matches!(self.peek_at(1), Tok::Assign | Tok::Comma) {
                    return self.assignment();
                }
                let (line, col) = self.here();
                self.bump();
                match self.model.program(&name) {
                    Some(p) => Ok(p.clone()),
                    None => Err(ParseError::Undeclared { line, col, name }),
                }
            }
            other => self.err(format!("expected a program, found {other:?}")),
        }
    }

    fn state_target(&mut self) -> PResult<String> {
        let (line, col) = self.here();
        let name = self.ident()?;
        if !self.model.is_state_var(&name) {
            return Err(ParseError::Undeclared { line, col, name });
        }
        Ok(name)
    }

    fn assignment(&mut self) -> PResult<Program> {
        let (line, col) = self.here();
        let mut targets = vec![self.state_target()?];
        while self.eat(&Tok::Comma) {
            targets.push(self.state_target()?);
        }
        self.expect(Tok::Assign, "`:=`")?;
        if targets.len() == 1 && self.peek() == &Tok::Star {
            self.bump();
            return Ok(Program::Havoc(targets.pop().unwrap()));
        }
        let mut values = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            values.push(self.term()?);
        }
        if values.len() != targets.len() {
            return Err(ParseError::syntax(line, col, "assignment arity mismatch"));
        }
        let mut seen = HashSet::new();
        for t in &targets {
            if !seen.insert(t.clone()) {
                return Err(ParseError::Duplicate { line, col, name: t.clone() });
            }
        }
        Ok(Program::Assign(targets.into_iter().zip(values).collect()))
    }

    fn ode(&mut self) -> PResult<Program> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut eqs: Vec<(String, Term)> = Vec::new();
        loop {
            let (line, col) = self.here();
            let var = self.state_target()?;
            if eqs.iter().any(|(v, _)| *v == var) {
                return Err(ParseError::Duplicate { line, col, name: var });
            }
            self.expect(Tok::Prime, "`'`")?;
            self.expect(Tok::Eq, "`=`")?;
            let rhs = self.term()?;
            eqs.push((var, rhs));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let domain = if self.eat(&Tok::Amp) { self.formula()? } else { Formula::True };
        self.expect(Tok::RBrace, "`}` closing the ODE")?;
        Ok(Program::Ode(Ode { eqs, domain }))
    }

    // ---- formulas -------------------------------------------------------

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.formula_or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.formula()?;
            return Ok(Formula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn formula_or(&mut self) -> PResult<Formula> {
        let mut lhs = self.formula_and()?;
        while self.eat(&Tok::Bar) {
            let rhs = self.formula_and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn formula_and(&mut self) -> PResult<Formula> {
        let mut lhs = self.formula_unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.formula_unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn formula_unary(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.formula_unary()?))
            }
            Tok::LBrack => {
                self.bump();
                let p = self.program()?;
                self.expect(Tok::RBrack, "`]`")?;
                let f = self.formula_unary()?;
                Ok(Formula::boxed(p, f))
            }
            Tok::Lt => {
                self.bump();
                let p = self.program()?;
                self.expect(Tok::Gt, "`>` closing the diamond")?;
                let f = self.formula_unary()?;
                Ok(Formula::Diamond(Box::new(p), Box::new(f)))
            }
            Tok::Ident(k) if k == "forall" || k == "exists" => {
                self.bump();
                let (line, col) = self.here();
                let var = self.ident()?;
                if !self.model.is_logical_var(&var) {
                    return Err(ParseError::Undeclared { line, col, name: var });
                }
                self.expect(Tok::Dot, "`.` after the bound variable")?;
                let body = self.formula_unary()?;
                Ok(if k == "forall" {
                    Formula::Forall(var, Box::new(body))
                } else {
                    Formula::Exists(var, Box::new(body))
                })
            }
            _ => self.formula_atom(),
        }
    }

    fn formula_atom(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Ident(k) if k == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(k) if k == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(name) if self.model.formula(&name).is_some() => {
                self.bump();
                Ok(self.model.formula(&name).unwrap().clone())
            }
            Tok::LParen => {
                let save = self.pos;
                match self.comparison() {
                    Ok(f) => Ok(f),
                    Err(first) => {
                        self.pos = save;
                        self.bump();
                        match self.formula() {
                            Ok(f) if self.peek() == &Tok::RParen => {
                                self.bump();
                                Ok(f)
                            }
                            Ok(_) => Err(first),
                            Err(e) => Err(deeper(first, e)),
                        }
                    }
                }
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let lhs = self.term()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            Tok::Le => CmpOp::Le,
            Tok::Lt => CmpOp::Lt,
            other => return self.err(format!("expected a comparison operator, found {other:?}")),
        };
        self.bump();
        let rhs = self.term()?;
        Ok(Formula::Cmp(lhs, op, rhs))
    }

    // ---- terms ----------------------------------------------------------

    fn term(&mut self) -> PResult<Term> {
        let mut lhs = self.term_mul()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Term::add(lhs, self.term_mul()?);
            } else if self.eat(&Tok::Minus) {
                lhs = Term::sub(lhs, self.term_mul()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term_mul(&mut self) -> PResult<Term> {
        let mut lhs = self.term_unary()?;
        loop {
            if self.eat(&Tok::Star) {
                lhs = Term::mul(lhs, self.term_unary()?);
            } else if self.eat(&Tok::Slash) {
                lhs = Term::div(lhs, self.term_unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term_unary(&mut self) -> PResult<Term> {
        if self.peek() == &Tok::Minus {
            if let Tok::Num(v) = *self.peek_at(1) {
                if self.peek_at(2) != &Tok::Caret {
                    self.bump();
                    self.bump();
                    return Ok(Term::Const(-v));
                }
            }
            self.bump();
            return Ok(Term::neg(self.term_unary()?));
        }
        let base = self.term_atom()?;
        if self.eat(&Tok::Caret) {
            match self.bump() {
                Tok::Num(n) if n >= 0.0 && n.fract() == 0.0 && n <= u32::MAX as f64 => Ok(Term::pow(base, n as u32)),
                _ => self.err("exponent must be a natural number literal"),
            }
        } else {
            Ok(base)
        }
    }

    fn term_atom(&mut self) -> PResult<Term> {
        let (line, col) = self.here();
        match self.bump() {
            Tok::Num(v) => Ok(Term::Const(v)),
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Ident(name) if name == "sqrt" => {
                self.expect(Tok::LParen, "`(` after sqrt")?;
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Term::sqrt(t))
            }
            Tok::Ident(name) => {
                let m = &*self.model;
                if m.is_state_var(&name) {
                    Ok(Term::Var(name))
                } else if m.is_logical_var(&name) {
                    Ok(Term::Param(name))
                } else if let Some(v) = m.constants.get(&name) {
                    Ok(Term::Const(*v))
                } else if let Some(v) = m.mode_value(&name) {
                    Ok(Term::Const(v))
                } else {
                    Err(ParseError::Undeclared { line, col, name })
                }
            }
            other => Err(ParseError::syntax(line, col, format!("expected a term, found {other:?}"))),
        }
    }
}

/// Reports whichever of two alternative parse failures got further.
fn deeper(a: ParseError, b: ParseError) -> ParseError {
    if b.position() >= a.position() {
        b
    } else {
        a
    }
}
