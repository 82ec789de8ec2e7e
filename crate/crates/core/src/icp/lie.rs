//! Symbolic differentiation and Lie derivatives.

use crate::hp::Term;

fn is_const(t: &Term, v: f64) -> bool {
    matches!(t, Term::Const(c) if *c == v)
}

fn add(a: Term, b: Term) -> Term {
    if is_const(&a, 0.0) {
        b
    } else if is_const(&b, 0.0) {
        a
    } else {
        Term::add(a, b)
    }
}

fn sub(a: Term, b: Term) -> Term {
    if is_const(&b, 0.0) {
        a
    } else if is_const(&a, 0.0) {
        neg(b)
    } else {
        Term::sub(a, b)
    }
}

fn neg(a: Term) -> Term {
    if is_const(&a, 0.0) {
        a
    } else {
        Term::neg(a)
    }
}

fn mul(a: Term, b: Term) -> Term {
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        Term::c(0.0)
    } else if is_const(&a, 1.0) {
        b
    } else if is_const(&b, 1.0) {
        a
    } else {
        Term::mul(a, b)
    }
}

fn div(a: Term, b: Term) -> Term {
    if is_const(&a, 0.0) {
        a
    } else if is_const(&b, 1.0) {
        a
    } else {
        Term::div(a, b)
    }
}

/// Partial derivative with respect to a state variable.
pub fn differentiate(t: &Term, x: &str) -> Term {
    match t {
        Term::Const(_) | Term::Param(_) => Term::c(0.0),
        Term::Var(v) => Term::c(if v == x { 1.0 } else { 0.0 }),
        Term::Neg(a) => neg(differentiate(a, x)),
        Term::Add(a, b) => add(differentiate(a, x), differentiate(b, x)),
        Term::Sub(a, b) => sub(differentiate(a, x), differentiate(b, x)),
        Term::Mul(a, b) => add(
            mul(differentiate(a, x), (**b).clone()),
            mul((**a).clone(), differentiate(b, x)),
        ),
        Term::Div(a, b) => {
            let num = sub(
                mul(differentiate(a, x), (**b).clone()),
                mul((**a).clone(), differentiate(b, x)),
            );
            div(num, Term::pow((**b).clone(), 2))
        }
        Term::Pow(a, n) => match n {
            0 => Term::c(0.0),
            1 => differentiate(a, x),
            _ => {
                let base = if *n == 2 { (**a).clone() } else { Term::pow((**a).clone(), n - 1) };
                mul(mul(Term::c(*n as f64), base), differentiate(a, x))
            }
        },
        Term::Sqrt(a) => div(differentiate(a, x), mul(Term::c(2.0), t.clone())),
    }
}

/// `V̇ = Σ ∂V/∂xᵢ · fᵢ` along the vector field.
pub fn lie_derivative(v: &Term, field: &[(String, Term)]) -> Term {
    field
        .iter()
        .fold(Term::c(0.0), |acc, (x, f)| add(acc, mul(differentiate(v, x), f.clone())))
}
