use ficut_core::hp::{
    parse_formula, parse_model, parse_program, parse_term, CmpOp, Formula, Model, Ode, ParseError, Program, Term,
};
use proptest::prelude::*;

fn symbols() -> Model {
    parse_model("statevar x1, x2, x3.\nlogicalvar p.\n").unwrap()
}

fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop_oneof![Just(0.0), Just(1.0), Just(2.5), Just(-3.0), Just(0.125), Just(1e-7), Just(4e12)].prop_map(Term::c),
        prop_oneof![Just("x1"), Just("x2"), Just("x3")].prop_map(Term::var),
        Just(Term::param("p")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Term::neg),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::div(a, b)),
            (inner.clone(), 0u32..4).prop_map(|(a, n)| Term::pow(a, n)),
            inner.prop_map(Term::sqrt),
        ]
    })
}

fn arb_cmp() -> impl Strategy<Value = Formula> {
    let op = prop_oneof![
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
        Just(CmpOp::Ge),
        Just(CmpOp::Gt),
        Just(CmpOp::Le),
        Just(CmpOp::Lt)
    ];
    (arb_term(), op, arb_term()).prop_map(|(a, o, b)| Formula::cmp(a, o, b))
}

fn arb_fo_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![Just(Formula::True), Just(Formula::False), arb_cmp()];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::imp(a, b)),
        ]
    })
}

fn arb_program() -> impl Strategy<Value = Program> {
    let var = prop_oneof![Just("x1"), Just("x2"), Just("x3")];
    let leaf = prop_oneof![
        (var.clone(), arb_term()).prop_map(|(v, t)| Program::assign(v, t)),
        (arb_term(), arb_term())
            .prop_map(|(a, b)| Program::Assign(vec![("x1".into(), a), ("x3".into(), b)])),
        var.clone().prop_map(|v| Program::Havoc(v.to_string())),
        arb_fo_formula().prop_map(Program::test),
        (arb_term(), arb_term(), arb_fo_formula()).prop_map(|(a, b, h)| Program::Ode(Ode {
            eqs: vec![("x1".into(), a), ("x2".into(), b)],
            domain: h,
        })),
    ];
    leaf.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Program::seq(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Program::choice(a, b)),
            inner.prop_map(Program::star),
        ]
    })
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    arb_fo_formula().prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (arb_program(), inner.clone()).prop_map(|(p, f)| Formula::boxed(p, f)),
            (arb_program(), inner.clone()).prop_map(|(p, f)| Formula::Diamond(Box::new(p), Box::new(f))),
            inner.clone().prop_map(|f| Formula::Forall("p".into(), Box::new(f))),
            inner.clone().prop_map(|f| Formula::Exists("p".into(), Box::new(f))),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::and(a, b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn term_round_trip(t in arb_term()) {
        let m = symbols();
        prop_assert_eq!(parse_term(&t.to_string(), &m).unwrap(), t);
    }

    #[test]
    fn program_round_trip(p in arb_program()) {
        let m = symbols();
        let text = p.to_string();
        let back = parse_program(&text, &m).unwrap_or_else(|e| panic!("{e}: {text}"));
        prop_assert_eq!(back, p);
    }

    #[test]
    fn formula_round_trip(f in arb_formula()) {
        let m = symbols();
        let text = f.to_string();
        let back = parse_formula(&text, &m).unwrap_or_else(|e| panic!("{e}: {text}"));
        prop_assert_eq!(back, f);
    }
}

#[test]
fn guarded_ode_definition() {
    let m = parse_model(
        "statevar x1, x2, M.\n\
         m0 ::= ?(M = 0); {x1' = -x1, x2' = -x2 & true}.\n",
    )
    .unwrap();
    let expected = Program::seq(
        Program::test(Formula::cmp(Term::var("M"), CmpOp::Eq, Term::c(0.0))),
        Program::Ode(Ode {
            eqs: vec![
                ("x1".into(), Term::neg(Term::var("x1"))),
                ("x2".into(), Term::neg(Term::var("x2"))),
            ],
            domain: Formula::True,
        }),
    );
    assert_eq!(m.program("m0"), Some(&expected));
}

#[test]
fn skip_is_test_true() {
    let m = parse_model("statevar x.\nskip ::= ?(true).\n").unwrap();
    assert_eq!(m.program("skip"), Some(&Program::skip()));
}

#[test]
fn undeclared_variable() {
    let err = parse_model("statevar x1.\nbad ::= x3 := 1.\n").unwrap_err();
    assert!(matches!(err, ParseError::Undeclared { ref name, line: 2, .. } if name == "x3"), "{err:?}");
}

#[test]
fn duplicate_definition() {
    let err = parse_model("statevar x.\na ::= x := 1.\na ::= x := 2.\n").unwrap_err();
    assert!(matches!(err, ParseError::Duplicate { ref name, line: 3, .. } if name == "a"), "{err:?}");
}

#[test]
fn syntax_error_position() {
    let err = parse_model("statevar x.\n\nfoo ::= x := ;.\n").unwrap_err();
    assert!(matches!(err, ParseError::Syntax { .. }));
    assert_eq!(err.position().0, 3);
}

#[test]
fn modes_constants_and_domain() {
    let m = parse_model(
        "statevar x.\nmodevar M = {q0, q1, fail}.\nconst c = 2 * 3.\ndomain x in [-1, 1].\n\
         g :== M = fail & x <= c.\n",
    )
    .unwrap();
    assert_eq!(m.mode_value("fail"), Some(2.0));
    assert_eq!(m.constants["c"], 6.0);
    assert_eq!(m.domain_of("x"), Some((-1.0, 1.0)));
    assert_eq!(m.domain_of("M"), Some((0.0, 2.0)));
    assert_eq!(m.domain_of("x#3"), Some((-1.0, 1.0)));
    assert_eq!(
        m.formula("g"),
        Some(&Formula::and(
            Formula::cmp(Term::var("M"), CmpOp::Eq, Term::c(2.0)),
            Formula::cmp(Term::var("x"), CmpOp::Le, Term::c(6.0)),
        ))
    );
}

#[test]
fn scientific_notation_and_comments() {
    let m = parse_model("statevar x. # the state\nf :== x <= 1.5e-3.\n").unwrap();
    assert_eq!(m.formula("f"), Some(&Formula::cmp(Term::var("x"), CmpOp::Le, Term::c(1.5e-3))));
}
