//! Proof rules against the enumeration oracle on small grids.

use std::collections::BTreeSet;

use ficut_core::hp::eval::Environment;
use ficut_core::hp::oracle::{enumerate_transitions, valid_on, Grid};
use ficut_core::hp::random::ProgramGen;
use ficut_core::hp::{parse_model, CmpOp, Formula, Program, Term};
use ficut_core::icp::IcpConfig;
use ficut_core::proof::{apply_fwd_inv_cut, apply_invariant_rule, discharge, Checker, Goal, ProofNode, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x", "y", "z"];
const VALUES: [f64; 3] = [0.0, 1.0, 2.0];
const STAR_BOUND: usize = 64;

fn gen() -> ProgramGen<'static> {
    ProgramGen { vars: &VARS, consts: &VALUES }
}

fn valid(f: &Formula, g: &Grid) -> bool {
    valid_on(f, g, &Environment::new(), STAR_BOUND).unwrap()
}

/// Disjunction of point descriptions of the given grid states.
fn characteristic(g: &Grid, states: &BTreeSet<usize>) -> Formula {
    if states.is_empty() {
        return Formula::False;
    }
    Formula::disj(states.iter().map(|&s| {
        let st = g.state(s);
        Formula::conj(VARS.iter().map(|v| Formula::cmp(Term::var(v), CmpOp::Eq, Term::c(st[*v]))))
    }))
}

/// A cut candidate: either random, or the α*-closure of a random seed set
/// (which makes the middle premise hold and the fuzz non-vacuous).
fn candidate(rng: &mut ChaCha8Rng, g: &Grid, alpha: &Program) -> Formula {
    let gen = gen();
    if rng.gen_bool(0.5) {
        return gen.formula(rng, 2);
    }
    let seed = g.satisfying(&Environment::new(), &gen.formula(rng, 2)).unwrap();
    let star = enumerate_transitions(&Program::star(alpha.clone()), g, &Environment::new(), STAR_BOUND).unwrap();
    let closed: BTreeSet<usize> = seed.iter().flat_map(|&s| star.successors(s).collect::<Vec<_>>()).collect();
    characteristic(g, &closed)
}

#[test]
fn forward_invariant_cut_is_sound() {
    let g = Grid::uniform(&VARS, &VALUES);
    let gen = gen();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut premised = 0;
    for _ in 0..500 {
        let alpha = gen.program(&mut rng, 3);
        let init = gen.formula(&mut rng, 2);
        let c = candidate(&mut rng, &g, &alpha);
        let safe = if rng.gen_bool(0.5) { Formula::or(c.clone(), gen.formula(&mut rng, 1)) } else { gen.formula(&mut rng, 2) };
        let goal = Goal::new(init, Some(Program::star(alpha)), safe);
        let premises = apply_fwd_inv_cut(&goal, &c).unwrap();
        if premises.iter().all(|p| valid(&p.to_formula(), &g)) {
            premised += 1;
            assert!(valid(&goal.to_formula(), &g), "premises hold but conclusion fails: {goal} with cut {c}");
        }
    }
    assert!(premised >= 25, "only {premised} instances had all premises valid");
}

#[test]
fn loop_invariant_rule_is_sound() {
    let g = Grid::uniform(&VARS, &VALUES);
    let gen = gen();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut premised = 0;
    for _ in 0..300 {
        let alpha = gen.program(&mut rng, 3);
        let j = candidate(&mut rng, &g, &alpha);
        let init = Formula::and(j.clone(), gen.formula(&mut rng, 1));
        let safe = Formula::or(j.clone(), gen.formula(&mut rng, 1));
        let goal = Goal::new(init, Some(Program::star(alpha)), safe);
        let premises = apply_invariant_rule(&goal, &j).unwrap();
        if premises.iter().all(|p| valid(&p.to_formula(), &g)) {
            premised += 1;
            assert!(valid(&goal.to_formula(), &g), "{goal} with invariant {j}");
        }
    }
    assert!(premised >= 25, "only {premised} instances had all premises valid");
}

#[test]
fn cut_premises_have_the_rule_shape() {
    let gen = gen();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..100 {
        let alpha = gen.program(&mut rng, 3);
        let (i, c, s) = (gen.formula(&mut rng, 2), gen.formula(&mut rng, 2), gen.formula(&mut rng, 2));
        let goal = Goal::new(i.clone(), Some(Program::star(alpha.clone())), s.clone());
        let [p1, p2, p3] = apply_fwd_inv_cut(&goal, &c).unwrap();
        assert_eq!(p1.assumptions, Formula::and(i, Formula::not(c.clone())));
        assert_eq!(p1.conclusion, s);
        assert!(matches!(&p1.program, Some(Program::Star(_))));
        assert_eq!((p2.assumptions, p2.program, p2.conclusion), (c.clone(), Some(alpha), c.clone()));
        assert_eq!((p3.assumptions, p3.program, p3.conclusion), (c, None, s));
    }
    // the cut needs a loop
    let g = Goal::new(Formula::True, None, Formula::True);
    assert!(apply_fwd_inv_cut(&g, &Formula::True).is_err());
}

/// Closing by symbolic execution, excision and icp is sound on the grid.
#[test]
fn discharge_closes_only_valid_goals() {
    let m = parse_model("statevar x, y, z.\ndomain x in [0, 2], y in [0, 2], z in [0, 2].\n").unwrap();
    let g = Grid::uniform(&VARS, &VALUES);
    let gen = gen();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut ck = Checker::new(&m, 1e-3, 1e-6, IcpConfig { max_boxes: 20_000 });
    let (mut closed, mut excised) = (0, 0);
    for _ in 0..300 {
        let mut alpha = gen.program(&mut rng, 3);
        while has_star(&alpha) {
            alpha = gen.program(&mut rng, 3);
        }
        let goal = Goal::new(gen.formula(&mut rng, 2), Some(alpha), gen.formula(&mut rng, 1));
        let mut node = ProofNode::leaf(goal.clone());
        discharge(&mut node, &mut ck, &[]);
        if node.status == Status::Closed {
            closed += 1;
            excised += count(&node, "excise");
            assert!(valid(&goal.to_formula(), &g), "closed an invalid goal: {goal}\n{}", node.to_json());
        }
    }
    assert!(closed >= 30 && excised > 0, "closed {closed}, excised {excised}");
}

fn has_star(p: &Program) -> bool {
    match p {
        Program::Star(_) => true,
        Program::Seq(a, b) | Program::Choice(a, b) => has_star(a) || has_star(b),
        _ => false,
    }
}

fn count(n: &ProofNode, rule: &str) -> usize {
    (n.rule == rule) as usize + n.children.iter().map(|c| count(c, rule)).sum::<usize>()
}

#[test]
fn tree_status_is_monotone() {
    let leaf = |s: Status| {
        let mut n = ProofNode::leaf(Goal::new(Formula::True, None, Formula::True));
        n.status = s;
        n
    };
    let mut root = ProofNode::leaf(Goal::new(Formula::True, None, Formula::True));
    root.expand("test", vec![], vec![leaf(Status::Closed), leaf(Status::Closed)]);
    root.refresh();
    assert!(root.status.is_closed());
    root.children[1].status = Status::open("reopened");
    root.refresh();
    assert!(matches!(root.status, Status::Open { .. }));
    root.children[0].status = Status::failed("refuted");
    root.refresh();
    assert!(matches!(root.status, Status::Failed { .. }));
    assert_eq!(root.unclosed_leaves().len(), 2);
}
