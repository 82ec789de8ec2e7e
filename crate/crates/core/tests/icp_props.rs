use ficut_core::hp::eval::{eval_term, Environment, State};
use ficut_core::icp::random::{planted_system, random_box, random_point_in, random_poly, random_term, sos_infeasible};
use ficut_core::icp::{check, interval_eval, lie_derivative, satisfies_weakened, DeltaResult, Enclosure};
use ficut_core::hp::Term;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x", "y", "z"];

#[test]
fn inclusion_isotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let env = Environment::new();
    let names: Vec<String> = VARS.iter().map(|s| s.to_string()).collect();
    let mut checked = 0;
    for _ in 0..1000 {
        let t = random_term(&mut rng, &VARS, 4);
        let b = random_box(&mut rng, &VARS, 5.0);
        let p = random_point_in(&mut rng, &b);
        let Ok(v) = eval_term(&p, &env, &t) else { continue };
        if !v.is_finite() {
            continue;
        }
        let iv = interval_eval(&t, &b).unwrap();
        assert!(iv.contains(v), "{t} at {p:?}: {v} not in {iv}");
        // the solver's own (tighter) enclosure must be sound as well
        let enc = Enclosure::new(&t, &names).unwrap().eval(&b.ivs);
        assert!(enc.contains(v), "{t} at {p:?}: {v} not in enclosure {enc}");
        checked += 1;
    }
    assert!(checked > 500, "too few defined samples: {checked}");
}

#[test]
fn planted_points_never_unsat() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let (sys, _p) = planted_system(&mut rng, &VARS[..2], n, 1e-3);
        match check(&sys).unwrap() {
            DeltaResult::Unsat => panic!("planted system reported unsat: {:?}", sys.constraints),
            DeltaResult::DeltaSat(w) => {
                assert!(w.width() <= 1e-3);
                assert!(satisfies_weakened(&sys, &w.midpoint()).unwrap());
            }
        }
    }
}

#[test]
fn sums_of_squares_below_negative_are_unsat() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let sys = sos_infeasible(&mut rng, &VARS, 1e-3);
        assert_eq!(check(&sys).unwrap(), DeltaResult::Unsat);
    }
}

#[test]
fn lie_derivative_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let env = Environment::new();
    let mut checked = 0;
    while checked < 100 {
        let v = random_poly(&mut rng, &VARS, 3);
        let field: Vec<(String, Term)> = VARS.iter().map(|x| (x.to_string(), random_poly(&mut rng, &VARS, 2))).collect();
        let p: State = VARS.iter().map(|x| (x.to_string(), rng.gen_range(-2.0..2.0))).collect();
        let d = eval_term(&p, &env, &lie_derivative(&v, &field)).unwrap();
        let f: Vec<f64> = field.iter().map(|(_, t)| eval_term(&p, &env, t).unwrap()).collect();
        let h = 1e-5;
        let shifted = |s: f64| -> State {
            VARS.iter().zip(&f).map(|(x, fi)| (x.to_string(), p[*x] + s * h * fi)).collect()
        };
        let fd = (eval_term(&shifted(1.0), &env, &v).unwrap() - eval_term(&shifted(-1.0), &env, &v).unwrap()) / (2.0 * h);
        let scale = d.abs().max(1.0);
        assert!((d - fd).abs() <= 1e-4 * scale, "{v}: {d} vs {fd}");
        checked += 1;
    }
}
