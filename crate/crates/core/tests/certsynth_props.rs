use ficut_core::certsynth::{
    ellipsoid_image, level_passes, refine_loop, select_level, solve_lyapunov_linear, sublevel_contained, Containment,
    LpSpec, QuadraticCertificate, RefineConfig,
};
use ficut_core::hp::eval::Environment;
use ficut_core::hp::{parse_formula, parse_model, parse_term, Formula, State, Term};
use ficut_core::icp::{check_formula, IcpConfig, IntervalBox};
use ficut_core::linalg::{cholesky, identity, mat_mul, max_abs_diff, transpose, Matrix};
use ficut_core::poly::monomial_basis;
use ficut_core::sim::{integrate_ode, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn xy() -> Vec<String> {
    vec!["x1".into(), "x2".into()]
}

const A1: [[f64; 2]; 2] = [[-1.0, 4.0], [-0.25, -1.0]];
const A2: [[f64; 2]; 2] = [[-1.0, -0.25], [4.0, -1.0]];
const R12: [[f64; 2]; 2] = [[-0.0658, -0.0123], [0.1965, -0.0658]];

fn m(a: [[f64; 2]; 2]) -> Matrix {
    a.iter().map(|r| r.to_vec()).collect()
}

fn residual(a: &Matrix, p: &Matrix, q: &Matrix) -> f64 {
    let l = mat_mul(&transpose(a), p);
    let r = mat_mul(p, a);
    let n = a.len();
    let lhs: Matrix = (0..n).map(|i| (0..n).map(|j| l[i][j] + r[i][j] + q[i][j]).collect()).collect();
    max_abs_diff(&lhs, &vec![vec![0.0; n]; n])
}

#[test]
fn switched_system_coefficients() {
    let p1 = solve_lyapunov_linear(&xy(), &m(A1), &identity(2)).unwrap();
    let expect1 = vec![vec![0.3828, 0.46875], vec![0.46875, 2.3750]];
    assert!(max_abs_diff(&p1.p, &expect1) < 1e-3, "{:?}", p1.p);
    assert!(residual(&m(A1), &p1.p, &identity(2)) <= 1e-9);
    let p2 = solve_lyapunov_linear(&xy(), &m(A2), &identity(2)).unwrap();
    let expect2 = vec![vec![2.3750, 0.46875], vec![0.46875, 0.3828]];
    assert!(max_abs_diff(&p2.p, &expect2) < 1e-3, "{:?}", p2.p);
}

#[test]
fn random_stable_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n = rng.gen_range(1..=5);
        let mut a: Matrix = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        // Frobenius norm bounds the spectral norm
        let norm = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        for (i, row) in a.iter_mut().enumerate() {
            row[i] -= norm + 1.0;
        }
        let vars: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let c = solve_lyapunov_linear(&vars, &a, &identity(n)).unwrap();
        assert!(residual(&a, &c.p, &identity(n)) <= 1e-9);
        assert!(cholesky(&c.p).is_some());
    }
}

#[test]
fn ellipsoid_image_exact() {
    let p1 = solve_lyapunov_linear(&xy(), &m(A1), &identity(2)).unwrap().with_level(1.0);
    let img = ellipsoid_image(&p1, &m(R12)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 1000 {
        let x: State = [("x1".to_string(), rng.gen_range(-3.0..3.0)), ("x2".to_string(), rng.gen_range(-3.0..3.0))]
            .into_iter()
            .collect();
        if p1.value(&x) > 1.0 {
            continue;
        }
        let y: State = [
            ("x1".to_string(), R12[0][0] * x["x1"] + R12[0][1] * x["x2"]),
            ("x2".to_string(), R12[1][0] * x["x1"] + R12[1][1] * x["x2"]),
        ]
        .into_iter()
        .collect();
        assert!(img.value(&y) <= 1.0 * (1.0 + 1e-9));
        checked += 1;
    }
}

/// C1 image ⊆ C2* ⊆ C1 with C2* = {xᵀP₂x ≤ ℓ*}; ℓ* is the smallest grid level
/// containing the image, and must still sit inside C1.
#[test]
fn switched_chain_level() {
    let icp = IcpConfig { max_boxes: 2_000_000 };
    let dom = IntervalBox::from_bounds(&[("x1", -5.0, 5.0), ("x2", -5.0, 5.0)]);
    let c1 = solve_lyapunov_linear(&xy(), &m(A1), &identity(2)).unwrap().with_level(1.0);
    let p2 = solve_lyapunov_linear(&xy(), &m(A2), &identity(2)).unwrap();
    let image = ellipsoid_image(&c1, &m(R12)).unwrap();
    let level = select_level(&p2.value_term(), &image.formula(), &Formula::not(c1.formula()), &dom, 1e-4, &icp)
        .unwrap()
        .unwrap();
    let c2 = p2.with_level(level);
    assert_eq!(sublevel_contained(&image, &c2, &dom, 1e-4, &icp).unwrap(), Containment::Contained);
    assert_eq!(sublevel_contained(&c2, &c1, &dom, 1e-4, &icp).unwrap(), Containment::Contained);
}

#[test]
fn select_level_monotone() {
    let icp = IcpConfig { max_boxes: 200_000 };
    let model = parse_model("statevar x1, x2.\n").unwrap();
    let f = |s: &str| parse_formula(s, &model).unwrap();
    let dom = IntervalBox::from_bounds(&[("x1", -20.0, 20.0), ("x2", -20.0, 20.0)]);
    let v = parse_term("0.5*x1^2 + 0.5*(x2-2)^2", &model).unwrap();
    let contain = f("x1^2 + x2^2 < 1");
    let exclude = f("x1 > 10 | x1 < -10 | x2 > 10 | x2 < -10");
    let lo = select_level(&v, &contain, &exclude, &dom, 1e-3, &icp).unwrap().unwrap();
    // the exclusion bound is min V on the fail set = 32
    for l in [lo, 5.0, 10.0, 20.0, 31.5] {
        assert_eq!(level_passes(&v, &contain, &exclude, &dom, 1e-3, &icp, l).unwrap(), Ok(()), "level {l}");
    }
    assert!(level_passes(&v, &contain, &exclude, &dom, 1e-3, &icp, 33.0).unwrap().is_err());
}

#[test]
fn refine_switched_mode_one() {
    let field: Vec<(String, Term)> = (0..2)
        .map(|i| {
            let t = Term::add(Term::mul(Term::c(A1[i][0]), Term::var("x1")), Term::mul(Term::c(A1[i][1]), Term::var("x2")));
            (xy()[i].clone(), t)
        })
        .collect();
    let dom = IntervalBox::from_bounds(&[("x1", -2.0, 2.0), ("x2", -2.0, 2.0)]);
    let cfg = SimConfig { h: 0.05, t_max: 2.0, ..Default::default() };
    let traces: Vec<_> = [(1.0, 0.0), (0.0, 1.0), (-1.0, 1.0), (1.5, -0.5)]
        .iter()
        .map(|&(a, b)| {
            let x0: State = [("x1".to_string(), a), ("x2".to_string(), b)].into_iter().collect();
            integrate_ode(&field, &x0, &Formula::True, &Environment::new(), &cfg).unwrap()
        })
        .collect();
    let spec = LpSpec {
        vars: xy(),
        basis: monomial_basis(&xy(), 1, 2),
        field: field.clone(),
        center: vec![0.0, 0.0],
        eps_pos: 1e-3,
        eps_dec: 1e-6,
        domain: dom.clone(),
    };
    let ok = refine_loop(&traces, &spec, &RefineConfig::default()).unwrap().unwrap();
    // independent re-check of the exit condition
    let vdot = ficut_core::icp::lie_derivative(&ok.cert.term(), &field);
    let q = Formula::cmp(vdot, ficut_core::hp::CmpOp::Gt, Term::c(0.0));
    assert!(check_formula(&q, &dom, 1e-3, &IcpConfig::default()).unwrap().0.is_unsat());
    // quadratic part is a valid Lyapunov matrix: AᵀP + PA ≺ 0
    let p = ok.cert.poly().homogeneous(2).quadratic_matrix(&xy()).unwrap();
    let q = QuadraticCertificate::new(xy(), p.clone()).expect("V is positive definite");
    let a = m(A1);
    let l = mat_mul(&transpose(&a), &q.p);
    let r = mat_mul(&q.p, &a);
    let neg: Matrix = (0..2).map(|i| (0..2).map(|j| -(l[i][j] + r[i][j])).collect()).collect();
    assert!(cholesky(&neg).is_some());
}
