//! End-to-end acceptance criteria. Each criterion is its own test and prints
//! one `criterion N: PASS|FAIL ...` line; run with `--nocapture` to see them.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use ficut_core::hp::eval::{eval_term, Environment, State};
use ficut_core::hp::oracle::{enumerate_transitions, valid_on, Grid};
use ficut_core::hp::random::ProgramGen;
use ficut_core::hp::{restrict, Formula, Program, Term};
use ficut_core::icp::random::{planted_system, random_poly, sos_infeasible};
use ficut_core::icp::{check, lie_derivative, satisfies_weakened, DeltaResult};
use ficut_core::proof::{apply_fwd_inv_cut, Goal};
use ficut_core::sim::{integrate_ode, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

fn ficut(args: &[&str]) -> (Output, Duration) {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_ficut")).args(args).current_dir(models()).output().expect("run ficut");
    (out, t.elapsed())
}

/// Prints the verdict line, then fails the test if the criterion failed.
fn report(n: u32, what: &str, res: Result<String, String>) {
    match res {
        Ok(detail) => println!("criterion {n}: PASS {what} ({detail})"),
        Err(why) => {
            println!("criterion {n}: FAIL {what}: {why}");
            panic!("criterion {n} failed: {why}");
        }
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg.into()) }
}

fn prove(model: &str, delta: &str, report_name: &str) -> Result<(Value, Duration, i32), String> {
    let path = scratch(report_name);
    let p = path.to_str().unwrap();
    let (out, took) = ficut(&["prove", &format!("{model}.hp"), &format!("{model}.tac"), "--delta", delta, "--eps", "1e-6", "--report", p]);
    let code = out.status.code().unwrap_or(-1);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("no report ({e}); stderr: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok((serde_json::from_str(&text).map_err(|e| e.to_string())?, took, code))
}

fn state(n: &Value) -> &str {
    n["status"]["state"].as_str().unwrap_or("")
}

fn walk<'a>(n: &'a Value, out: &mut Vec<&'a Value>) {
    out.push(n);
    for c in n["children"].as_array().into_iter().flatten() {
        walk(c, out);
    }
}

fn logs(n: &Value) -> Vec<String> {
    let mut all = Vec::new();
    walk(n, &mut all);
    all.iter().flat_map(|n| n["log"].as_array().into_iter().flatten().filter_map(|l| l.as_str().map(String::from))).collect()
}

#[test]
fn criterion_1_lyapunov_reproduction() {
    let res = (|| {
        let expected = [("1", [0.3828, 0.46875, 2.3750]), ("2", [2.3750, 0.46875, 0.3828])];
        let mut worst = 0.0f64;
        for (mode, [a, b, c]) in expected {
            let cert = scratch(&format!("lyap-{mode}.txt"));
            let (out, took) = ficut(&["synth", "switched.hp", "--mode", mode, "--method", "lyap-linear", "-o", cert.to_str().unwrap()]);
            ensure(out.status.success(), format!("synth failed: {}", String::from_utf8_lossy(&out.stderr)))?;
            ensure(took < Duration::from_secs(1), format!("took {took:?}"))?;
            let text = std::fs::read_to_string(&cert).map_err(|e| e.to_string())?;
            let rows: Vec<Vec<f64>> = text
                .lines()
                .filter_map(|l| l.strip_prefix("row "))
                .map(|r| r.split_whitespace().map(|x| x.parse().unwrap()).collect())
                .collect();
            ensure(rows.len() == 2, "expected a 2x2 matrix")?;
            for (got, want) in [(rows[0][0], a), (rows[0][1], b), (rows[1][0], b), (rows[1][1], c)] {
                worst = worst.max((got - want).abs());
            }
            let stdout = String::from_utf8_lossy(&out.stdout);
            let resid: f64 = stdout
                .lines()
                .find_map(|l| l.strip_prefix("residual max|A^T P + P A + I| = "))
                .ok_or("no residual line")?
                .parse()
                .map_err(|_| "bad residual")?;
            ensure(resid <= 1e-9, format!("residual {resid}"))?;
        }
        ensure(worst <= 1e-3, format!("max coefficient error {worst}"))?;
        Ok(format!("max coefficient error {worst:.2e}"))
    })();
    report(1, "switched-system Lyapunov coefficients", res);
}

#[test]
fn criterion_2_running_example() {
    let res = (|| {
        let (r, took, code) = prove("running-example", "1e-3", "running-example.json")?;
        ensure(code == 0 && state(&r) == "closed", format!("exit {code}, status {}", r["status"]))?;
        ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
        let root = &r["proof"];
        let cut2 = &root["children"][0];
        ensure(root["rule"] == "fwd-inv-cut" && cut2["rule"] == "fwd-inv-cut", "expected two nested forward invariant cuts")?;
        ensure(root["children"].as_array().map(Vec::len) == Some(3) && cut2["children"].as_array().map(Vec::len) == Some(3), "each cut has three premises")?;
        let inv = &cut2["children"][0];
        ensure(inv["rule"] == "loop-inv" && inv["children"].as_array().map(Vec::len) == Some(3), "loop invariant triple under the second cut")?;
        Ok(format!("closed in {took:.2?}"))
    })();
    report(2, "running example closes with cut C1, cut C2, loop-inv J", res);
}

#[test]
fn criterion_3_switched_system() {
    let res = (|| {
        let (r, took, code) = prove("switched", "1e-4", "switched.json")?;
        ensure(code == 0 && state(&r) == "closed", format!("exit {code}, status {}", r["status"]))?;
        ensure(took < Duration::from_secs(300), format!("took {took:?}"))?;
        let l = logs(&r["proof"]);
        ensure(l.iter().any(|s| s.starts_with("ellipsoid_image(R = [[-0.0658, -0.0123], [0.1965, -0.0658]])")), "no ellipsoid image under R12")?;
        ensure(l.iter().any(|s| s.contains("bisected level")), "no bisected level")?;
        for what in ["initial set, chosen level", "chosen level, postcondition"] {
            ensure(l.iter().any(|s| *s == format!("sublevel_contained({what}): contained")), format!("sublevel_contained({what}) not shown"))?;
        }
        let mut nodes = Vec::new();
        walk(&r["proof"], &mut nodes);
        ensure(nodes.iter().any(|n| n["rule"] == "empty-antecedent" && state(n) == "closed"), "no empty-antecedent closure")?;
        Ok(format!("closed in {took:.2?}"))
    })();
    report(3, "switched system closes via the lemma chain", res);
}

#[test]
fn criterion_4_fuel_control() {
    let res = (|| {
        let (r, took, code) = prove("fuel-control", "1e-2", "fuel-control.json")?;
        ensure(took < Duration::from_secs(600), format!("took {took:?}"))?;
        ensure(code == 0 || code == 2, format!("exit {code}"))?;
        // (a) recovery envelope of r
        let line = logs(&r["proof"]).into_iter().find(|l| l.starts_with("bounded-reach mode=recovery")).ok_or("no bounded-reach log")?;
        let rest = line.split(" r in [").nth(1).ok_or("no r interval")?;
        let (lo, hi) = rest.split_once(']').ok_or("bad interval")?.0.split_once(", ").ok_or("bad interval")?;
        let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| "lo")?, hi.parse().map_err(|_| "hi")?);
        ensure((lo + 0.00236).abs() <= 1e-9 && (hi - 0.00244).abs() <= 1e-9, format!("r in [{lo}, {hi}]"))?;
        ensure(lo.abs().max(hi.abs()) <= 0.0025 && 0.0025 < 0.1, "r leaves |r| <= 0.0025")?;
        // (b) proof skeleton
        let root = &r["proof"];
        ensure(root["rule"] == "fwd-inv-cut", "root is not a forward invariant cut")?;
        let ob2 = &root["children"][2];
        let ob2_log: Vec<&str> = ob2["log"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
        ensure(state(ob2) == "closed" && ob2_log.iter().any(|l| l.contains("propositional")), "obligation 2 did not close propositionally")?;
        let mut nodes = Vec::new();
        walk(root, &mut nodes);
        for n in nodes.iter().filter(|n| n["children"].as_array().is_none_or(Vec::is_empty)) {
            match state(n) {
                "closed" => {}
                "open" => ensure(n["status"]["reason"].as_str().is_some_and(|s| !s.is_empty()), "open leaf without reason")?,
                "failed" => ensure(n["witnesses"].as_array().is_some_and(|w| !w.is_empty()), "failed leaf without witness")?,
                other => return Err(format!("unknown leaf state {other}")),
            }
        }
        Ok(format!("r in [{lo}, {hi}]; root {} in {took:.2?}", state(&r)))
    })();
    report(4, "fuel control envelope and proof skeleton", res);
}

const VARS: [&str; 3] = ["x", "y", "z"];
const VALUES: [f64; 3] = [0.0, 1.0, 2.0];

#[test]
fn criterion_5_cut_soundness_fuzz() {
    let res = (|| {
        let t = Instant::now();
        let g = Grid::uniform(&VARS, &VALUES);
        let gen = ProgramGen { vars: &VARS, consts: &VALUES };
        let env = Environment::new();
        let valid = |f: &Formula| valid_on(f, &g, &env, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut premised = 0;
        for _ in 0..500 {
            let alpha = gen.program(&mut rng, 3);
            let c = if rng.gen_bool(0.5) {
                gen.formula(&mut rng, 2)
            } else {
                // α*-closed candidates make the middle premise hold
                let seed = g.satisfying(&env, &gen.formula(&mut rng, 2)).unwrap();
                let star = enumerate_transitions(&Program::star(alpha.clone()), &g, &env, 64).unwrap();
                let reach: std::collections::BTreeSet<usize> = seed.iter().flat_map(|&s| star.successors(s).collect::<Vec<_>>()).collect();
                Formula::disj(reach.iter().map(|&s| {
                    let st = g.state(s);
                    Formula::conj(VARS.iter().map(|v| Formula::cmp(Term::var(v), ficut_core::hp::CmpOp::Eq, Term::c(st[*v]))))
                }))
            };
            let safe = if rng.gen_bool(0.5) { Formula::or(c.clone(), gen.formula(&mut rng, 1)) } else { gen.formula(&mut rng, 2) };
            let goal = Goal::new(gen.formula(&mut rng, 2), Some(Program::star(alpha)), safe);
            let premises = apply_fwd_inv_cut(&goal, &c).map_err(|e| e.to_string())?;
            if premises.iter().all(|p| valid(&p.to_formula())) {
                premised += 1;
                ensure(valid(&goal.to_formula()), format!("counterexample: {goal} with cut {c}"))?;
            }
        }
        let took = t.elapsed();
        ensure(took < Duration::from_secs(120), format!("took {took:?}"))?;
        ensure(premised > 0, "no instance had all premises valid")?;
        Ok(format!("500 programs, {premised} with valid premises, 0 violations, {took:.2?}"))
    })();
    report(5, "forward invariant cut soundness fuzz", res);
}

#[test]
fn criterion_6_restriction_lemma() {
    let res = (|| {
        let g = Grid::uniform(&VARS, &VALUES);
        let gen = ProgramGen { vars: &VARS, consts: &VALUES };
        let env = Environment::new();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut pairs = 0;
        for _ in 0..200 {
            let a = gen.program(&mut rng, 4);
            let d = gen.formula(&mut rng, 2);
            let in_d = g.satisfying(&env, &d).unwrap();
            let full = enumerate_transitions(&a, &g, &env, 64).unwrap();
            for &(s, t) in &enumerate_transitions(&restrict(&a, &d), &g, &env, 64).unwrap().pairs {
                ensure(full.pairs.contains(&(s, t)) && in_d.contains(&s) && in_d.contains(&t), format!("violation for {a} restricted to {d}"))?;
                pairs += 1;
            }
        }
        Ok(format!("200 programs, {pairs} restricted transitions, 0 violations"))
    })();
    report(6, "restriction lemma", res);
}

#[test]
fn criterion_7_icp_suite() {
    let res = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..200 {
            let n = rng.gen_range(1..=3);
            let (sys, _) = planted_system(&mut rng, &VARS[..2], n, 1e-3);
            match check(&sys).map_err(|e| e.to_string())? {
                DeltaResult::Unsat => return Err(format!("planted system {k} reported Unsat")),
                DeltaResult::DeltaSat(w) => ensure(satisfies_weakened(&sys, &w.midpoint()).unwrap(), format!("witness {k} midpoint not a weak solution"))?,
            }
        }
        for k in 0..50 {
            let sys = sos_infeasible(&mut rng, &VARS, 1e-3);
            ensure(check(&sys).map_err(|e| e.to_string())? == DeltaResult::Unsat, format!("infeasible system {k} not Unsat"))?;
        }
        Ok("200 planted never Unsat, 50 infeasible all Unsat".into())
    })();
    report(7, "icp correctness suite", res);
}

#[test]
fn criterion_8_numerical_cross_checks() {
    let res = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let env = Environment::new();
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let v = random_poly(&mut rng, &VARS, 3);
            let field: Vec<(String, Term)> = VARS.iter().map(|x| (x.to_string(), random_poly(&mut rng, &VARS, 2))).collect();
            let p: State = VARS.iter().map(|x| (x.to_string(), rng.gen_range(-2.0..2.0))).collect();
            let d = eval_term(&p, &env, &lie_derivative(&v, &field)).unwrap();
            let f: Vec<f64> = field.iter().map(|(_, t)| eval_term(&p, &env, t).unwrap()).collect();
            let h = 1e-5;
            let at = |s: f64| -> State { VARS.iter().zip(&f).map(|(x, fi)| (x.to_string(), p[*x] + s * h * fi)).collect() };
            let fd = (eval_term(&at(1.0), &env, &v).unwrap() - eval_term(&at(-1.0), &env, &v).unwrap()) / (2.0 * h);
            worst = worst.max((d - fd).abs() / d.abs().max(1.0));
        }
        ensure(worst <= 1e-4, format!("lie derivative relative error {worst}"))?;
        let decay = vec![("x".to_string(), Term::neg(Term::var("x")))];
        let x0: State = [("x".to_string(), 1.0)].into_iter().collect();
        let err = |h: f64| {
            let cfg = SimConfig { h, t_max: 1.0, ..Default::default() };
            let tr = integrate_ode(&decay, &x0, &Formula::True, &env, &cfg).unwrap();
            (tr.last()["x"] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        ensure((8.0..=32.0).contains(&ratio), format!("halving ratio {ratio}"))?;
        Ok(format!("lie derivative max rel. error {worst:.1e}; halving ratio {ratio:.2}"))
    })();
    report(8, "numerical cross-checks", res);
}
