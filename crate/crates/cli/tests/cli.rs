use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn tmp(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

fn ficut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ficut")).args(args).current_dir(models()).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn auto_alone_leaves_the_loop_open() {
    let tac = tmp("auto.tac");
    std::fs::write(&tac, "auto\n").unwrap();
    let out = ficut(&["prove", "running-example.hp", tac.to_str().unwrap(), "--delta", "1e-3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stdout).contains("needs a cut or loop invariant"), "{}", text(&out.stdout));
}

#[test]
fn malformed_model_reports_position() {
    let bad = tmp("bad.hp");
    std::fs::write(&bad, "statevar x.\nfoo ::= x := .\n").unwrap();
    let out = ficut(&["prove", bad.to_str().unwrap(), "running-example.tac"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains(":2:14:"), "{}", text(&out.stderr));
}

#[test]
fn bad_tactic_line_is_an_error() {
    let tac = tmp("bad.tac");
    std::fs::write(&tac, "cut C1\nfrobnicate\n").unwrap();
    let out = ficut(&["prove", "running-example.hp", tac.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("line 2"), "{}", text(&out.stderr));
}

#[test]
fn reports_are_byte_identical_and_queries_dump() {
    let (a, b, dir) = (tmp("a.json"), tmp("b.json"), tmp("queries"));
    for r in [&a, &b] {
        let out = ficut(&["prove", "switched.hp", "switched.tac", "--report", r.to_str().unwrap(), "--dump-queries", dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(std::fs::read_dir(&dir).unwrap().count() > 10);
}

#[test]
fn lyap_linear_rejects_nonlinear_modes() {
    let out = ficut(&["synth", "running-example.hp", "--mode", "q1", "--method", "lyap-linear", "-o", tmp("q1.txt").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("nonlinear"));
}

#[test]
fn synthesized_certificate_feeds_the_barrier_tactic() {
    let cert = tmp("m1.txt");
    let out = ficut(&["synth", "switched.hp", "--mode", "1", "--method", "lyap-linear", "-o", cert.to_str().unwrap()]);
    assert!(out.status.success());
    // give the certificate a level, then use it through `barrier`
    let body = std::fs::read_to_string(&cert).unwrap() + "level 1\n";
    std::fs::write(&cert, body).unwrap();
    let tac = tmp("barrier.tac");
    std::fs::write(&tac, "barrier m1.txt name=C1\nlyap-linear mode=2 level=1 guard=no name=C2\nlyap-linear mode=1 level=auto\nlyap-linear mode=2 level=auto\ncut C1\ncut C2\nauto\n").unwrap();
    let out = ficut(&["prove", "switched.hp", tac.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}{}", text(&out.stdout), text(&out.stderr));
}

#[test]
fn simulate_running_example() {
    let csv = tmp("trace.csv");
    let out = ficut(&["simulate", "running-example.hp", "--program", "Ex", "--init", "x1=1,x2=1,M=q0", "--seed", "3", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let body = std::fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["t", "x1", "x2", "M"]);
    let fail = 3.0;
    assert!(lines.all(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap() != fail));

    let out = ficut(&["simulate", "running-example.hp", "--program", "m0", "--init", "x1=1,x2=1,M=q0", "--t-max", "0", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 2);

    let out = ficut(&["simulate", "running-example.hp", "--program", "nope", "--init", "x1=1,x2=1,M=q0", "-o", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("available: m0, s01, m1, s02, m2, sfail, mfail, Ex"));
}
