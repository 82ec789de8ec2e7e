//! Tactic scripts: one directive per line, applied in order to the proof tree.
//!
//! ```text
//! goal <formula>                       root goal (default: last boxed formula)
//! cut <name> | loop-inv <name>         rules on the current main goal
//! barrier <file> [check=strict|weak|either] [eps=<v>] [name=<id>]
//! lyap-linear mode=<m> [Q=identity] level=<v|auto> [name=<id>] [guard=yes|no]
//! synth-barrier mode=<m> degree=<d> [seed=<n>] [name=<id>] [contain=<name>] [level=<v>]
//! bounded-reach mode=<m> time=<v> [name=<id>] [box=<id>]
//! discrete-cert start=<m,...> [name=<id>]
//! auto [budget=<n>]
//! ```
//! The main goal starts at the root and moves to the first premise of each cut.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::PathBuf;

use crate::certsynth::{read_certificate, select_level, Certificate};
use crate::hp::{parse_formula, CmpOp, Formula, Model, Program, Term};
use crate::icp::{IcpConfig, Interval, IntervalBox};

use super::check::Checker;
use super::discharge::discharge;
use super::flow::{Attached, DecreaseCheck, Level};
use super::goal::{apply_fwd_inv_cut, apply_invariant_rule, Goal};
use super::modes::{discrete_unreachable, ModeGraph};
use super::reach::bounded_reach_envelope;
use super::simplify::atom_bounds;
use super::synth::{lyap_linear, mode_flow, mode_var, synth_barrier};
use super::tree::ProofNode;
use super::ProofError;

#[derive(Clone, Debug)]
pub struct TacticConfig {
    pub delta: f64,
    pub eps: f64,
    pub icp: IcpConfig,
    /// Directory against which certificate paths resolve.
    pub base_dir: PathBuf,
    pub dump_queries: bool,
}

impl Default for TacticConfig {
    fn default() -> Self {
        TacticConfig { delta: 1e-4, eps: 1e-6, icp: IcpConfig::default(), base_dir: PathBuf::from("."), dump_queries: false }
    }
}

pub struct ProofRun {
    pub root: ProofNode,
    pub certificates: Vec<Attached>,
    /// `(name, text)` of every query issued, when dumping was requested.
    pub dumps: Vec<(String, String)>,
}

struct Directive<'a> {
    line: usize,
    cmd: &'a str,
    args: Vec<&'a str>,
    opts: BTreeMap<&'a str, &'a str>,
    rest: &'a str,
}

impl<'a> Directive<'a> {
    fn parse(line: usize, text: &'a str) -> Directive<'a> {
        let (cmd, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        let mut args = Vec::new();
        let mut opts = BTreeMap::new();
        for tok in rest.split_whitespace() {
            match tok.split_once('=') {
                Some((k, v)) => {
                    opts.insert(k, v);
                }
                None => args.push(tok),
            }
        }
        Directive { line, cmd, args, opts, rest: rest.trim() }
    }

    fn err(&self, msg: impl Into<String>) -> ProofError {
        ProofError::Tactic { line: self.line, msg: msg.into() }
    }

    fn allow(&self, keys: &[&str], positional: usize) -> Result<(), ProofError> {
        if let Some(k) = self.opts.keys().find(|k| !keys.contains(k)) {
            return Err(self.err(format!("`{}` does not take option `{k}`", self.cmd)));
        }
        if self.args.len() != positional {
            return Err(self.err(format!("`{}` takes {positional} positional argument(s), got {}", self.cmd, self.args.len())));
        }
        Ok(())
    }

    fn req(&self, key: &str) -> Result<&'a str, ProofError> {
        self.opts.get(key).copied().ok_or_else(|| self.err(format!("`{}` needs `{key}=`", self.cmd)))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ProofError> {
        self.opts.get(key).map(|v| v.parse().map_err(|_| self.err(format!("bad value `{v}` for `{key}`")))).transpose()
    }

    fn check(&self) -> Result<DecreaseCheck, ProofError> {
        Ok(match self.opts.get("check").copied() {
            None | Some("either") => DecreaseCheck::Either,
            Some("weak") => DecreaseCheck::Weak,
            Some("strict") => DecreaseCheck::Strict,
            Some(o) => return Err(self.err(format!("unknown check `{o}`"))),
        })
    }
}

fn mode_guard(var: &str, value: f64) -> Formula {
    Formula::cmp(Term::var(var), CmpOp::Eq, Term::c(value))
}

fn fmt_rows(m: &[Vec<f64>]) -> String {
    m.iter().map(|r| r.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("; ")
}

struct Engine<'m> {
    model: &'m Model,
    cfg: TacticConfig,
    ck: Checker<'m>,
    root: Option<ProofNode>,
    main: Vec<usize>,
    certs: Vec<Attached>,
    defs: Vec<(String, Formula)>,
}

impl<'m> Engine<'m> {
    fn formula(&self, name: &str) -> Result<Formula, ProofError> {
        self.defs
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f.clone())
            .or_else(|| self.model.formula(name).cloned())
            .ok_or_else(|| ProofError::Unknown { kind: "formula", name: name.into() })
    }

    fn define(&mut self, name: Option<&str>, f: Formula) {
        if let Some(n) = name {
            self.log(format!("defined `{n}` := {f}"));
            self.defs.push((n.to_string(), f));
        }
    }

    fn root(&mut self) -> Result<&mut ProofNode, ProofError> {
        if self.root.is_none() {
            let (_, f) = self.model.default_goal().ok_or_else(|| ProofError::Unknown { kind: "goal", name: "(no boxed formula in model)".into() })?;
            self.root = Some(ProofNode::leaf(Goal::from_formula(f)));
        }
        Ok(self.root.as_mut().expect("root set"))
    }

    fn log(&mut self, line: String) {
        if let Ok(r) = self.root() {
            r.log.push(line);
        }
    }

    fn main_node(&mut self) -> Result<&mut ProofNode, ProofError> {
        let path = self.main.clone();
        let mut n = self.root()?;
        for i in path {
            n = &mut n.children[i];
        }
        Ok(n)
    }

    /// Loop body of the root goal.
    fn body(&mut self) -> Result<Program, ProofError> {
        let g = self.root()?.goal.clone();
        match g.program {
            Some(Program::Star(b)) => Ok(*b),
            _ => Err(ProofError::Shape { rule: "discrete-cert".into(), expected: "I -> [a*]S".into(), goal: g.to_string() }),
        }
    }

    fn run(&mut self, d: &Directive) -> Result<(), ProofError> {
        match d.cmd {
            "goal" => {
                if self.root.is_some() {
                    return Err(d.err("`goal` must come before any rule"));
                }
                let f = parse_formula(d.rest, self.model).map_err(|e| d.err(e.to_string()))?;
                self.root = Some(ProofNode::leaf(Goal::from_formula(&f)));
            }
            "cut" | "loop-inv" => {
                d.allow(&[], 1)?;
                let c = self.formula(d.args[0])?;
                let node = self.main_node()?;
                if !node.children.is_empty() {
                    return Err(d.err("the main goal is already expanded"));
                }
                let (rule, kids) = if d.cmd == "cut" {
                    ("fwd-inv-cut", apply_fwd_inv_cut(&node.goal, &c)?)
                } else {
                    ("loop-inv", apply_invariant_rule(&node.goal, &c)?)
                };
                let children = kids.into_iter().map(ProofNode::leaf).collect();
                node.expand(rule, vec![d.args[0].to_string()], children);
                if d.cmd == "cut" {
                    self.main.push(0);
                }
            }
            "barrier" => self.barrier(d)?,
            "lyap-linear" => self.lyap(d)?,
            "synth-barrier" => self.synth(d)?,
            "bounded-reach" => self.reach(d)?,
            "discrete-cert" => {
                d.allow(&["start", "name"], 0)?;
                let var = mode_var(self.model).ok_or_else(|| d.err("model has no mode variable"))?.to_string();
                let body = self.body()?;
                let g = ModeGraph::from_body(self.model, &var, &body).ok_or_else(|| d.err("no mode graph"))?;
                let start: Vec<String> = d.req("start")?.split(',').map(|s| s.trim().to_string()).collect();
                if let Some(m) = start.iter().find(|m| !g.modes.contains(m)) {
                    return Err(ProofError::Unknown { kind: "mode", name: m.clone() });
                }
                let un = discrete_unreachable(&g, &start);
                let names: Vec<&str> = un.iter().map(|s| s.as_str()).collect();
                if g.bad.is_subset(&un) && !g.bad.is_empty() {
                    self.log(format!("discrete-cert: unreachable {{{}}} includes every bad mode", names.join(", ")));
                } else {
                    self.log(format!("discrete-cert: unreachable {{{}}}; a bad mode is reachable, no certificate", names.join(", ")));
                }
                let f = Formula::conj(un.iter().map(|m| {
                    Formula::cmp(Term::var(&var), CmpOp::Ne, Term::c(self.model.mode_value(m).expect("declared mode")))
                }));
                self.define(d.opts.get("name").copied(), f);
            }
            "auto" => {
                d.allow(&["budget"], 0)?;
                self.ck.budget = d.num("budget")?;
                let certs = self.certs.clone();
                self.root()?;
                let root = self.root.as_mut().expect("root set");
                discharge(root, &mut self.ck, &certs);
                self.ck.budget = None;
            }
            other => return Err(d.err(format!("unknown directive `{other}`"))),
        }
        if let Some(r) = &mut self.root {
            r.refresh();
        }
        Ok(())
    }

    fn barrier(&mut self, d: &Directive) -> Result<(), ProofError> {
        d.allow(&["check", "eps", "name"], 1)?;
        let path = self.cfg.base_dir.join(d.args[0]);
        let text = std::fs::read_to_string(&path).map_err(|e| ProofError::Io(format!("{}: {e}", path.display())))?;
        let file = read_certificate(&text, self.model)?;
        let prov = |k: &str| file.provenance.iter().find(|(p, _)| p == k).map(|(_, v)| v.clone());
        let mode = prov("mode").ok_or_else(|| d.err("certificate has no `mode` provenance"))?;
        let (var, value, ode) = mode_flow(self.model, &mode)?;
        let (v, level, region) = match &file.cert {
            Certificate::Quadratic(q) => {
                let level = q.level.ok_or_else(|| d.err("quadratic certificate has no level"))?;
                (q.value_term(), level, q.formula())
            }
            Certificate::Barrier(b) => {
                let level = prov("level").map(|l| l.parse::<f64>().map_err(|_| d.err("bad `level` provenance"))).transpose()?.unwrap_or(0.0);
                let t = b.term();
                let region = Formula::and(mode_guard(&var, value), Formula::cmp(t.clone(), CmpOp::Le, Term::c(level)));
                (t, level, region)
            }
        };
        let eps = d.num("eps")?.unwrap_or(self.cfg.eps);
        let name = d.opts.get("name").map(|s| s.to_string()).unwrap_or_else(|| d.args[0].to_string());
        self.log(format!("barrier {}: mode {mode}, level {level}", d.args[0]));
        self.certs.push(Attached { name, field: ode.eqs, v, level: Level::Fixed(level), check: d.check()?, eps });
        // quadratic files carry their own guard, if any
        self.define(d.opts.get("name").copied(), region);
        Ok(())
    }

    fn lyap(&mut self, d: &Directive) -> Result<(), ProofError> {
        d.allow(&["mode", "Q", "level", "name", "guard", "check", "eps"], 0)?;
        if d.opts.get("Q").is_some_and(|q| *q != "identity") {
            return Err(d.err("only Q=identity is supported"));
        }
        let mode = d.req("mode")?;
        let (ode, q) = lyap_linear(self.model, mode)?;
        let (var, value, _) = mode_flow(self.model, mode)?;
        self.log(format!("lyap-linear mode={mode}: P = [{}], V = {}", fmt_rows(&q.p), q.value_term()));
        let eps = d.num("eps")?.unwrap_or(self.cfg.eps);
        let name = d.opts.get("name").copied();
        let label = name.map(|s| s.to_string()).unwrap_or_else(|| format!("V[{mode}]"));
        match d.req("level")? {
            "auto" => {
                if name.is_some() {
                    return Err(d.err("`level=auto` certificates cannot be named; the level differs per goal"));
                }
                self.certs.push(Attached { name: label, field: ode.eqs, v: q.value_term(), level: Level::Auto, check: d.check()?, eps });
            }
            l => {
                let level: f64 = l.parse().map_err(|_| d.err(format!("bad level `{l}`")))?;
                let mut c = q.clone().with_level(level);
                match d.opts.get("guard").copied() {
                    None | Some("yes") => c = c.with_guard(mode_guard(&var, value)),
                    Some("no") => {}
                    Some(o) => return Err(d.err(format!("guard must be yes or no, got `{o}`"))),
                }
                self.certs.push(Attached { name: label, field: ode.eqs, v: q.value_term(), level: Level::Fixed(level), check: d.check()?, eps });
                self.define(name, c.formula());
            }
        }
        Ok(())
    }

    fn synth(&mut self, d: &Directive) -> Result<(), ProofError> {
        d.allow(&["mode", "degree", "seed", "name", "contain", "level", "check", "eps"], 0)?;
        let mode = d.req("mode")?;
        let degree: u32 = d.num("degree")?.unwrap_or(2);
        let seed: u64 = d.num("seed")?.unwrap_or(0);
        let syn = synth_barrier(self.model, mode, degree, seed, self.cfg.delta, self.cfg.icp)?;
        let (var, value, _) = mode_flow(self.model, mode)?;
        let mut msg = format!("synth-barrier mode={mode} degree={degree} seed={seed}: {} traces, {} states; ", syn.traces, syn.samples);
        match &syn.outcome {
            Ok(s) => {
                let _ = write!(msg, "verified after {} iteration(s), {} counterexample(s)", s.iterations, s.counterexamples.len());
            }
            Err(f) => {
                let _ = write!(msg, "not verified ({f}); using the last candidate, invariance is rechecked at each use");
            }
        }
        self.log(msg);
        let cert = syn.certificate().cloned().ok_or_else(|| d.err("synthesis produced no candidate"))?;
        let v = cert.term();
        let level = match (d.num::<f64>("level")?, d.opts.get("contain")) {
            (Some(l), _) => Some(l),
            (None, Some(c)) => {
                let contain = self.formula(c)?;
                let all = Formula::and(contain.clone(), Formula::cmp(v.clone(), CmpOp::Le, Term::c(0.0)));
                let domain = self.ck.domain_for(&all).map_err(|e| d.err(e))?;
                match select_level(&v, &contain, &Formula::False, &domain, self.cfg.delta, &self.cfg.icp)? {
                    Ok(l) => {
                        self.log(format!("`{c}` is contained in {{V <= {l}}} (icp Unsat of `{c}` and V > {l})"));
                        Some(l)
                    }
                    Err(f) => {
                        self.log(format!("containment of `{c}` in a sublevel set not proven: {f}"));
                        None
                    }
                }
            }
            (None, None) => None,
        };
        let eps = d.num("eps")?.unwrap_or(self.cfg.eps);
        let label = d.opts.get("name").map(|s| s.to_string()).unwrap_or_else(|| format!("B[{mode}]"));
        let check = d.check()?;
        match level {
            Some(l) => {
                // Normalized to level 1 so that δ-weakened queries stay meaningful
                // for certificates whose natural level is tiny.
                let v = cert.poly().scale(1.0 / l).to_term();
                self.log(format!("{label}: normalized to V/{l} <= 1"));
                self.certs.push(Attached { name: label, field: syn.ode.eqs.clone(), v: v.clone(), level: Level::Fixed(1.0), check, eps });
                let region = Formula::and(mode_guard(&var, value), Formula::cmp(v, CmpOp::Le, Term::c(1.0)));
                self.define(d.opts.get("name").copied(), region);
            }
            None => {
                if let Some(n) = d.opts.get("name") {
                    return Err(d.err(format!("cannot define `{n}`: no level was established")));
                }
                self.certs.push(Attached { name: label, field: syn.ode.eqs.clone(), v, level: Level::Auto, check, eps });
            }
        }
        Ok(())
    }

    fn reach(&mut self, d: &Directive) -> Result<(), ProofError> {
        d.allow(&["mode", "time", "name", "box"], 0)?;
        let mode = d.req("mode")?;
        let time: f64 = d.num("time")?.ok_or_else(|| d.err("`bounded-reach` needs `time=`"))?;
        let (var, value, ode) = mode_flow(self.model, mode)?;
        let init_f = self.root()?.goal.assumptions.clone();
        let bounds = atom_bounds(&init_f);
        let dom = |v: &str| self.model.domain_of(v).map(|(lo, hi)| Interval::new(lo, hi));
        let mut init = Vec::new();
        for x in ode.vars() {
            let d0 = dom(x).ok_or_else(|| ProofError::Unknown { kind: "domain for variable", name: x.into() })?;
            let (lo, hi) = bounds.get(x).copied().unwrap_or((d0.lo, d0.hi));
            init.push((x.to_string(), Interval::new(lo.max(d0.lo), hi.min(d0.hi))));
        }
        let init = IntervalBox::new(init);
        let mut vars: Vec<String> = ode.vars().iter().map(|s| s.to_string()).collect();
        vars.extend(ode.eqs.iter().flat_map(|(_, t)| t.state_vars()));
        vars.sort();
        vars.dedup();
        let domain = IntervalBox::new(vars.iter().filter_map(|v| dom(v).map(|i| (v.clone(), i))).collect::<Vec<_>>());
        let env = bounded_reach_envelope(&ode.eqs, &init, time, &domain)?;
        let clock = ode.eqs.iter().find(|(_, t)| t.constant_value() == Some(1.0)).map(|(x, _)| x.clone());
        let mut msg = format!("bounded-reach mode={mode} time={time}:");
        for (x, iv) in env.region.vars.iter().zip(&env.region.ivs) {
            let r = env.rate(x).unwrap_or(Interval::point(0.0));
            let _ = write!(msg, " {x} in [{}, {}] (rate [{}, {}]);", iv.lo, iv.hi, r.lo, r.hi);
        }
        self.log(msg);
        let tube = Formula::and(mode_guard(&var, value), env.formula(clock.as_deref()));
        self.define(d.opts.get("name").copied(), tube);
        let region = Formula::conj(env.region.vars.iter().zip(&env.region.ivs).filter(|(x, _)| Some(*x) != clock.as_ref()).flat_map(|(x, iv)| {
            [Formula::cmp(Term::var(x), CmpOp::Ge, Term::c(iv.lo)), Formula::cmp(Term::var(x), CmpOp::Le, Term::c(iv.hi))]
        }));
        self.define(d.opts.get("box").copied(), region);
        Ok(())
    }
}

/// Runs a tactic script against a model.
pub fn run_tactics(model: &Model, script: &str, cfg: &TacticConfig) -> Result<ProofRun, ProofError> {
    let mut ck = Checker::new(model, cfg.delta, cfg.eps, cfg.icp);
    if cfg.dump_queries {
        ck.dumps = Some(Vec::new());
    }
    let mut e = Engine { model, cfg: cfg.clone(), ck, root: None, main: Vec::new(), certs: Vec::new(), defs: Vec::new() };
    for (i, raw) in script.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        e.run(&Directive::parse(i + 1, line))?;
    }
    e.root()?;
    let mut root = e.root.take().expect("root set");
    root.refresh();
    Ok(ProofRun { root, certificates: e.certs, dumps: e.ck.dumps.take().unwrap_or_default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp::parse_model;
    use crate::proof::Status;

    const SRC: &str = "statevar x.\nmodevar M = {a, b, fail}.\ndomain x in [-10, 10].\n\
        I :== M = a & x <= 1 & x >= -1.\nC :== M = b & x^2 <= 4.\n\
        body ::= {?(M = a); {x' = -x}} ++ {?(M = a); ?(x^2 <= 1); M := b} ++ {?(M = b); {x' = -2*x}} ++ {?(x > 5); M := fail}.\n\
        G :== I -> [{body}*](M != fail).\n";

    fn cfg() -> TacticConfig {
        TacticConfig { delta: 1e-3, icp: IcpConfig { max_boxes: 200_000 }, ..Default::default() }
    }

    #[test]
    fn cut_then_loop_invariant() {
        let m = parse_model(SRC).unwrap();
        let run = run_tactics(&m, "cut C\nloop-inv I\nauto\n", &cfg()).unwrap();
        assert_eq!(run.root.status, Status::Closed, "{}", run.root.to_json());
        assert_eq!(run.root.rule, "fwd-inv-cut");
        assert_eq!(run.root.children[0].rule, "loop-inv");
    }

    #[test]
    fn auto_only_stays_open() {
        let m = parse_model(SRC).unwrap();
        let run = run_tactics(&m, "auto\n", &cfg()).unwrap();
        assert!(matches!(run.root.status, Status::Open { .. }));
    }

    #[test]
    fn script_errors_carry_lines() {
        let m = parse_model(SRC).unwrap();
        assert!(matches!(run_tactics(&m, "cut C\nfrobnicate\n", &cfg()), Err(ProofError::Tactic { line: 2, .. })));
        assert!(matches!(run_tactics(&m, "cut Nope\n", &cfg()), Err(ProofError::Unknown { .. })));
        assert!(matches!(run_tactics(&m, "lyap-linear mode=a level=1 Q=other\n", &cfg()), Err(ProofError::Tactic { .. })));
    }

    #[test]
    fn discrete_and_reach_definitions() {
        let m = parse_model(SRC).unwrap();
        let run = run_tactics(&m, "discrete-cert start=a name=D\nbounded-reach mode=a time=0.5 name=T box=B\n", &cfg()).unwrap();
        assert!(run.root.log.iter().any(|l| l.contains("a bad mode is reachable")));
        assert!(run.root.log.iter().any(|l| l.starts_with("bounded-reach mode=a")));
    }
}
