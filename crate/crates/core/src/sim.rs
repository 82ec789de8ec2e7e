//! Numerical execution of hybrid programs: fixed-step RK4 flows inside
//! evolution domains and seeded, budgeted exploration of nondeterminism.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hp::eval::{eval_formula, eval_term, Environment, EvalError, State};
use crate::hp::{Formula, Ode, Program, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no havoc range configured for `{0}`")]
    NoHavocRange(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// integrator step (seconds)
    pub h: f64,
    /// duration budget per ODE
    pub t_max: f64,
    pub havoc_samples: usize,
    pub havoc_ranges: BTreeMap<String, (f64, f64)>,
    /// cap on live partial runs; excess is subsampled with a warning
    pub max_runs: usize,
    pub star_bound: usize,
    pub seed: u64,
    /// variables whose assignment is logged as a mode switch
    pub mode_vars: Vec<String>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            h: 1e-2,
            t_max: 1.0,
            havoc_samples: 4,
            havoc_ranges: BTreeMap::new(),
            max_runs: 256,
            star_bound: 4,
            seed: 0,
            mode_vars: Vec::new(),
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<(), SimError> {
        if !(self.h > 0.0) || self.t_max < 0.0 {
            return Err(SimError::Config(format!("need h > 0 and t_max >= 0, got h = {}, t_max = {}", self.h, self.t_max)));
        }
        if self.havoc_samples == 0 || self.max_runs == 0 || self.star_bound == 0 {
            return Err(SimError::Config("budgets must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    ModeSwitch,
    DomainExit,
    TestFail,
    HavocSample,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::ModeSwitch => "mode-switch",
            EventKind::DomainExit => "domain-exit",
            EventKind::TestFail => "test-fail",
            EventKind::HavocSample => "havoc-sample",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

/// Time-stamped samples (times strictly increasing) plus an event log.
/// Discrete steps take no time: they overwrite the state of the last sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub samples: Vec<(f64, State)>,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn start(x0: State) -> Trace {
        Trace { samples: vec![(0.0, x0)], events: Vec::new() }
    }

    pub fn last(&self) -> &State {
        &self.samples.last().expect("trace is nonempty").1
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().expect("trace is nonempty").0
    }

    fn last_mut(&mut self) -> &mut State {
        &mut self.samples.last_mut().expect("trace is nonempty").1
    }

    fn log(&mut self, kind: EventKind, detail: String) {
        let t = self.end_time();
        self.events.push(Event { t, kind, detail });
    }

    /// CSV with header `t,var1,...,varn`.
    pub fn to_csv(&self, vars: &[String]) -> String {
        let mut out = format!("t,{}\n", vars.join(","));
        for (t, s) in &self.samples {
            let _ = write!(out, "{t}");
            for v in vars {
                let _ = write!(out, ",{}", s.get(v).copied().unwrap_or(f64::NAN));
            }
            out.push('\n');
        }
        out
    }

    /// Sidecar CSV with header `t,kind,detail`.
    pub fn events_csv(&self) -> String {
        let mut out = String::from("t,kind,detail\n");
        for e in &self.events {
            let _ = writeln!(out, "{},{},\"{}\"", e.t, e.kind, e.detail.replace('"', "'"));
        }
        out
    }
}

fn field_at(eqs: &[(String, Term)], s: &State, env: &Environment) -> Result<Vec<f64>, SimError> {
    eqs.iter().map(|(_, t)| eval_term(s, env, t).map_err(SimError::from)).collect()
}

fn shifted(s: &State, eqs: &[(String, Term)], k: &[f64], scale: f64) -> State {
    let mut out = s.clone();
    for ((v, _), dk) in eqs.iter().zip(k) {
        *out.get_mut(v).expect("ode variable in state") += scale * dk;
    }
    out
}

/// One classical RK4 step.
pub fn rk4_step(eqs: &[(String, Term)], s: &State, env: &Environment, h: f64) -> Result<State, SimError> {
    let k1 = field_at(eqs, s, env)?;
    let k2 = field_at(eqs, &shifted(s, eqs, &k1, h / 2.0), env)?;
    let k3 = field_at(eqs, &shifted(s, eqs, &k2, h / 2.0), env)?;
    let k4 = field_at(eqs, &shifted(s, eqs, &k3, h), env)?;
    let incr: Vec<f64> = (0..eqs.len()).map(|i| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0).collect();
    Ok(shifted(s, eqs, &incr, h))
}

/// Integrates from `x0` until the evolution domain fails at a sample point or
/// `t_max` elapses. Sample times start at 0.
pub fn integrate_ode(
    eqs: &[(String, Term)],
    x0: &State,
    domain: &Formula,
    env: &Environment,
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    cfg.validate()?;
    let mut trace = Trace::start(x0.clone());
    let steps = (cfg.t_max / cfg.h + 1e-9).floor() as usize;
    let mut s = x0.clone();
    for k in 1..=steps {
        let next = rk4_step(eqs, &s, env, cfg.h)?;
        let t = k as f64 * cfg.h;
        if !eval_formula(&next, env, domain)? {
            trace.events.push(Event { t, kind: EventKind::DomainExit, detail: format!("left {domain}") });
            break;
        }
        trace.samples.push((t, next.clone()));
        s = next;
    }
    Ok(trace)
}

/// Endpoint traces of the sampled runs, with budget warnings.
#[derive(Clone, Debug, Default)]
pub struct RunSet {
    pub traces: Vec<Trace>,
    pub warnings: Vec<String>,
}

struct Explorer<'a> {
    env: &'a Environment,
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    warnings: Vec<String>,
}

impl Explorer<'_> {
    fn cap(&mut self, mut runs: Vec<Trace>) -> Vec<Trace> {
        if runs.len() <= self.cfg.max_runs {
            return runs;
        }
        let n = runs.len();
        let mut keep = sample(&mut self.rng, n, self.cfg.max_runs).into_vec();
        keep.sort_unstable();
        self.warnings.push(format!("budget exhausted: {n} partial runs subsampled to {}", self.cfg.max_runs));
        let mut slots: Vec<Option<Trace>> = runs.drain(..).map(Some).collect();
        keep.into_iter().map(|i| slots[i].take().expect("distinct indices")).collect()
    }

    fn exec(&mut self, p: &Program, runs: Vec<Trace>) -> Result<Vec<Trace>, SimError> {
        let out = match p {
            Program::Assign(pairs) => {
                let mut out = Vec::with_capacity(runs.len());
                for mut tr in runs {
                    let vals: Vec<f64> =
                        pairs.iter().map(|(_, t)| eval_term(tr.last(), self.env, t)).collect::<Result<_, _>>()?;
                    for ((v, _), x) in pairs.iter().zip(vals) {
                        let old = tr.last().get(v).copied();
                        tr.last_mut().insert(v.clone(), x);
                        if self.cfg.mode_vars.contains(v) && old != Some(x) {
                            tr.log(EventKind::ModeSwitch, format!("{v} := {x}"));
                        }
                    }
                    out.push(tr);
                }
                out
            }
            Program::Havoc(v) => {
                let &(lo, hi) = self.cfg.havoc_ranges.get(v).ok_or_else(|| SimError::NoHavocRange(v.clone()))?;
                let mut out = Vec::new();
                for tr in runs {
                    for _ in 0..self.cfg.havoc_samples {
                        let x = if hi > lo { self.rng.gen_range(lo..=hi) } else { lo };
                        let mut t2 = tr.clone();
                        t2.last_mut().insert(v.clone(), x);
                        t2.log(EventKind::HavocSample, format!("{v} = {x}"));
                        out.push(t2);
                    }
                }
                out
            }
            Program::Test(f) => {
                let mut out = Vec::new();
                for tr in runs {
                    if eval_formula(tr.last(), self.env, f)? {
                        out.push(tr);
                    }
                }
                out
            }
            Program::Ode(ode) => {
                let mut out = Vec::new();
                for tr in runs {
                    out.extend(self.flow(ode, tr)?);
                }
                out
            }
            Program::Choice(a, b) => {
                let mut left = self.exec(a, runs.clone())?;
                left.extend(self.exec(b, runs)?);
                left
            }
            Program::Seq(a, b) => {
                let mid = self.exec(a, runs)?;
                self.exec(b, mid)?
            }
            Program::Star(body) => {
                let mut all = runs.clone();
                let mut cur = runs;
                for _ in 0..self.cfg.star_bound {
                    cur = self.exec(body, cur)?;
                    if cur.is_empty() {
                        break;
                    }
                    all.extend(cur.iter().cloned());
                    all = self.cap(all);
                }
                all
            }
        };
        Ok(self.cap(out))
    }

    /// Every prefix of the flow is a run: one continuation per sample point.
    fn flow(&mut self, ode: &Ode, tr: Trace) -> Result<Vec<Trace>, SimError> {
        if !eval_formula(tr.last(), self.env, &ode.domain)? {
            return Ok(Vec::new());
        }
        let seg = integrate_ode(&ode.eqs, tr.last(), &ode.domain, self.env, self.cfg)?;
        let t0 = tr.end_time();
        let mut out = Vec::with_capacity(seg.samples.len());
        let mut acc = tr;
        out.push(acc.clone());
        for (t, s) in seg.samples.iter().skip(1) {
            acc.samples.push((t0 + t, s.clone()));
            out.push(acc.clone());
        }
        if let Some(last) = out.last_mut() {
            for e in seg.events {
                last.events.push(Event { t: t0 + e.t, ..e });
            }
        }
        Ok(out)
    }
}

/// Samples runs of `alpha` from `x0`; the result holds one trace per run endpoint.
pub fn sample_runs(alpha: &Program, x0: &State, env: &Environment, cfg: &SimConfig) -> Result<RunSet, SimError> {
    cfg.validate()?;
    let mut ex = Explorer { env, cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed), warnings: Vec::new() };
    let traces = ex.exec(alpha, vec![Trace::start(x0.clone())])?;
    Ok(RunSet { traces, warnings: ex.warnings })
}
