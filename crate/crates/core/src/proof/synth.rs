//! Per-mode certificate construction used by tactics and the command line.

use crate::certsynth::{
    halton, refine_loop, solve_lyapunov_linear, BarrierCertificate, LpSpec, QuadraticCertificate, RefineConfig, RefineFailure, RefineSuccess,
};
use crate::hp::{eval_term, Environment, Formula, Model, Ode, Program, State, Term};
use crate::icp::{differentiate, IcpConfig, Interval, IntervalBox};
use crate::linalg::{identity, solve, Matrix};
use crate::poly::{monomial_basis, Poly};
use crate::sim::{integrate_ode, SimConfig, Trace};

use super::modes::mode_pin;
use super::simplify::atom_bounds;
use super::ProofError;

/// The model's (first) mode variable.
pub fn mode_var(model: &Model) -> Option<&str> {
    model.mode_vars.keys().next().map(|s| s.as_str())
}

fn programs(model: &Model) -> Vec<&Program> {
    let mut out: Vec<&Program> = model.programs.iter().map(|(_, p)| p).collect();
    for (_, f) in &model.formulas {
        if let Formula::Imp(_, b) = f {
            if let Formula::Box(p, _) = &**b {
                out.push(p);
            }
        }
        if let Formula::Box(p, _) = f {
            out.push(p);
        }
    }
    out
}

/// Flow of a mode: the first choice branch (of any loop body in the model)
/// whose leading test pins the mode variable to `mode` and which evolves.
pub fn mode_flow(model: &Model, mode: &str) -> Result<(String, f64, Ode), ProofError> {
    let var = mode_var(model).ok_or_else(|| ProofError::Unknown { kind: "mode variable", name: mode.into() })?;
    let value = model.mode_value(mode).ok_or_else(|| ProofError::Unknown { kind: "mode", name: mode.into() })?;
    for p in programs(model) {
        let body = match p {
            Program::Star(b) => &**b,
            other => other,
        };
        for branch in body.choice_branches() {
            let items = branch.seq_items();
            let pinned = matches!(items.first(), Some(Program::Test(f)) if mode_pin(f, var) == Some(value));
            if let (true, Some(ode)) = (pinned, branch.odes().first()) {
                return Ok((var.to_string(), value, (*ode).clone()));
            }
        }
    }
    Err(ProofError::Unknown { kind: "flow for mode", name: mode.into() })
}

/// `A` of a linear homogeneous field `x' = A x`.
pub fn linear_matrix(ode: &Ode) -> Option<Matrix> {
    let vars = ode.vars();
    ode.eqs
        .iter()
        .map(|(_, rhs)| {
            let p = Poly::from_term(rhs)?;
            if p.degree() > 1 || p.coeff(&Vec::new()) != 0.0 || p.vars().iter().any(|v| !vars.contains(&v.as_str())) {
                return None;
            }
            Some(vars.iter().map(|x| p.coeff(&vec![(x.to_string(), 1)])).collect())
        })
        .collect()
}

/// Quadratic Lyapunov function of a linear mode with `Q = I`.
pub fn lyap_linear(model: &Model, mode: &str) -> Result<(Ode, QuadraticCertificate), ProofError> {
    let (_, _, ode) = mode_flow(model, mode)?;
    let a = linear_matrix(&ode).ok_or_else(|| ProofError::Nonlinear(mode.into()))?;
    let vars: Vec<String> = ode.vars().iter().map(|s| s.to_string()).collect();
    let q = solve_lyapunov_linear(&vars, &a, &identity(vars.len()))?;
    Ok((ode, q))
}

fn domain_box(model: &Model, vars: &[String]) -> Result<IntervalBox, ProofError> {
    vars.iter()
        .map(|v| {
            model
                .domain_of(v)
                .map(|(lo, hi)| (v.clone(), Interval::new(lo, hi)))
                .ok_or_else(|| ProofError::Unknown { kind: "domain for variable", name: v.clone() })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(IntervalBox::new)
}

/// Newton's method from the domain midpoint; `None` if it does not converge
/// inside the box.
pub fn equilibrium(field: &[(String, Term)], domain: &IntervalBox, fixed: &State) -> Option<Vec<f64>> {
    let vars: Vec<String> = field.iter().map(|(v, _)| v.clone()).collect();
    let jac: Vec<Vec<Term>> = field.iter().map(|(_, f)| vars.iter().map(|x| differentiate(f, x)).collect()).collect();
    let env = Environment::new();
    let mut x: Vec<f64> = vars.iter().map(|v| domain.get(v).map(|i| i.mid()).unwrap_or(0.0)).collect();
    for _ in 0..100 {
        let mut s = fixed.clone();
        s.extend(vars.iter().cloned().zip(x.iter().copied()));
        let fx: Vec<f64> = field.iter().map(|(_, f)| eval_term(&s, &env, f)).collect::<Result<_, _>>().ok()?;
        if fx.iter().all(|v| v.abs() < 1e-13) {
            break;
        }
        let j: Matrix = jac.iter().map(|row| row.iter().map(|t| eval_term(&s, &env, t)).collect::<Result<_, _>>()).collect::<Result<_, _>>().ok()?;
        let neg: Vec<f64> = fx.iter().map(|v| -v).collect();
        let dx = solve(&j, &neg)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
    }
    let inside = vars.iter().zip(&x).all(|(v, xi)| domain.get(v).is_none_or(|i| i.contains(*xi)));
    inside.then_some(x)
}

pub struct BarrierSynthesis {
    pub ode: Ode,
    pub spec: LpSpec,
    pub traces: usize,
    pub samples: usize,
    pub outcome: Result<RefineSuccess, RefineFailure>,
}

impl BarrierSynthesis {
    /// The verified certificate, or the last candidate when refinement failed.
    pub fn certificate(&self) -> Option<&BarrierCertificate> {
        match &self.outcome {
            Ok(s) => Some(&s.cert),
            Err(f) => f.last_candidate.as_ref(),
        }
    }
}

const SYNTH_TRACES: usize = 8;
const SYNTH_STATES: usize = 200;

/// LP/counterexample synthesis of a polynomial Lyapunov-type certificate for
/// a mode, expanded around its equilibrium, from about 200 simulated states.
pub fn synth_barrier(model: &Model, mode: &str, degree: u32, seed: u64, delta: f64, icp: IcpConfig) -> Result<BarrierSynthesis, ProofError> {
    let (_, _, ode) = mode_flow(model, mode)?;
    let vars: Vec<String> = ode.vars().iter().map(|s| s.to_string()).collect();
    // Samples and checks stay where the mode may flow: the declared domain cut
    // down by simple bounds in the evolution domain.
    let mut domain = domain_box(model, &vars)?;
    for (v, (lo, hi)) in atom_bounds(&ode.domain) {
        if let Some(iv) = domain.get(&v) {
            domain.set(&v, Interval::new(lo.max(iv.lo), hi.min(iv.hi)));
        }
    }
    let others: Vec<String> = ode.eqs.iter().flat_map(|(_, t)| t.state_vars()).filter(|v| !vars.contains(v)).collect();
    let fixed: State = domain_box(model, &others)?.midpoint();
    let center = equilibrium(&ode.eqs, &domain, &fixed).ok_or_else(|| ProofError::Unknown { kind: "equilibrium for mode", name: mode.into() })?;
    let cfg = SimConfig { h: 0.01, t_max: 1.0, ..Default::default() };
    let mut traces = Vec::new();
    for k in 0..SYNTH_TRACES {
        let mut x0 = fixed.clone();
        for (d, (v, iv)) in domain.vars.iter().zip(&domain.ivs).enumerate() {
            x0.insert(v.clone(), iv.lo + halton(k + 1 + seed as usize, d) * iv.width());
        }
        let full = integrate_ode(&ode.eqs, &x0, &ode.domain, &Environment::new(), &cfg).map_err(|e| ProofError::Io(e.to_string()))?;
        traces.push(full);
    }
    let total: usize = traces.iter().map(|t| t.samples.len()).sum();
    let stride = total.div_ceil(SYNTH_STATES).max(1);
    let traces: Vec<Trace> = traces
        .into_iter()
        .map(|t| Trace { samples: t.samples.into_iter().step_by(stride).collect(), events: t.events })
        .collect();
    let samples = traces.iter().map(|t| t.samples.len()).sum();
    let spec = LpSpec { vars: vars.clone(), basis: monomial_basis(&vars, 1, degree), field: ode.eqs.clone(), center, eps_pos: 1e-3, eps_dec: 1e-6, domain };
    let outcome = refine_loop(&traces, &spec, &RefineConfig { seed, delta, icp, ..Default::default() })?;
    Ok(BarrierSynthesis { ode, spec, traces: SYNTH_TRACES, samples, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp::parse_model;

    #[test]
    fn linear_and_nonlinear_modes() {
        let m = parse_model(
            "statevar x1, x2.\nmodevar M = {q1, q2}.\ndomain x1 in [-5, 5], x2 in [-5, 5].\n\
             body ::= {?(M = q1); {x1' = -(x2 + 1)*x1, x2' = x1^2}} ++ {?(M = q2); {x1' = -x1 + 4*x2, x2' = -0.25*x1 - x2}}.\n",
        )
        .unwrap();
        assert!(matches!(lyap_linear(&m, "q1"), Err(ProofError::Nonlinear(_))));
        let (_, q) = lyap_linear(&m, "q2").unwrap();
        assert!((q.p[0][0] - 0.3828125).abs() < 1e-9);
        assert!(matches!(mode_flow(&m, "q9"), Err(ProofError::Unknown { .. })));
    }

    #[test]
    fn newton_equilibrium() {
        let m = parse_model("statevar x, y.\n").unwrap();
        let f = |s: &str| crate::hp::parse_term(s, &m).unwrap();
        let field = vec![("x".to_string(), f("-(x - 1) + 0.1*(y - 2)^2")), ("y".to_string(), f("-(y - 2)"))];
        let dom = IntervalBox::from_bounds(&[("x", -3.0, 3.0), ("y", -3.0, 3.0)]);
        let e = equilibrium(&field, &dom, &State::new()).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 2.0).abs() < 1e-12);
    }
}
