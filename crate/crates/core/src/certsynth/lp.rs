//! Simulation-guided LP for polynomial Lyapunov candidates.
//!
//! Unknowns are basis coefficients `c` (split as `c⁺ − c⁻`, each in `[0, 1]`)
//! and a decrease margin `t`. Every sampled state `x` (with `y = x − center`)
//! contributes
//!   positivity: `Σ cₖ zₖ(y) ≥ ε_pos‖y‖²`
//!   decrease:   `Σ cₖ (∇zₖ(y)·f(x)) + t‖y‖² ≤ 0`
//! and the objective maximizes `t ∈ [ε_dec, 1]`.

use crate::hp::eval::{eval_term, Environment};
use crate::hp::{State, Term};
use crate::icp::IntervalBox;
use crate::poly::{monomial_degree, monomial_eval, Monomial};
use crate::sim::Trace;

use super::simplex::{self, LpResult, Sense};
use super::{BarrierCertificate, CertError};

#[derive(Clone, Debug)]
pub struct LpSpec {
    pub vars: Vec<String>,
    pub basis: Vec<Monomial>,
    pub field: Vec<(String, Term)>,
    pub center: Vec<f64>,
    pub eps_pos: f64,
    pub eps_dec: f64,
    pub domain: IntervalBox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Positivity,
    Decrease,
    Equilibrium,
    MarginFloor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Sample { trace: usize, index: usize },
    Counterexample { id: usize },
    /// Coefficient of the basis element is pinned to 0.
    Basis { index: usize },
    Config,
}

/// One row `coeffs·c + t_coeff·t  sense  rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub t_coeff: f64,
    pub sense: Sense,
    pub rhs: f64,
    pub kind: RowKind,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub rows: Vec<LpRow>,
}

#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub cert: BarrierCertificate,
    /// optimal decrease margin `t`
    pub margin: f64,
    /// no sample row constrains the coefficients
    pub degenerate: bool,
    pub problem: LpProblem,
}

fn shifted(spec: &LpSpec, x: &State) -> State {
    let mut y = x.clone();
    for (v, c) in spec.vars.iter().zip(&spec.center) {
        if let Some(val) = y.get_mut(v) {
            *val -= c;
        }
    }
    y
}

fn partial(m: &Monomial, var: &str, y: &State) -> f64 {
    let Some(&(_, e)) = m.iter().find(|(v, _)| v == var) else { return 0.0 };
    let rest: Monomial = m
        .iter()
        .filter_map(|(v, k)| if v == var { (e > 1).then(|| (v.clone(), e - 1)) } else { Some((v.clone(), *k)) })
        .collect();
    e as f64 * monomial_eval(&rest, y)
}

fn state_rows(spec: &LpSpec, x: &State, prov: Provenance) -> Option<[LpRow; 2]> {
    let env = Environment::new();
    let y = shifted(spec, x);
    let norm2: f64 = spec.vars.iter().map(|v| y[v] * y[v]).sum();
    let f: Vec<f64> = spec.field.iter().map(|(_, t)| eval_term(x, &env, t).ok()).collect::<Option<_>>()?;
    if f.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let pos: Vec<f64> = spec.basis.iter().map(|m| monomial_eval(m, &y)).collect();
    let dec: Vec<f64> = spec
        .basis
        .iter()
        .map(|m| spec.field.iter().zip(&f).map(|((v, _), fv)| partial(m, v, &y) * fv).sum())
        .collect();
    Some([
        LpRow { coeffs: pos, t_coeff: 0.0, sense: Sense::Ge, rhs: spec.eps_pos * norm2, kind: RowKind::Positivity, provenance: prov },
        LpRow { coeffs: dec, t_coeff: norm2, sense: Sense::Le, rhs: 0.0, kind: RowKind::Decrease, provenance: prov },
    ])
}

fn config_rows(spec: &LpSpec) -> Vec<LpRow> {
    let k = spec.basis.len();
    let mut rows = Vec::new();
    // a minimum at the center forces a vanishing gradient there
    for (i, m) in spec.basis.iter().enumerate() {
        if monomial_degree(m) == 1 {
            let mut coeffs = vec![0.0; k];
            coeffs[i] = 1.0;
            rows.push(LpRow { coeffs, t_coeff: 0.0, sense: Sense::Eq, rhs: 0.0, kind: RowKind::Equilibrium, provenance: Provenance::Basis { index: i } });
        }
    }
    rows.push(LpRow {
        coeffs: vec![0.0; k],
        t_coeff: 1.0,
        sense: Sense::Ge,
        rhs: spec.eps_dec,
        kind: RowKind::MarginFloor,
        provenance: Provenance::Config,
    });
    rows
}

/// Rebuilds a row from its provenance alone.
pub fn replay_row(
    spec: &LpSpec,
    kind: RowKind,
    prov: Provenance,
    traces: &[Trace],
    counterexamples: &[State],
) -> Option<LpRow> {
    let pick = |rows: [LpRow; 2]| rows.into_iter().find(|r| r.kind == kind);
    match prov {
        Provenance::Sample { trace, index } => pick(state_rows(spec, &traces.get(trace)?.samples.get(index)?.1, prov)?),
        Provenance::Counterexample { id } => pick(state_rows(spec, counterexamples.get(id)?, prov)?),
        Provenance::Basis { .. } | Provenance::Config => config_rows(spec).into_iter().find(|r| r.kind == kind && r.provenance == prov),
    }
}

pub fn build_problem(spec: &LpSpec, traces: &[Trace], counterexamples: &[State]) -> LpProblem {
    let mut rows = config_rows(spec);
    for (ti, tr) in traces.iter().enumerate() {
        for (si, (_, x)) in tr.samples.iter().enumerate() {
            rows.extend(state_rows(spec, x, Provenance::Sample { trace: ti, index: si }).into_iter().flatten());
        }
    }
    for (id, x) in counterexamples.iter().enumerate() {
        rows.extend(state_rows(spec, x, Provenance::Counterexample { id }).into_iter().flatten());
    }
    LpProblem { rows }
}

/// Solves for a candidate; coefficients are normalized to max magnitude 1.
pub fn lp_candidate(spec: &LpSpec, traces: &[Trace], counterexamples: &[State]) -> Result<LpOutcome, CertError> {
    if traces.is_empty() && counterexamples.is_empty() {
        return Err(CertError::Dimension("no sample states".into()));
    }
    let problem = build_problem(spec, traces, counterexamples);
    let k = spec.basis.len();
    // columns: c⁺ (k), c⁻ (k), t
    let mut lp_rows: Vec<(Vec<f64>, Sense, f64)> = problem
        .rows
        .iter()
        .map(|r| {
            let mut a: Vec<f64> = r.coeffs.clone();
            a.extend(r.coeffs.iter().map(|c| -c));
            a.push(r.t_coeff);
            (a, r.sense, r.rhs)
        })
        .collect();
    for j in 0..=2 * k {
        let mut a = vec![0.0; 2 * k + 1];
        a[j] = 1.0;
        lp_rows.push((a, Sense::Le, 1.0));
    }
    let mut obj = vec![0.0; 2 * k + 1];
    obj[2 * k] = 1.0;
    let x = match simplex::solve(&obj, &lp_rows) {
        LpResult::Optimal { x, .. } => x,
        LpResult::Infeasible => return Err(CertError::Infeasible),
        LpResult::Unbounded => unreachable!("all columns are bounded"),
    };
    let mut coeffs: Vec<f64> = (0..k).map(|i| x[i] - x[k + i]).collect();
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale > 0.0 {
        coeffs.iter_mut().for_each(|c| *c /= scale);
    }
    let degenerate = problem
        .rows
        .iter()
        .filter(|r| matches!(r.kind, RowKind::Positivity | RowKind::Decrease))
        .all(|r| r.coeffs.iter().all(|c| *c == 0.0));
    Ok(LpOutcome {
        cert: BarrierCertificate {
            vars: spec.vars.clone(),
            basis: spec.basis.clone(),
            coeffs,
            center: spec.center.clone(),
            domain: spec.domain.clone(),
            margin: spec.eps_pos,
        },
        margin: x[2 * k],
        degenerate,
        problem,
    })
}
