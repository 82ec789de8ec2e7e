//! The proof calculus: goals and rule applications, proof trees, automatic
//! discharge of leaves, and the tactic language driving it all.

mod check;
mod discharge;
mod flow;
mod goal;
mod modes;
mod reach;
mod simplify;
mod synth;
mod tactic;
mod tree;

use thiserror::Error;

use crate::certsynth::CertError;
use crate::hp::ParseError;
use crate::icp::IcpError;

pub use check::{Checker, Sat, Verdict};
pub use discharge::discharge;
pub use flow::{as_quadratic, discharge_flow, invariance, Attached, DecreaseCheck, LeafOutcome, Level};
pub use goal::{apply_barrier_rule, apply_fwd_inv_cut, apply_invariant_rule, relax_strict, Goal};
pub use modes::{discrete_unreachable, ModeEdge, ModeGraph};
pub use reach::{bounded_reach_envelope, ReachEnvelope};
pub use simplify::{apply_pins, fold, pins};
pub use synth::{equilibrium, linear_matrix, lyap_linear, mode_flow, mode_var, synth_barrier, BarrierSynthesis};
pub use tactic::{run_tactics, ProofRun, TacticConfig};
pub use tree::{CheckStats, ProofNode, Status, Witness};

#[derive(Debug, Error)]
pub enum ProofError {
    #[error("rule `{rule}` expects {expected}, got `{goal}`")]
    Shape { rule: String, expected: String, goal: String },
    #[error("tactic line {line}: {msg}")]
    Tactic { line: usize, msg: String },
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("mode `{0}` has a nonlinear flow; lyap-linear needs a linear homogeneous field")]
    Nonlinear(String),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Icp(#[from] IcpError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("derivative of `{0}` is unbounded on the domain")]
    Unbounded(String),
    #[error("{0}")]
    Io(String),
}
