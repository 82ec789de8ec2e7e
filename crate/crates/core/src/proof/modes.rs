//! Mode structure of a loop body and discrete reachability over it.

use std::collections::{BTreeMap, BTreeSet};

use crate::hp::{CmpOp, Formula, Model, Program, Term};

/// Value `c` when `f` has a conjunct `var = c` (either orientation).
pub(crate) fn mode_pin(f: &Formula, var: &str) -> Option<f64> {
    f.conjuncts().iter().find_map(|c| match c {
        Formula::Cmp(Term::Var(v), CmpOp::Eq, t) | Formula::Cmp(t, CmpOp::Eq, Term::Var(v)) if v == var => t.constant_value(),
        _ => None,
    })
}

/// Constant assigned to `var` anywhere in a branch, last write wins.
fn mode_target(items: &[&Program], var: &str) -> Option<f64> {
    items
        .iter()
        .filter_map(|p| match p {
            Program::Assign(pairs) => pairs.iter().find(|(v, _)| v == var).and_then(|(_, t)| t.constant_value()),
            _ => None,
        })
        .next_back()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeEdge {
    pub from: String,
    pub to: String,
    /// Leading test of the branch (mode pin included).
    pub guard: Formula,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeGraph {
    pub var: String,
    pub modes: Vec<String>,
    pub edges: Vec<ModeEdge>,
    pub bad: BTreeSet<String>,
}

impl ModeGraph {
    /// One edge per choice branch of the loop body `body`. A branch starts in
    /// the mode its leading test pins (every mode when unpinned) and ends in
    /// the mode it assigns (its start mode otherwise). Modes named `fail` are bad.
    pub fn from_body(model: &Model, var: &str, body: &Program) -> Option<ModeGraph> {
        let values = model.mode_vars.get(var)?;
        let name = |v: f64| values.iter().find(|(_, x)| *x == v).map(|(n, _)| n.clone());
        let modes: Vec<String> = values.iter().map(|(n, _)| n.clone()).collect();
        let mut edges = Vec::new();
        for branch in body.choice_branches() {
            let items = branch.seq_items();
            let guard = match items.first() {
                Some(Program::Test(f)) => f.clone(),
                _ => Formula::True,
            };
            let sources: Vec<String> = match mode_pin(&guard, var) {
                Some(v) => name(v).into_iter().collect(),
                None => modes.clone(),
            };
            let target = mode_target(&items, var).and_then(name);
            for from in sources {
                let to = target.clone().unwrap_or_else(|| from.clone());
                edges.push(ModeEdge { from, to, guard: guard.clone() });
            }
        }
        let bad = modes.iter().filter(|m| m.as_str() == "fail").cloned().collect();
        Some(ModeGraph { var: var.to_string(), modes, edges, bad })
    }

    pub fn successors(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = self.modes.iter().map(|m| (m.as_str(), BTreeSet::new())).collect();
        for e in &self.edges {
            out.entry(e.from.as_str()).or_default().insert(e.to.as_str());
        }
        out
    }
}

/// Modes not forward-reachable from `start`, ignoring guards.
pub fn discrete_unreachable(g: &ModeGraph, start: &[String]) -> BTreeSet<String> {
    let succ = g.successors();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut stack: Vec<&str> = start.iter().map(|s| s.as_str()).collect();
    while let Some(m) = stack.pop() {
        if seen.insert(m) {
            if let Some(next) = succ.get(m) {
                stack.extend(next.iter().copied());
            }
        }
    }
    g.modes.iter().filter(|m| !seen.contains(m.as_str())).cloned().collect()
}
