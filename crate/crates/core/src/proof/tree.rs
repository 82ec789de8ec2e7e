//! Proof trees and their JSON report form.

use serde::{Serialize, Serializer};

use crate::icp::IntervalBox;

use super::goal::Goal;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum Status {
    Open { reason: String },
    Closed,
    Failed { reason: String },
}

impl Status {
    pub fn open(reason: impl Into<String>) -> Status {
        Status::Open { reason: reason.into() }
    }

    pub fn failed(reason: impl Into<String>) -> Status {
        Status::Failed { reason: reason.into() }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, Status::Closed)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckStats {
    pub queries: usize,
    pub boxes: usize,
}

impl CheckStats {
    pub fn absorb(&mut self, other: &CheckStats) {
        self.queries += other.queries;
        self.boxes += other.boxes;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub label: String,
    #[serde(rename = "box")]
    pub region: IntervalBox,
}

fn goal_text<S: Serializer>(g: &Goal, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&g.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProofNode {
    #[serde(serialize_with = "goal_text")]
    pub goal: Goal,
    pub rule: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub log: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
    pub stats: CheckStats,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ProofNode>,
}

impl ProofNode {
    pub fn leaf(goal: Goal) -> ProofNode {
        ProofNode {
            goal,
            rule: "open".into(),
            args: Vec::new(),
            status: Status::open("not yet attempted"),
            log: Vec::new(),
            witnesses: Vec::new(),
            stats: CheckStats::default(),
            children: Vec::new(),
        }
    }

    /// Records a rule application; the node's status follows its children.
    pub fn expand(&mut self, rule: &str, args: Vec<String>, children: Vec<ProofNode>) {
        self.rule = rule.into();
        self.args = args;
        self.children = children;
        self.refresh();
    }

    /// Recomputes the status of rule nodes bottom-up. Leaves keep the status
    /// their checks assigned.
    pub fn refresh(&mut self) {
        if self.children.is_empty() {
            return;
        }
        for c in &mut self.children {
            c.refresh();
        }
        let failed = self.children.iter().filter(|c| matches!(c.status, Status::Failed { .. })).count();
        let open = self.children.iter().filter(|c| matches!(c.status, Status::Open { .. })).count();
        self.status = if failed > 0 {
            Status::failed(format!("{failed} branch(es) failed"))
        } else if open > 0 {
            Status::open(format!("{open} branch(es) open"))
        } else {
            Status::Closed
        };
    }

    /// Totals over the subtree.
    pub fn total_stats(&self) -> CheckStats {
        let mut s = self.stats.clone();
        for c in &self.children {
            s.absorb(&c.total_stats());
        }
        s
    }

    /// Leaves that are not closed, depth-first.
    pub fn unclosed_leaves(&self) -> Vec<&ProofNode> {
        if self.children.is_empty() {
            return if self.status.is_closed() { Vec::new() } else { vec![self] };
        }
        self.children.iter().flat_map(|c| c.unclosed_leaves()).collect()
    }

    /// Depth-first search for the first node satisfying `pred`, mutably.
    pub fn find_mut(&mut self, pred: &dyn Fn(&ProofNode) -> bool) -> Option<&mut ProofNode> {
        if pred(self) {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(pred))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("proof tree serializes")
    }
}
