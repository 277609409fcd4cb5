use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{BeliefState, Tactic};

pub type Predicate = Arc<dyn Fn(&BeliefState) -> bool + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GoalStatus {
    InProgress,
    Solved,
    Failed,
}

/// A predicate over the belief state paired with the tactic meant to make
/// it true.
#[derive(Clone)]
pub struct GoalNode {
    pub name: String,
    pub predicate: Predicate,
    pub tactic: Tactic,
    status: GoalStatus,
    /// Leaf to try first next cycle, after the previous cycle's choice was
    /// not applicable.
    pub(crate) resume_from: Option<usize>,
}

impl fmt::Debug for GoalNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GoalNode")
            .field("name", &self.name)
            .field("status", &self.status)
            .finish()
    }
}

impl GoalNode {
    pub fn status(&self) -> GoalStatus {
        self.status
    }

    /// Settles the goal. Settled goals never change again.
    pub(crate) fn settle(&mut self, status: GoalStatus) {
        if self.status == GoalStatus::InProgress {
            self.status = status;
        }
    }

    pub fn lift(self) -> GoalStructure {
        GoalStructure::Leaf(self)
    }
}

/// # Panics
///
/// If `name` is empty.
pub fn build_goal(
    name: impl Into<String>,
    predicate: impl Fn(&BeliefState) -> bool + Send + Sync + 'static,
    tactic: Tactic,
) -> GoalNode {
    let name = name.into();
    assert!(!name.is_empty(), "goal name must not be empty");
    GoalNode {
        name,
        predicate: Arc::new(predicate),
        tactic,
        status: GoalStatus::InProgress,
        resume_from: None,
    }
}

/// Builder spelling: `goal(name).to_solve(p).with_tactic(t).lift()`.
pub fn goal(name: impl Into<String>) -> GoalBuilder {
    GoalBuilder {
        name: name.into(),
        predicate: None,
    }
}

pub struct GoalBuilder {
    name: String,
    predicate: Option<Predicate>,
}

impl GoalBuilder {
    pub fn to_solve(mut self, p: impl Fn(&BeliefState) -> bool + Send + Sync + 'static) -> Self {
        self.predicate = Some(Arc::new(p));
        self
    }

    pub fn with_tactic(self, tactic: Tactic) -> GoalNode {
        assert!(!self.name.is_empty(), "goal name must not be empty");
        GoalNode {
            name: self.name,
            predicate: self.predicate.unwrap_or_else(|| Arc::new(|_: &BeliefState| false)),
            tactic,
            status: GoalStatus::InProgress,
            resume_from: None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum GoalStructure {
    Leaf(GoalNode),
    Seq(Vec<GoalStructure>),
}

/// # Panics
///
/// If `children` is empty.
pub fn seq(children: Vec<GoalStructure>) -> GoalStructure {
    assert!(!children.is_empty(), "SEQ needs at least one child");
    GoalStructure::Seq(children)
}

impl GoalStructure {
    pub fn status(&self) -> GoalStatus {
        match self {
            GoalStructure::Leaf(g) => g.status,
            GoalStructure::Seq(children) => {
                for c in children {
                    match c.status() {
                        GoalStatus::Solved => continue,
                        other => return other,
                    }
                }
                GoalStatus::Solved
            }
        }
    }

    /// The goal currently being pursued: the leftmost unsettled leaf, or
    /// `None` once the structure is solved or failed.
    pub fn active_mut(&mut self) -> Option<&mut GoalNode> {
        match self {
            GoalStructure::Leaf(g) => (g.status == GoalStatus::InProgress).then_some(g),
            GoalStructure::Seq(children) => {
                for c in children {
                    match c.status() {
                        GoalStatus::Solved => continue,
                        GoalStatus::Failed => return None,
                        GoalStatus::InProgress => return c.active_mut(),
                    }
                }
                None
            }
        }
    }

    /// Name of the first failed leaf, if any.
    pub fn failed_goal(&self) -> Option<&str> {
        match self {
            GoalStructure::Leaf(g) => (g.status == GoalStatus::Failed).then_some(g.name.as_str()),
            GoalStructure::Seq(children) => children.iter().find_map(|c| c.failed_goal()),
        }
    }

    pub fn leaves(&self) -> Vec<&GoalNode> {
        match self {
            GoalStructure::Leaf(g) => vec![g],
            GoalStructure::Seq(children) => children.iter().flat_map(|c| c.leaves()).collect(),
        }
    }
}
