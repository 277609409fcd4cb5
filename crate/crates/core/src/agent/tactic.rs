use std::fmt;
use std::sync::Arc;

use super::BeliefState;
use crate::world::Command;

pub type Guard = Arc<dyn Fn(&BeliefState) -> bool + Send + Sync>;
pub type Action = Arc<dyn Fn(&BeliefState) -> Command + Send + Sync>;

/// A guarded action. The action is only consulted when the guard holds.
#[derive(Clone)]
pub struct Primitive {
    pub name: String,
    pub guard: Guard,
    pub action: Action,
}

impl fmt::Debug for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Primitive").field(&self.name).finish()
    }
}

/// Tactic tree: guarded primitives combined with ordered fallback.
#[derive(Debug, Clone)]
pub enum Tactic {
    Primitive(Primitive),
    FirstOf(Vec<Tactic>),
    Abort,
}

/// A selectable leaf of a flattened tactic.
#[derive(Debug, Clone, Copy)]
pub enum Leaf<'a> {
    Primitive(&'a Primitive),
    Abort,
}

impl Tactic {
    /// Leaves in fallback order. Nested `FirstOf` nodes flatten because
    /// trying a child's children in order and then the next sibling is the
    /// same as scanning the depth-first leaf sequence.
    pub fn leaves(&self) -> Vec<Leaf<'_>> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<Leaf<'a>>) {
        match self {
            Tactic::Primitive(p) => out.push(Leaf::Primitive(p)),
            Tactic::Abort => out.push(Leaf::Abort),
            Tactic::FirstOf(children) => children.iter().for_each(|c| c.collect(out)),
        }
    }
}

pub fn primitive(
    name: impl Into<String>,
    guard: impl Fn(&BeliefState) -> bool + Send + Sync + 'static,
    action: impl Fn(&BeliefState) -> Command + Send + Sync + 'static,
) -> Tactic {
    Tactic::Primitive(Primitive {
        name: name.into(),
        guard: Arc::new(guard),
        action: Arc::new(action),
    })
}

/// Ordered fallback over `children`.
///
/// # Panics
///
/// If `children` is empty.
pub fn first_of(children: Vec<Tactic>) -> Tactic {
    assert!(!children.is_empty(), "FirstOf needs at least one child");
    Tactic::FirstOf(children)
}

pub fn abort() -> Tactic {
    Tactic::Abort
}
