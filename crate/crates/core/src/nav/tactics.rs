//! Listing-style tactics built from the planner.
//!
//! Planning and following are fused into one primitive: the path is
//! replanned from the current belief every cycle and only its first step is
//! taken.

use std::sync::Arc;

use super::{plan_path, select_frontier};
use crate::agent::{abort, first_of, primitive, BeliefState, Tactic};
use crate::world::{Command, GridPos};

pub const LEAF_FOLLOW: &str = "navigatePathTo";
pub const LEAF_EXPLORE: &str = "explore";
pub const LEAF_INTERACT: &str = "interact";

type Locate = Arc<dyn Fn(&BeliefState) -> Option<GridPos> + Send + Sync>;

fn next_move(b: &BeliefState, target: GridPos) -> Option<Command> {
    let dir = plan_path(&b.nav, b.pos(), target)?.first_step()?;
    Some(Command::Move { dir })
}

fn follow(locate: Locate) -> Tactic {
    let guard = Arc::clone(&locate);
    primitive(
        LEAF_FOLLOW,
        move |b| guard(b).is_some_and(|t| next_move(b, t).is_some()),
        move |b| locate(b).and_then(|t| next_move(b, t)).unwrap_or(Command::Noop),
    )
}

/// One step toward the nearest reachable frontier cell.
pub fn tactic_explore() -> Tactic {
    primitive(
        LEAF_EXPLORE,
        |b| select_frontier(&b.nav, b.pos()).is_some_and(|f| next_move(b, f).is_some()),
        |b| {
            select_frontier(&b.nav, b.pos())
                .and_then(|f| next_move(b, f))
                .unwrap_or(Command::Noop)
        },
    )
}

/// `FIRSTof(navigatePathTo(id), explore(), ABORT())`. The path is planned
/// to the entity's last known cell.
pub fn tactic_navigate_to(entity_id: impl Into<String>) -> Tactic {
    let id = entity_id.into();
    navigate(Arc::new(move |b: &BeliefState| b.entity(&id).map(|e| e.pos)))
}

/// Same fallback chain toward a fixed cell, such as a station.
pub fn tactic_navigate_to_cell(cell: GridPos) -> Tactic {
    navigate(Arc::new(move |b: &BeliefState| {
        b.nav.known().contains(&cell).then_some(cell)
    }))
}

fn navigate(locate: Locate) -> Tactic {
    first_of(vec![follow(locate), tactic_explore(), abort()])
}

/// `FIRSTof(interact(id), ABORT())`.
pub fn tactic_interact_with(entity_id: impl Into<String>) -> Tactic {
    let id = entity_id.into();
    let guard_id = id.clone();
    first_of(vec![
        primitive(
            LEAF_INTERACT,
            move |b| b.in_reach(&guard_id),
            move |_| Command::Interact { entity_id: id.clone() },
        ),
        abort(),
    ])
}
