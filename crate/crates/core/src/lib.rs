//! Agent-based game testing on a deterministic grid world.
//!
//! The crate is layered bottom-up:
//!
//! * [`world`]: the game itself, a tick-based grid with buttons, doors,
//!   hazards, blocks, tools and medical stations.
//! * [`env`]: observation with proximity and occlusion, the command set, and
//!   a newline-delimited JSON protocol for driving a world remotely.
//! * [`nav`]: the agent's discovered navigation graph, A* planning and
//!   frontier exploration.
//! * [`agent`]: belief state, tactics with ordered fallback, goal
//!   structures and the budgeted deliberation loop.
//! * [`bdd`]: Given-When-Then feature files bound to the above, plus
//!   JSON, xUnit XML and text reports.
//!
//! The guide in `book/` walks through each layer with runnable examples.

pub mod agent;
pub mod bdd;
pub mod env;
mod error;
pub mod fixtures;
pub mod nav;
pub mod world;

pub use error::ParseError;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/world.md")]
    mod world {}
    #[doc = include_str!("../../../book/src/observation.md")]
    mod observation {}
    #[doc = include_str!("../../../book/src/navigation.md")]
    mod navigation {}
    #[doc = include_str!("../../../book/src/tactics.md")]
    mod tactics {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
}
