//! Goal-driven test agent.
//!
//! Each deliberation cycle observes, updates the [`BeliefState`], picks the
//! leftmost unsettled goal and either marks it solved (its predicate already
//! holds) or issues exactly one command chosen by the goal's tactic.
//!
//! Tactic selection scans the flattened leaves of a `FirstOf` in order and
//! takes the first primitive whose guard holds. If the resulting command is
//! not applicable or rejected, the scan continues from the next sibling in
//! the same cycle: reaching `Abort` fails the goal at once, while reaching
//! another enabled primitive makes it the first leaf tried next cycle. When
//! nothing is enabled and there is no `Abort`, the cycle spends a `Noop`.

mod belief;
mod goal;
mod tactic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use belief::{BeliefState, Sighting, StaleObservation};
pub use goal::{build_goal, goal, seq, GoalBuilder, GoalNode, GoalStatus, GoalStructure, Predicate};
pub use tactic::{abort, first_of, primitive, Action, Guard, Leaf, Primitive, Tactic};

use crate::env::{EnvError, EnvSession, LevelInfo};
use crate::world::{Command, CommandResult, Outcome};

pub const DEFAULT_MAX_CYCLES: u64 = 10_000;

/// Leaf name recorded when a cycle falls through to `Noop`.
pub const LEAF_NOOP: &str = "<noop>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub max_cycles: u64,
    pub cycles_used: u64,
}

impl Budget {
    pub fn new(max_cycles: u64) -> Self {
        Budget {
            max_cycles,
            cycles_used: 0,
        }
    }

    pub fn exhausted(&self) -> bool {
        self.cycles_used >= self.max_cycles
    }

    pub fn remaining(&self) -> u64 {
        self.max_cycles.saturating_sub(self.cycles_used)
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(DEFAULT_MAX_CYCLES)
    }
}

/// One issued command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// World tick at which the command was issued.
    pub tick: u64,
    pub goal: String,
    pub leaf: String,
    pub command: Command,
    pub result: CommandResult,
}

/// Encodes a trace as newline-delimited JSON.
pub fn export_trace(trace: &[TraceEntry]) -> String {
    trace
        .iter()
        .map(|t| serde_json::to_string(t).expect("trace entry serializes") + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentOutcome {
    AllSolved,
    GoalFailed(String),
    BudgetExhausted,
    CharacterDied,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentResult {
    pub outcome: AgentOutcome,
    pub cycles_used: u64,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CycleOutcome {
    /// The active goal's predicate held; no command was issued.
    Solved(String),
    /// A command was issued and the goal is still in progress.
    Acted,
    Failed(String),
    AllSolved,
    BudgetExhausted,
    CharacterDied,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Stale(#[from] StaleObservation),
    #[error("no level loaded")]
    NoLevel,
}

/// Builds a fresh belief from the session's current observation.
pub fn initial_belief(env: &mut EnvSession, info: LevelInfo) -> Result<BeliefState, AgentError> {
    Ok(BeliefState::new(info, env.observe()?))
}

fn enabled(leaf: Leaf<'_>, belief: &BeliefState) -> bool {
    match leaf {
        Leaf::Abort => true,
        Leaf::Primitive(p) => (p.guard)(belief),
    }
}

/// One observe, decide, act iteration.
pub fn deliberation_cycle(
    goals: &mut GoalStructure,
    env: &mut EnvSession,
    belief: &mut BeliefState,
    budget: &mut Budget,
    trace: &mut Vec<TraceEntry>,
) -> Result<CycleOutcome, AgentError> {
    belief.update(env.observe()?)?;
    if belief.latest.outcome == Some(Outcome::CharacterDied) {
        return Ok(CycleOutcome::CharacterDied);
    }
    let Some(goal) = goals.active_mut() else {
        return Ok(match goals.failed_goal() {
            Some(name) => CycleOutcome::Failed(name.to_string()),
            None => CycleOutcome::AllSolved,
        });
    };
    if budget.exhausted() {
        return Ok(CycleOutcome::BudgetExhausted);
    }
    budget.cycles_used += 1;

    if (goal.predicate)(belief) {
        goal.settle(GoalStatus::Solved);
        belief.last_action = None;
        return Ok(CycleOutcome::Solved(goal.name.clone()));
    }

    let leaves = goal.tactic.leaves();
    let start = goal
        .resume_from
        .take()
        .filter(|&i| i < leaves.len() && enabled(leaves[i], belief))
        .unwrap_or(0);
    let chosen = (start..leaves.len()).find(|&i| enabled(leaves[i], belief));

    let (leaf_name, command, index) = match chosen.map(|i| (i, leaves[i])) {
        Some((_, Leaf::Abort)) => {
            goal.settle(GoalStatus::Failed);
            belief.last_action = None;
            return Ok(CycleOutcome::Failed(goal.name.clone()));
        }
        Some((i, Leaf::Primitive(p))) => (p.name.clone(), (p.action)(belief), Some(i)),
        None => (LEAF_NOOP.to_string(), Command::Noop, None),
    };

    let executed = env.execute(&command)?;
    trace.push(TraceEntry {
        tick: belief.latest.tick,
        goal: goal.name.clone(),
        leaf: leaf_name,
        command: command.clone(),
        result: executed.result.clone(),
    });
    let failed = !executed.result.is_ok();
    belief.last_action = Some((command, executed.result));

    if let (true, Some(i)) = (failed, index) {
        match (i + 1..leaves.len())
            .find(|&j| enabled(leaves[j], belief))
            .map(|j| (j, leaves[j]))
        {
            Some((_, Leaf::Abort)) => {
                goal.settle(GoalStatus::Failed);
                belief.last_action = None;
                return Ok(CycleOutcome::Failed(goal.name.clone()));
            }
            Some((j, Leaf::Primitive(_))) => goal.resume_from = Some(j),
            None => {}
        }
    }
    Ok(CycleOutcome::Acted)
}

/// Runs cycles until the structure settles, the budget runs out or the
/// character dies. `belief` and `budget` carry over between calls.
pub fn run_agent_with(
    goals: &mut GoalStructure,
    env: &mut EnvSession,
    belief: &mut BeliefState,
    budget: &mut Budget,
) -> Result<AgentResult, AgentError> {
    let start = budget.cycles_used;
    let mut trace = Vec::new();
    belief.last_action = None;
    let outcome = loop {
        match deliberation_cycle(goals, env, belief, budget, &mut trace)? {
            CycleOutcome::Solved(_) | CycleOutcome::Acted => continue,
            CycleOutcome::AllSolved => break AgentOutcome::AllSolved,
            CycleOutcome::Failed(name) => break AgentOutcome::GoalFailed(name),
            CycleOutcome::BudgetExhausted => break AgentOutcome::BudgetExhausted,
            CycleOutcome::CharacterDied => break AgentOutcome::CharacterDied,
        }
    };
    Ok(AgentResult {
        outcome,
        cycles_used: budget.cycles_used - start,
        trace,
    })
}

/// Runs `goals` against the level currently loaded in `env`, starting from
/// an empty belief.
pub fn run_agent(
    goals: &mut GoalStructure,
    env: &mut EnvSession,
    budget: &mut Budget,
) -> Result<AgentResult, AgentError> {
    let info = env.level_info().cloned().ok_or(AgentError::NoLevel)?;
    let mut belief = initial_belief(env, info)?;
    run_agent_with(goals, env, &mut belief, budget)
}
