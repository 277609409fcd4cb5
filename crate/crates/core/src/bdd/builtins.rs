//! The built-in step vocabulary.
//!
//! When steps that move the character run goal structures through the
//! agent; only fixed command scripts (waiting, the helmet) bypass it. Then
//! steps read the belief after one fresh observation.

use super::parser::Phase;
use super::runner::{StepContext, StepError};
use super::steps::{Arg, DuplicatePattern, StepRegistry};
use crate::agent::{abort, first_of, goal, primitive, seq, BeliefState, GoalStructure};
use crate::nav::{tactic_explore, tactic_interact_with, tactic_navigate_to, tactic_navigate_to_cell};
use crate::world::{Command, Entity, EntityKind, GridPos, Item};

type Outcome = Result<(), StepError>;

fn str_arg(args: &[Arg], i: usize) -> &str {
    args[i].as_str().expect("pattern guarantees a string")
}

fn count_arg(args: &[Arg], i: usize) -> Result<u32, StepError> {
    let v = args[i].as_int().expect("pattern guarantees an integer");
    u32::try_from(v).map_err(|_| StepError(format!("expected a non-negative count, got {v}")))
}

fn float_arg(args: &[Arg], i: usize) -> f64 {
    args[i].as_float().expect("pattern guarantees a number")
}

fn station_cell(ctx: &StepContext, name: &str) -> Result<Option<GridPos>, StepError> {
    Ok(ctx.belief()?.info.stations.get(name).copied())
}

fn navigate_near(id: &str) -> GoalStructure {
    let pid = id.to_string();
    goal(format!("navigate near {id}"))
        .to_solve(move |b| b.in_reach(&pid))
        .with_tactic(tactic_navigate_to(id))
        .lift()
}

fn navigate_to(ctx: &StepContext, target: &str) -> Result<GoalStructure, StepError> {
    Ok(match station_cell(ctx, target)? {
        Some(cell) => goal(format!("navigate to station {target}"))
            .to_solve(move |b| b.pos() == cell)
            .with_tactic(tactic_navigate_to_cell(cell))
            .lift(),
        None => navigate_near(target),
    })
}

fn interact_with(id: &str) -> GoalStructure {
    let pid = id.to_string();
    seq(vec![
        navigate_near(id),
        goal(format!("interact with {id}"))
            .to_solve(move |b| b.interacted_with(&pid))
            .with_tactic(tactic_interact_with(id))
            .lift(),
    ])
}

fn equip(item: Item) -> GoalStructure {
    goal(format!("equip {}", item.name()))
        .to_solve(move |b| b.self_state.equipped == Some(item))
        .with_tactic(first_of(vec![
            primitive("equip", |_| true, move |_| Command::equip(item)),
            abort(),
        ]))
        .lift()
}

fn block_integrity(e: &Entity) -> Option<(u32, u32)> {
    match e.kind {
        EntityKind::Block {
            integrity,
            max_integrity,
            ..
        } => Some((integrity, max_integrity)),
        _ => None,
    }
}

fn use_tool(
    id: &str,
    item: Item,
    name: String,
    done: impl Fn(&Entity) -> bool + Send + Sync + 'static,
) -> GoalStructure {
    let (pid, gid, aid) = (id.to_string(), id.to_string(), id.to_string());
    seq(vec![
        navigate_near(id),
        goal(name)
            .to_solve(move |b| b.entity(&pid).is_some_and(&done))
            .with_tactic(first_of(vec![
                primitive(
                    item.name(),
                    move |b| b.self_state.equipped == Some(item) && b.in_reach(&gid),
                    move |_| Command::UseTool { entity_id: aid.clone() },
                ),
                abort(),
            ]))
            .lift(),
    ])
}

/// The medical entity named `target`, or standing on station `target`.
fn medical_at(b: &BeliefState, target: &str, station: Option<GridPos>) -> Option<String> {
    b.registry()
        .values()
        .map(|s| &s.entity)
        .filter(|e| e.alive && matches!(e.kind, EntityKind::Medical { .. }))
        .find(|e| match station {
            Some(cell) => e.pos == cell,
            None => e.id == target,
        })
        .map(|e| e.id.clone())
}

fn heal_at(ctx: &StepContext, target: &str) -> Result<GoalStructure, StepError> {
    let station = station_cell(ctx, target)?;
    let reach = match station {
        Some(_) => navigate_to(ctx, target)?,
        None => {
            let pid = target.to_string();
            goal(format!("reach {target}"))
                .to_solve(move |b| b.entity(&pid).is_some_and(|e| e.pos == b.pos()))
                .with_tactic(tactic_navigate_to(target))
                .lift()
        }
    };
    let (gt, at) = (target.to_string(), target.to_string());
    let heal = goal(format!("heal at {target}"))
        .to_solve(|b| b.self_state.health >= 100)
        .with_tactic(first_of(vec![
            primitive(
                "use station",
                move |b| medical_at(b, &gt, station).is_some_and(|id| b.entity(&id).is_some_and(|e| e.pos == b.pos())),
                move |b| Command::UseStation {
                    entity_id: medical_at(b, &at, station).unwrap_or_default(),
                },
            ),
            abort(),
        ]))
        .lift();
    Ok(seq(vec![reach, heal]))
}

fn oracle_entity(ctx: &mut StepContext, id: &str) -> Result<Entity, StepError> {
    ctx.entity(id)?
        .ok_or_else(|| StepError(format!("entity {id:?} has not been observed")))
}

fn door_state(ctx: &mut StepContext, id: &str, want_open: bool) -> Outcome {
    let e = oracle_entity(ctx, id)?;
    match e.is_door_open() {
        None => Err(StepError(format!("entity {id:?} is a {}, not a door", e.kind.name()))),
        Some(open) if open == want_open => Ok(()),
        Some(open) => Err(StepError(format!(
            "door {id:?} is {}",
            if open { "open" } else { "closed" }
        ))),
    }
}

fn at_least(what: &str, actual: u32, expected: u32) -> Outcome {
    if actual >= expected {
        Ok(())
    } else {
        Err(StepError(format!("{what} is {actual}, expected at least {expected}")))
    }
}

/// The step that loads a level; its argument names the level file.
pub const LOAD_LEVEL_STEP: &str = "the level {string} is loaded";

/// Registers the built-in vocabulary. Fails if any pattern is already
/// present.
pub fn register_builtin_steps(r: &mut StepRegistry) -> Result<(), DuplicatePattern> {
    use Phase::{Given, Then, When};

    r.register(Given, LOAD_LEVEL_STEP, |ctx, a| ctx.load_level(str_arg(a, 0)))?;
    r.register(Given, "the character is spawned at station {string}", |ctx, a| {
        ctx.spawn(str_arg(a, 0))
    })?;
    r.register(Given, "the character's inventory is empty", |ctx, _| {
        let c = ctx.character()?;
        match c.inventory.iter().find(|(_, n)| **n > 0) {
            None => Ok(()),
            Some((name, n)) => Err(StepError(format!("inventory holds {n} {name:?}"))),
        }
    })?;

    r.register(When, "the character navigates to {string}", |ctx, a| {
        let g = navigate_to(ctx, str_arg(a, 0))?;
        ctx.run_goals(g)
    })?;
    r.register(When, "the character interacts with {string}", |ctx, a| {
        ctx.run_goals(interact_with(str_arg(a, 0)))
    })?;
    r.register(When, "the character equips {string}", |ctx, a| {
        let name = str_arg(a, 0);
        let item = Item::parse(name).ok_or_else(|| StepError(format!("unknown item {name:?}")))?;
        ctx.run_goals(equip(item))
    })?;
    r.register(When, "the character grinds {string} until destroyed", |ctx, a| {
        let id = str_arg(a, 0);
        ctx.run_goals(use_tool(
            id,
            Item::Grinder,
            format!("grind {id} until destroyed"),
            |e| !e.alive,
        ))
    })?;
    r.register(When, "the character welds {string} until complete", |ctx, a| {
        let id = str_arg(a, 0);
        ctx.run_goals(use_tool(id, Item::Welder, format!("weld {id} until complete"), |e| {
            e.alive && block_integrity(e).is_some_and(|(i, max)| i == max)
        }))
    })?;
    r.register(When, "the character removes the helmet for {int} ticks", |ctx, a| {
        let ticks = count_arg(a, 0)?;
        if ticks == 0 {
            return Ok(());
        }
        let name = format!("helmet off for {ticks} ticks");
        ctx.script(&name, Command::SetHelmet { on: false })?;
        for _ in 1..ticks {
            ctx.script(&name, Command::Noop)?;
        }
        ctx.script(&name, Command::SetHelmet { on: true })?;
        Ok(())
    })?;
    r.register(
        When,
        "the character uses station {string} until health is full",
        |ctx, a| {
            let g = heal_at(ctx, str_arg(a, 0))?;
            ctx.run_goals(g)
        },
    )?;
    r.register(When, "the character explores until {string} is discovered", |ctx, a| {
        let id = str_arg(a, 0).to_string();
        let g = goal(format!("discover {id}"))
            .to_solve(move |b| b.entity(&id).is_some())
            .with_tactic(first_of(vec![tactic_explore(), abort()]))
            .lift();
        ctx.run_goals(g)
    })?;
    r.register(When, "the character waits {int} ticks", |ctx, a| {
        let ticks = count_arg(a, 0)?;
        for _ in 0..ticks {
            ctx.script(&format!("wait {ticks} ticks"), Command::Noop)?;
        }
        Ok(())
    })?;

    r.register(Then, "entity {string} is open", |ctx, a| {
        door_state(ctx, str_arg(a, 0), true)
    })?;
    r.register(Then, "entity {string} is closed", |ctx, a| {
        door_state(ctx, str_arg(a, 0), false)
    })?;
    r.register(Then, "entity {string} does not exist", |ctx, a| {
        let id = str_arg(a, 0);
        match ctx.entity(id)? {
            Some(e) if e.alive => Err(StepError(format!("entity {id:?} exists at ({},{})", e.pos.x, e.pos.y))),
            _ => Ok(()),
        }
    })?;
    r.register(Then, "the inventory contains {int} {string}", |ctx, a| {
        let want = count_arg(a, 0)?;
        let name = str_arg(a, 1);
        let have = ctx.character()?.count(name);
        if have == want {
            Ok(())
        } else {
            Err(StepError(format!("inventory holds {have} {name:?}, expected {want}")))
        }
    })?;
    r.register(Then, "health is {int}", |ctx, a| {
        let want = count_arg(a, 0)?;
        let health = ctx.character()?.health;
        if health == want {
            Ok(())
        } else {
            Err(StepError(format!("health is {health}, expected {want}")))
        }
    })?;
    r.register(Then, "health is at least {int}", |ctx, a| {
        at_least("health", ctx.character()?.health, count_arg(a, 0)?)
    })?;
    r.register(Then, "oxygen is at least {int}", |ctx, a| {
        at_least("oxygen", ctx.character()?.oxygen, count_arg(a, 0)?)
    })?;
    r.register(Then, "the score is at least {int}", |ctx, a| {
        at_least("score", ctx.character()?.score, count_arg(a, 0)?)
    })?;
    r.register(Then, "the character is within {float} of {string}", |ctx, a| {
        let range = float_arg(a, 0);
        let target = str_arg(a, 1);
        let pos = ctx.character()?.pos;
        let at = match station_cell(ctx, target)? {
            Some(cell) => cell,
            None => oracle_entity(ctx, target)?.pos,
        };
        let d = pos.distance(at);
        if d <= range {
            Ok(())
        } else {
            Err(StepError(format!(
                "character is {d:.2} from {target:?}, expected at most {range}"
            )))
        }
    })?;
    Ok(())
}

impl StepRegistry {
    /// A registry holding exactly the built-in vocabulary.
    pub fn with_builtins() -> Self {
        let mut r = StepRegistry::new();
        register_builtin_steps(&mut r).expect("built-in patterns are distinct");
        r
    }
}
