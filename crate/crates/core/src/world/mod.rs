//! Deterministic tick-based grid world.
//!
//! A [`WorldState`] owns a copy of every entity declared by its level. The
//! only way to advance time is [`WorldState::apply_command`], which applies
//! the command effect and then runs exactly one [`WorldState::environment_tick`].
//! Hazards resolve in a fixed order each tick: fire, monsters, oxygen, healing.

mod command;
mod entity;
mod grid;
mod level;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub use command::{Command, CommandResult};
pub use entity::{CharacterState, Components, Entity, EntityKind, Item, SpawnEvent, GAUGE_MAX};
pub use grid::{Cell, Dir, Grid, GridPos, MAX_CELLS};
pub use level::{
    parse_level, LevelDefinition, LevelError, LevelParams, DEFAULT_MAX_INTEGRITY, DEFAULT_MONSTER_AGGRO,
    DEFAULT_MONSTER_DAMAGE, DEFAULT_TANK_OXYGEN,
};

use crate::env::line_of_sight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    FlagReached,
    CharacterDied,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown station {0:?}")]
pub struct UnknownStation(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InteractError {
    #[error("unknown entity {0:?}")]
    Unknown(String),
    #[error("entity {0:?} is dead")]
    Dead(String),
    #[error("out of range")]
    OutOfRange,
    #[error("no line of sight")]
    NoLineOfSight,
    #[error("entity {0:?} is not interactable")]
    NotInteractable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolError {
    #[error("nothing equipped")]
    NothingEquipped,
    #[error("entity {0:?} is not a block")]
    WrongTool(String),
    #[error("InsufficientComponents: missing {0}")]
    InsufficientComponents(String),
    #[error("unknown entity {0:?}")]
    Unknown(String),
    #[error("entity {0:?} is dead")]
    Dead(String),
    #[error("out of range")]
    OutOfRange,
    #[error("no line of sight")]
    NoLineOfSight,
    #[error("cell is occupied by the character")]
    Occupied,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InteractionOutcome {
    ButtonPressed {
        toggled: Vec<(String, bool)>,
        spawned: Option<String>,
    },
    FlagReached,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToolOutcome {
    Ground { integrity: u32 },
    Destroyed { yielded: Components },
    Welded { integrity: u32 },
    Complete,
}

fn serialize_level_name<S: Serializer>(level: &Arc<LevelDefinition>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&level.name)
}

/// The full mutable game state.
#[derive(Debug, Clone, Serialize)]
pub struct WorldState {
    #[serde(serialize_with = "serialize_level_name")]
    level: Arc<LevelDefinition>,
    /// Run seed. The rules are fully deterministic; the seed is carried so
    /// that serialized states identify the run they came from.
    pub seed: u64,
    pub tick: u64,
    pub entities: Vec<Entity>,
    /// Monsters waiting for a button's spawn event.
    pub dormant: Vec<Entity>,
    pub character: CharacterState,
    pub finished: bool,
    pub outcome: Option<Outcome>,
    #[serde(skip)]
    using_station: Option<String>,
}

impl WorldState {
    pub fn new(level: LevelDefinition, seed: u64) -> Self {
        Self::from_shared(Arc::new(level), seed)
    }

    pub fn from_shared(level: Arc<LevelDefinition>, seed: u64) -> Self {
        let dormant_ids = level.dormant_ids();
        let (dormant, entities): (Vec<_>, Vec<_>) = level
            .entities
            .iter()
            .cloned()
            .partition(|e| dormant_ids.contains(e.id.as_str()));
        let dormant = dormant
            .into_iter()
            .map(|mut e| {
                e.alive = false;
                e
            })
            .collect();
        WorldState {
            character: CharacterState::spawned(level.spawn),
            level,
            seed,
            tick: 0,
            entities,
            dormant,
            finished: false,
            outcome: None,
            using_station: None,
        }
    }

    /// Parses `text` and builds the tick-0 state.
    pub fn load(text: &str, seed: u64) -> Result<Self, LevelError> {
        Ok(Self::new(parse_level(text)?, seed))
    }

    pub fn level(&self) -> &LevelDefinition {
        &self.level
    }

    pub fn shared_level(&self) -> Arc<LevelDefinition> {
        Arc::clone(&self.level)
    }

    pub fn grid(&self) -> &Grid {
        &self.level.grid
    }

    pub fn params(&self) -> &LevelParams {
        &self.level.params
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    fn entity_index(&self, id: &str) -> Option<usize> {
        self.entities.iter().position(|e| e.id == id)
    }

    /// Canonical serialized form used for determinism checks.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("world state serializes")
    }

    pub fn spawn_at_station(&mut self, station: &str) -> Result<(), UnknownStation> {
        let pos = *self
            .level
            .stations
            .get(station)
            .ok_or_else(|| UnknownStation(station.to_string()))?;
        self.character = CharacterState::spawned(pos);
        Ok(())
    }

    /// Whether the character could walk into `p`.
    pub fn is_passable(&self, p: GridPos) -> bool {
        self.grid().is_floor(p) && !self.entities.iter().any(|e| e.pos == p && e.obstructs())
    }

    fn reach_check(&self, target: GridPos) -> Result<(), InteractError> {
        let from = self.character.pos;
        if from.distance(target) > self.params().interaction_range {
            return Err(InteractError::OutOfRange);
        }
        if !line_of_sight(self.grid(), from, target) {
            return Err(InteractError::NoLineOfSight);
        }
        Ok(())
    }

    fn live_index(&self, id: &str) -> Result<usize, InteractError> {
        let idx = self
            .entity_index(id)
            .ok_or_else(|| InteractError::Unknown(id.to_string()))?;
        if !self.entities[idx].alive {
            return Err(InteractError::Dead(id.to_string()));
        }
        Ok(idx)
    }

    /// Applies one command and advances exactly one tick. A finished world
    /// rejects every command without ticking.
    pub fn apply_command(&mut self, cmd: &Command) -> CommandResult {
        if self.finished {
            return CommandResult::Rejected("world is finished".to_string());
        }
        let result = self.command_effect(cmd);
        self.environment_tick();
        result
    }

    fn command_effect(&mut self, cmd: &Command) -> CommandResult {
        use CommandResult::{NotApplicable, Ok as Done, Rejected};
        match cmd {
            Command::Move { dir } => {
                let next = self.character.pos.step(*dir);
                if self.is_passable(next) {
                    self.character.pos = next;
                    Done
                } else {
                    NotApplicable("blocked".to_string())
                }
            }
            Command::AimAt { entity_id } => match self.live_index(entity_id) {
                Err(e) => Rejected(e.to_string()),
                Ok(idx) => {
                    if line_of_sight(self.grid(), self.character.pos, self.entities[idx].pos) {
                        self.character.aim = Some(entity_id.clone());
                        Done
                    } else {
                        NotApplicable(InteractError::NoLineOfSight.to_string())
                    }
                }
            },
            Command::Interact { entity_id } => match self.resolve_interaction(entity_id) {
                Ok(_) => Done,
                Err(e @ (InteractError::Unknown(_) | InteractError::Dead(_))) => Rejected(e.to_string()),
                Err(e) => NotApplicable(e.to_string()),
            },
            Command::Equip { item } => match Item::parse(item) {
                Some(item) => {
                    self.character.equipped = Some(item);
                    Done
                }
                None => Rejected(format!("unknown item {item:?}")),
            },
            Command::Unequip => {
                if self.character.equipped.take().is_some() {
                    Done
                } else {
                    NotApplicable(ToolError::NothingEquipped.to_string())
                }
            }
            Command::UseTool { entity_id } => match self.tool_tick(entity_id) {
                Ok(_) => Done,
                Err(e @ (ToolError::Unknown(_) | ToolError::Dead(_) | ToolError::WrongTool(_))) => {
                    Rejected(e.to_string())
                }
                Err(e) => NotApplicable(e.to_string()),
            },
            Command::SetHelmet { on } => {
                self.character.helmet_on = *on;
                Done
            }
            Command::UseStation { entity_id } => match self.live_index(entity_id) {
                Err(e) => Rejected(e.to_string()),
                Ok(idx) => {
                    let e = &self.entities[idx];
                    if !matches!(e.kind, EntityKind::Medical { .. }) {
                        Rejected(format!("entity {entity_id:?} is not a station"))
                    } else if e.pos != self.character.pos {
                        NotApplicable("not standing on station".to_string())
                    } else {
                        self.using_station = Some(entity_id.clone());
                        Done
                    }
                }
            },
            Command::Noop => Done,
        }
    }

    /// Resolves an interaction without advancing time.
    pub fn resolve_interaction(&mut self, entity_id: &str) -> Result<InteractionOutcome, InteractError> {
        let idx = self.live_index(entity_id)?;
        self.reach_check(self.entities[idx].pos)?;
        match self.entities[idx].kind.clone() {
            EntityKind::Button { links, score, spawns } => {
                let mut toggled = Vec::with_capacity(links.len());
                for link in &links {
                    if let Some(door) = self.entities.iter_mut().find(|e| &e.id == link) {
                        if let EntityKind::Door { open } = &mut door.kind {
                            *open = !*open;
                            toggled.push((link.clone(), *open));
                        }
                    }
                }
                self.character.score += score;
                let spawned = spawns.and_then(|ev| self.spawn_monster(&ev));
                Ok(InteractionOutcome::ButtonPressed { toggled, spawned })
            }
            EntityKind::Flag { score } => {
                self.character.score += score;
                self.finished = true;
                self.outcome = Some(Outcome::FlagReached);
                Ok(InteractionOutcome::FlagReached)
            }
            _ => Err(InteractError::NotInteractable(entity_id.to_string())),
        }
    }

    fn spawn_monster(&mut self, ev: &SpawnEvent) -> Option<String> {
        let idx = self.dormant.iter().position(|e| e.id == ev.monster)?;
        let mut monster = self.dormant.remove(idx);
        if let Some(at) = ev.at {
            monster.pos = at;
        }
        monster.alive = true;
        self.entities.push(monster);
        Some(ev.monster.clone())
    }

    /// One tick of the equipped tool against a block, without advancing time.
    pub fn tool_tick(&mut self, entity_id: &str) -> Result<ToolOutcome, ToolError> {
        let tool = self.character.equipped.ok_or(ToolError::NothingEquipped)?;
        let idx = self
            .entity_index(entity_id)
            .ok_or_else(|| ToolError::Unknown(entity_id.to_string()))?;
        if !matches!(self.entities[idx].kind, EntityKind::Block { .. }) {
            return Err(ToolError::WrongTool(entity_id.to_string()));
        }
        // Welding can rebuild a destroyed block; grinding needs a live one.
        if tool == Item::Grinder && !self.entities[idx].alive {
            return Err(ToolError::Dead(entity_id.to_string()));
        }
        let pos = self.entities[idx].pos;
        self.reach_check(pos).map_err(|e| match e {
            InteractError::NoLineOfSight => ToolError::NoLineOfSight,
            _ => ToolError::OutOfRange,
        })?;
        let grind_rate = self.params().grind_rate;
        let weld_rate = self.params().weld_rate;
        let character_pos = self.character.pos;
        let block = &mut self.entities[idx];
        let EntityKind::Block {
            integrity,
            max_integrity,
            component_yield,
            build_cost,
            ..
        } = &mut block.kind
        else {
            unreachable!("checked above")
        };
        match tool {
            Item::Grinder => {
                *integrity = integrity.saturating_sub(grind_rate);
                if *integrity > 0 {
                    return Ok(ToolOutcome::Ground { integrity: *integrity });
                }
                block.alive = false;
                let yielded = component_yield.clone();
                for (name, n) in &yielded {
                    *self.character.inventory.entry(name.clone()).or_default() += n;
                }
                Ok(ToolOutcome::Destroyed { yielded })
            }
            Item::Welder => {
                if *integrity >= *max_integrity {
                    return Ok(ToolOutcome::Complete);
                }
                if !block.alive && pos == character_pos {
                    return Err(ToolError::Occupied);
                }
                let next = (*integrity + weld_rate).min(*max_integrity);
                let due = weld_cost(build_cost, *max_integrity, *integrity, next);
                let inventory = &mut self.character.inventory;
                if let Some((name, _)) = due
                    .iter()
                    .find(|(name, n)| inventory.get(*name).copied().unwrap_or(0) < **n)
                {
                    return Err(ToolError::InsufficientComponents(name.clone()));
                }
                for (name, n) in &due {
                    if let Some(have) = inventory.get_mut(name) {
                        *have -= n;
                        if *have == 0 {
                            inventory.remove(name);
                        }
                    }
                }
                *integrity = next;
                block.alive = true;
                if next == *max_integrity {
                    Ok(ToolOutcome::Complete)
                } else {
                    Ok(ToolOutcome::Welded { integrity: next })
                }
            }
        }
    }

    /// Runs the hazard rules for one tick and increments the tick counter.
    pub fn environment_tick(&mut self) {
        let using_station = self.using_station.take();
        self.tick += 1;
        if self.finished {
            return;
        }
        let pos = self.character.pos;

        let fire: u32 = self
            .entities
            .iter()
            .filter(|e| e.alive && e.pos == pos)
            .filter_map(|e| match e.kind {
                EntityKind::Fire { damage } => Some(damage),
                _ => None,
            })
            .sum();
        if fire > 0 {
            self.character.damage(fire);
            if self.check_death() {
                return;
            }
        }

        self.step_monsters();
        if self.check_death() {
            return;
        }

        if !self.character.helmet_on && !self.on_oxygen_station() {
            if self.character.oxygen == 0 {
                self.character.damage(self.params().suffocation_damage);
                if self.check_death() {
                    return;
                }
            } else {
                self.character.oxygen = self.character.oxygen.saturating_sub(self.params().oxygen_drain);
            }
        }

        if let Some(id) = using_station {
            if let Some(EntityKind::Medical {
                has_oxygen_tank,
                heal_per_tick,
                oxygen_per_tick,
            }) = self
                .entity(&id)
                .filter(|e| e.alive && e.pos == pos)
                .map(|e| e.kind.clone())
            {
                self.character.heal(heal_per_tick);
                if has_oxygen_tank {
                    self.character.add_oxygen(oxygen_per_tick);
                }
            }
        }
    }

    fn on_oxygen_station(&self) -> bool {
        self.entities.iter().any(|e| {
            e.alive
                && e.pos == self.character.pos
                && matches!(
                    e.kind,
                    EntityKind::Medical {
                        has_oxygen_tank: true,
                        ..
                    }
                )
        })
    }

    fn check_death(&mut self) -> bool {
        if self.character.health == 0 {
            self.finished = true;
            self.outcome = Some(Outcome::CharacterDied);
            true
        } else {
            false
        }
    }

    fn step_monsters(&mut self) {
        let target = self.character.pos;
        for i in 0..self.entities.len() {
            let EntityKind::Monster { damage, aggro_radius } = self.entities[i].kind else {
                continue;
            };
            if !self.entities[i].alive {
                continue;
            }
            let here = self.entities[i].pos;
            let dist = here.manhattan(target);
            if dist > 1 && here.distance(target) <= aggro_radius && line_of_sight(self.grid(), here, target) {
                let step = Dir::ALL
                    .into_iter()
                    .map(|d| here.step(d))
                    .find(|next| next.manhattan(target) < dist && *next != target && self.is_passable(*next));
                if let Some(next) = step {
                    self.entities[i].pos = next;
                }
            }
            if self.entities[i].pos.manhattan(target) <= 1 {
                self.character.damage(damage);
            }
        }
    }

    /// Current entity states keyed by id, for oracles and tests.
    pub fn entity_map(&self) -> BTreeMap<&str, &Entity> {
        self.entities.iter().map(|e| (e.id.as_str(), e)).collect()
    }
}

/// Components due when welding from `from` to `to` integrity. The cumulative
/// cost at integrity `i` is `ceil(cost * i / max)`, so a full rebuild costs
/// exactly `build_cost`.
pub fn weld_cost(build_cost: &Components, max: u32, from: u32, to: u32) -> Components {
    let at = |cost: u32, i: u32| -> u32 { (u64::from(cost) * u64::from(i)).div_ceil(u64::from(max)) as u32 };
    build_cost
        .iter()
        .map(|(name, &cost)| (name.clone(), at(cost, to) - at(cost, from)))
        .filter(|(_, n)| *n > 0)
        .collect()
}
