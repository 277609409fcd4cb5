use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::grid::GridPos;

/// Component name to count.
pub type Components = BTreeMap<String, u32>;

/// Button side effect: activates a dormant monster, optionally relocating it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnEvent {
    pub monster: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<GridPos>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Button {
        links: Vec<String>,
        score: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spawns: Option<SpawnEvent>,
    },
    Door {
        open: bool,
    },
    Fire {
        damage: u32,
    },
    Monster {
        damage: u32,
        aggro_radius: f64,
    },
    Flag {
        score: u32,
    },
    Block {
        block_type: String,
        integrity: u32,
        max_integrity: u32,
        #[serde(rename = "yield")]
        component_yield: Components,
        build_cost: Components,
    },
    Medical {
        has_oxygen_tank: bool,
        heal_per_tick: u32,
        oxygen_per_tick: u32,
    },
}

impl EntityKind {
    pub fn name(&self) -> &'static str {
        match self {
            EntityKind::Button { .. } => "button",
            EntityKind::Door { .. } => "door",
            EntityKind::Fire { .. } => "fire",
            EntityKind::Monster { .. } => "monster",
            EntityKind::Flag { .. } => "flag",
            EntityKind::Block { .. } => "block",
            EntityKind::Medical { .. } => "medical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub kind: EntityKind,
    pub pos: GridPos,
    pub alive: bool,
}

impl Entity {
    pub fn new(id: impl Into<String>, kind: EntityKind, pos: GridPos) -> Self {
        Entity {
            id: id.into(),
            kind,
            pos,
            alive: true,
        }
    }

    /// Whether this entity stops movement into its cell.
    pub fn obstructs(&self) -> bool {
        if !self.alive {
            return false;
        }
        match self.kind {
            EntityKind::Door { open } => !open,
            EntityKind::Block { .. } | EntityKind::Monster { .. } => true,
            _ => false,
        }
    }

    /// Whether a navigating agent should refuse to plan through this cell.
    pub fn is_hazard_or_obstacle(&self) -> bool {
        self.obstructs() || (self.alive && matches!(self.kind, EntityKind::Fire { .. }))
    }

    pub fn is_door_open(&self) -> Option<bool> {
        match self.kind {
            EntityKind::Door { open } => Some(open),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Item {
    Grinder,
    Welder,
}

impl Item {
    pub fn parse(s: &str) -> Option<Item> {
        match s {
            "grinder" => Some(Item::Grinder),
            "welder" => Some(Item::Welder),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Item::Grinder => "grinder",
            Item::Welder => "welder",
        }
    }
}

pub const GAUGE_MAX: u32 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterState {
    pub pos: GridPos,
    pub aim: Option<String>,
    pub health: u32,
    pub energy: u32,
    pub oxygen: u32,
    /// Stored but never changed by any game rule.
    pub hydrogen: u32,
    pub score: u32,
    pub helmet_on: bool,
    pub equipped: Option<Item>,
    pub inventory: Components,
}

impl CharacterState {
    pub fn spawned(pos: GridPos) -> Self {
        CharacterState {
            pos,
            aim: None,
            health: GAUGE_MAX,
            energy: GAUGE_MAX,
            oxygen: GAUGE_MAX,
            hydrogen: GAUGE_MAX,
            score: 0,
            helmet_on: true,
            equipped: None,
            inventory: Components::new(),
        }
    }

    pub fn count(&self, component: &str) -> u32 {
        self.inventory.get(component).copied().unwrap_or(0)
    }

    pub(crate) fn damage(&mut self, amount: u32) {
        self.health = self.health.saturating_sub(amount);
    }

    pub(crate) fn heal(&mut self, amount: u32) {
        self.health = (self.health + amount).min(GAUGE_MAX);
    }

    pub(crate) fn add_oxygen(&mut self, amount: u32) {
        self.oxygen = (self.oxygen + amount).min(GAUGE_MAX);
    }
}
