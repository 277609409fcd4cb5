use std::fmt;

use serde::{Deserialize, Serialize};

use super::entity::Item;
use super::grid::Dir;

/// One character action. Each accepted command advances the world one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Move { dir: Dir },
    AimAt { entity_id: String },
    Interact { entity_id: String },
    Equip { item: String },
    Unequip,
    UseTool { entity_id: String },
    SetHelmet { on: bool },
    UseStation { entity_id: String },
    Noop,
}

impl Command {
    pub fn target(&self) -> Option<&str> {
        match self {
            Command::AimAt { entity_id }
            | Command::Interact { entity_id }
            | Command::UseTool { entity_id }
            | Command::UseStation { entity_id } => Some(entity_id),
            _ => None,
        }
    }

    pub fn equip(item: Item) -> Command {
        Command::Equip {
            item: item.name().to_string(),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Move { dir } => write!(f, "move {dir:?}"),
            Command::AimAt { entity_id } => write!(f, "aim_at {entity_id}"),
            Command::Interact { entity_id } => write!(f, "interact {entity_id}"),
            Command::Equip { item } => write!(f, "equip {item}"),
            Command::Unequip => f.write_str("unequip"),
            Command::UseTool { entity_id } => write!(f, "use_tool {entity_id}"),
            Command::SetHelmet { on } => write!(f, "set_helmet {}", if *on { "on" } else { "off" }),
            Command::UseStation { entity_id } => write!(f, "use_station {entity_id}"),
            Command::Noop => f.write_str("noop"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandResult {
    Ok,
    NotApplicable(String),
    Rejected(String),
}

impl CommandResult {
    pub fn is_ok(&self) -> bool {
        matches!(self, CommandResult::Ok)
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            CommandResult::Ok => None,
            CommandResult::NotApplicable(r) | CommandResult::Rejected(r) => Some(r),
        }
    }
}

impl fmt::Display for CommandResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandResult::Ok => f.write_str("ok"),
            CommandResult::NotApplicable(r) => write!(f, "not applicable ({r})"),
            CommandResult::Rejected(r) => write!(f, "rejected ({r})"),
        }
    }
}
