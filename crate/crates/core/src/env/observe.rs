use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::los::line_of_sight;
use crate::world::{CharacterState, Entity, GridPos, Outcome, WorldState};

/// One cell the character can currently see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellView {
    pub pos: GridPos,
    pub wall: bool,
}

/// What the agent perceives at one tick. The character is always fully
/// visible; entities and cells only within the observation radius and with
/// line of sight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub tick: u64,
    pub character: CharacterState,
    pub visible_entities: Vec<Entity>,
    pub visible_cells: Vec<CellView>,
    pub finished: bool,
    pub outcome: Option<Outcome>,
}

impl Observation {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.visible_entities.iter().find(|e| e.id == id)
    }
}

/// Static level facts handed to a client when a level is loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub interaction_range: f64,
    pub observation_radius: f64,
    pub stations: BTreeMap<String, GridPos>,
}

impl LevelInfo {
    pub fn of(world: &WorldState) -> Self {
        let level = world.level();
        LevelInfo {
            name: level.name.clone(),
            width: level.grid.width(),
            height: level.grid.height(),
            interaction_range: level.params.interaction_range,
            observation_radius: level.params.observation_radius,
            stations: level.stations.clone(),
        }
    }
}

pub(crate) fn visible(world: &WorldState, from: GridPos, target: GridPos) -> bool {
    from.distance(target) <= world.params().observation_radius && line_of_sight(world.grid(), from, target)
}

/// Side-effect free snapshot of what the character can see.
pub fn observe(world: &WorldState) -> Observation {
    let from = world.character.pos;
    let r = world.params().observation_radius;
    let reach = r.floor() as i32;
    let grid = world.grid();
    let mut visible_cells = Vec::new();
    for y in (from.y - reach).max(0)..=(from.y + reach).min(grid.height() as i32 - 1) {
        for x in (from.x - reach).max(0)..=(from.x + reach).min(grid.width() as i32 - 1) {
            let p = GridPos::new(x, y);
            if visible(world, from, p) {
                visible_cells.push(CellView {
                    pos: p,
                    wall: grid.is_wall(p),
                });
            }
        }
    }
    Observation {
        tick: world.tick,
        character: world.character.clone(),
        visible_entities: world
            .entities
            .iter()
            .filter(|e| visible(world, from, e.pos))
            .cloned()
            .collect(),
        visible_cells,
        finished: world.finished,
        outcome: world.outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(extra: &str, radius: f64) -> WorldState {
        let text = format!(
            "grid:\n#########\n#.......#\n#...#...#\n#.......#\n#########\nparam observation_radius={radius}\nspawn at 1,2\n{extra}"
        );
        WorldState::load(&text, 0).unwrap()
    }

    #[test]
    fn near_entity_is_visible() {
        let w = world("entity f flag at 3,2\n", 5.0);
        assert!(observe(&w).entity("f").is_some());
    }

    #[test]
    fn wall_hides_entity() {
        let w = world("spawn at 3,2\nentity f flag at 5,2\n", 5.0);
        assert!(observe(&w).entity("f").is_none());
    }

    #[test]
    fn radius_boundary() {
        let w = world("entity f flag at 3,2\n", 2.0);
        assert!(observe(&w).entity("f").is_some());
        let w = world("entity f flag at 3,2\n", 1.0);
        assert!(observe(&w).entity("f").is_none());
    }

    #[test]
    fn snapshots_are_detached() {
        let mut w = world("entity f flag at 2,2\n", 5.0);
        let obs = observe(&w);
        w.entities[0].alive = false;
        w.character.health = 1;
        assert!(obs.entity("f").unwrap().alive);
        assert_eq!(obs.character.health, 100);
    }

    #[test]
    fn observe_does_not_tick() {
        let w = world("", 5.0);
        assert_eq!(observe(&w).tick, 0);
        assert_eq!(observe(&w).tick, 0);
    }

    #[test]
    fn blocking_wall_is_itself_visible() {
        let w = world("", 5.0);
        let obs = observe(&w);
        assert!(obs.visible_cells.iter().any(|c| c.pos == GridPos::new(4, 2) && c.wall));
        assert!(!obs.visible_cells.iter().any(|c| c.pos == GridPos::new(5, 2)));
    }
}
