use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::env::{LevelInfo, Observation};
use crate::nav::NavGraph;
use crate::world::{CharacterState, Command, CommandResult, Entity, EntityKind, GridPos};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("stale observation: tick {got} is older than {latest}")]
pub struct StaleObservation {
    pub latest: u64,
    pub got: u64,
}

/// Last-known state of an entity and when it was seen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sighting {
    pub entity: Entity,
    pub last_seen_tick: u64,
}

/// The agent's accumulated model of the world, built only from observations.
#[derive(Debug, Clone, Serialize)]
pub struct BeliefState {
    pub info: LevelInfo,
    pub latest: Observation,
    registry: BTreeMap<String, Sighting>,
    pub nav: NavGraph,
    pub self_state: CharacterState,
    /// Most recent command issued for the active goal, cleared whenever a
    /// goal settles.
    pub last_action: Option<(Command, CommandResult)>,
}

impl BeliefState {
    pub fn new(info: LevelInfo, first: Observation) -> Self {
        let mut belief = BeliefState {
            info,
            self_state: first.character.clone(),
            latest: first.clone(),
            registry: BTreeMap::new(),
            nav: NavGraph::new(),
            last_action: None,
        };
        belief.absorb(first);
        belief
    }

    /// Merges a newer observation: visible entities are upserted, everything
    /// else is remembered as last seen.
    pub fn update(&mut self, obs: Observation) -> Result<(), StaleObservation> {
        if obs.tick < self.latest.tick {
            return Err(StaleObservation {
                latest: self.latest.tick,
                got: obs.tick,
            });
        }
        self.absorb(obs);
        Ok(())
    }

    fn absorb(&mut self, obs: Observation) {
        for e in &obs.visible_entities {
            self.registry.insert(
                e.id.clone(),
                Sighting {
                    entity: e.clone(),
                    last_seen_tick: obs.tick,
                },
            );
        }
        self.nav.update(&obs.visible_cells);
        self.nav.set_obstacles(
            self.registry
                .values()
                .filter(|s| s.entity.is_hazard_or_obstacle())
                .map(|s| s.entity.pos),
        );
        self.self_state = obs.character.clone();
        self.latest = obs;
    }

    pub fn registry(&self) -> &BTreeMap<String, Sighting> {
        &self.registry
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.registry.get(id).map(|s| &s.entity)
    }

    pub fn last_seen(&self, id: &str) -> Option<u64> {
        self.registry.get(id).map(|s| s.last_seen_tick)
    }

    pub fn pos(&self) -> GridPos {
        self.self_state.pos
    }

    /// Known entity within interaction range and not behind a known wall.
    pub fn in_reach(&self, id: &str) -> bool {
        self.within(id, self.info.interaction_range)
    }

    pub fn within(&self, id: &str, range: f64) -> bool {
        self.entity(id)
            .is_some_and(|e| self.pos().distance(e.pos) <= range && self.nav.line_of_sight(self.pos(), e.pos))
    }

    /// True when the last command for the active goal was an accepted
    /// interaction with `id`.
    pub fn interacted_with(&self, id: &str) -> bool {
        matches!(
            &self.last_action,
            Some((Command::Interact { entity_id }, CommandResult::Ok)) if entity_id == id
        )
    }

    /// Known map with entities and the character overlaid.
    pub fn ascii_map(&self) -> String {
        let mut rows = self.nav.render(self.info.width, self.info.height);
        let mut put = |p: GridPos, c: char| {
            if let Some(cell) = rows.get_mut(p.y as usize).and_then(|r| r.get_mut(p.x as usize)) {
                *cell = c;
            }
        };
        for s in self.registry.values() {
            let e = &s.entity;
            let c = match &e.kind {
                _ if !e.alive => 'x',
                EntityKind::Button { .. } => 'B',
                EntityKind::Door { open: true } => '/',
                EntityKind::Door { open: false } => 'D',
                EntityKind::Fire { .. } => '^',
                EntityKind::Monster { .. } => 'M',
                EntityKind::Flag { .. } => 'F',
                EntityKind::Block { .. } => '%',
                EntityKind::Medical { .. } => '+',
            };
            put(e.pos, c);
        }
        put(self.pos(), '@');
        let mut out = String::new();
        for row in rows {
            out.push_str(row.iter().collect::<String>().trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::observe;
    use crate::world::WorldState;

    fn lab() -> WorldState {
        WorldState::load(
            "grid:\n########\n#......#\n########\nentity d door at 3,1\nentity b button at 2,1\nparam observation_radius=2\nspawn at 1,1\n",
            0,
        )
        .unwrap()
    }

    #[test]
    fn registry_retains_entities_out_of_view() {
        let mut w = lab();
        let mut b = BeliefState::new(LevelInfo::of(&w), observe(&w));
        assert_eq!(b.registry().len(), 2);
        w.tick = 3;
        w.character.pos = GridPos::new(6, 1);
        b.update(observe(&w)).unwrap();
        assert_eq!(b.registry().len(), 2);
        assert_eq!(b.last_seen("b"), Some(0));
    }

    #[test]
    fn upsert_replaces_door_state() {
        let mut w = lab();
        let mut b = BeliefState::new(LevelInfo::of(&w), observe(&w));
        w.entities[0].kind = EntityKind::Door { open: true };
        w.tick = 5;
        b.update(observe(&w)).unwrap();
        assert_eq!(b.entity("d").unwrap().is_door_open(), Some(true));
        w.entities[0].kind = EntityKind::Door { open: false };
        w.tick = 9;
        b.update(observe(&w)).unwrap();
        assert_eq!(b.entity("d").unwrap().is_door_open(), Some(false));
        assert_eq!(b.last_seen("d"), Some(9));
    }

    #[test]
    fn tick_regression_is_rejected() {
        let mut w = lab();
        w.tick = 4;
        let mut b = BeliefState::new(LevelInfo::of(&w), observe(&w));
        w.tick = 3;
        assert_eq!(b.update(observe(&w)), Err(StaleObservation { latest: 4, got: 3 }));
    }

    #[test]
    fn closed_door_is_an_obstacle() {
        let w = lab();
        let b = BeliefState::new(LevelInfo::of(&w), observe(&w));
        assert!(b.nav.obstacles().contains(&GridPos::new(3, 1)));
        assert!(b.ascii_map().contains('D'));
    }
}
