//! Line-oriented level file format.
//!
//! ```text
//! name demo
//! grid:
//! #####
//! #...#
//! #####
//! entity f1 flag at 2,1 score=500
//! station start at 1,1
//! param observation_radius=4
//! ```
//!
//! `//` starts a comment line. The grid block ends at the first line that is
//! not made only of `#` and `.`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use super::entity::{Components, Entity, EntityKind, SpawnEvent};
use super::grid::{Grid, GridPos};
use crate::error::{tokens, ParseError};

/// Tunable rule magnitudes. Every field can be overridden with a `param` line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelParams {
    pub interaction_range: f64,
    pub observation_radius: f64,
    pub fire_damage: u32,
    pub grind_rate: u32,
    pub weld_rate: u32,
    pub oxygen_drain: u32,
    pub suffocation_damage: u32,
    pub heal_rate: u32,
}

impl Default for LevelParams {
    fn default() -> Self {
        LevelParams {
            interaction_range: 1.5,
            observation_radius: 5.0,
            fire_damage: 5,
            grind_rate: 25,
            weld_rate: 25,
            oxygen_drain: 1,
            suffocation_damage: 2,
            heal_rate: 5,
        }
    }
}

pub const DEFAULT_MONSTER_DAMAGE: u32 = 10;
pub const DEFAULT_MONSTER_AGGRO: f64 = 5.0;
pub const DEFAULT_MAX_INTEGRITY: u32 = 100;
pub const DEFAULT_TANK_OXYGEN: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDefinition {
    pub name: String,
    pub grid: Grid,
    /// Every declared entity, including monsters that only appear through a
    /// button's spawn event.
    pub entities: Vec<Entity>,
    pub stations: BTreeMap<String, GridPos>,
    pub spawn: GridPos,
    pub params: LevelParams,
}

impl LevelDefinition {
    /// Ids of monsters that start dormant because a button spawns them.
    pub fn dormant_ids(&self) -> BTreeSet<&str> {
        self.entities
            .iter()
            .filter_map(|e| match &e.kind {
                EntityKind::Button { spawns: Some(ev), .. } => Some(ev.monster.as_str()),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevelError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{context} references unknown entity {id:?}")]
    Validation { id: String, context: String },
}

struct EntityDecl<'a> {
    line: usize,
    id: (usize, &'a str),
    kind: (usize, &'a str),
    pos: GridPos,
    keys: Vec<(usize, &'a str, &'a str)>,
}

/// Parses and validates a level file.
pub fn parse_level(text: &str) -> Result<LevelDefinition, LevelError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut name: Option<String> = None;
    let mut grid: Option<Grid> = None;
    let mut params = LevelParams::default();
    let mut decls: Vec<EntityDecl<'_>> = Vec::new();
    let mut stations = BTreeMap::new();
    let mut station_order: Vec<GridPos> = Vec::new();
    let mut spawn: Option<GridPos> = None;

    let mut i = 0;
    while i < lines.len() {
        let line_no = i + 1;
        let raw = lines[i];
        i += 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") {
            continue;
        }
        let toks = tokens(raw);
        let (col, head) = toks[0];
        match head {
            "grid:" => {
                if toks.len() > 1 {
                    return Err(ParseError::new(line_no, toks[1].0, "unexpected text after 'grid:'").into());
                }
                if grid.is_some() {
                    return Err(ParseError::new(line_no, col, "duplicate grid block").into());
                }
                let start = i;
                let mut rows = Vec::new();
                while i < lines.len() {
                    let row = lines[i].trim();
                    if row.is_empty() || !row.chars().all(|c| c == '#' || c == '.') {
                        break;
                    }
                    rows.push(row);
                    i += 1;
                }
                if rows.is_empty() {
                    return Err(ParseError::new(line_no, col, "grid block has no rows").into());
                }
                let width = rows[0].len();
                if let Some(bad) = rows.iter().position(|r| r.len() != width) {
                    return Err(ParseError::new(
                        start + bad + 1,
                        1,
                        format!("grid row has width {}, expected {width}", rows[bad].len()),
                    )
                    .into());
                }
                let g = Grid::from_rows(&rows).ok_or_else(|| ParseError::new(line_no, col, "grid too large"))?;
                if !g.is_closed() {
                    return Err(ParseError::new(line_no, col, "grid boundary must be wall").into());
                }
                grid = Some(g);
            }
            "name" => {
                let [_, (_, n)] = toks[..] else {
                    return Err(ParseError::new(line_no, col, "expected 'name <name>'").into());
                };
                name = Some(n.to_string());
            }
            "param" => {
                if toks.len() != 2 {
                    return Err(ParseError::new(line_no, col, "expected 'param <name>=<value>'").into());
                }
                let (pcol, kv) = toks[1];
                let (k, v) = split_kv(line_no, pcol, kv)?;
                set_param(&mut params, k, v).map_err(|m| ParseError::new(line_no, pcol, m))?;
            }
            "station" => {
                let g = require_grid(&grid, line_no, col)?;
                let [_, (_, sname), (_, "at"), (pcol, p)] = toks[..] else {
                    return Err(ParseError::new(line_no, col, "expected 'station <name> at <x>,<y>'").into());
                };
                let pos = parse_floor_pos(g, line_no, pcol, p)?;
                if stations.insert(sname.to_string(), pos).is_some() {
                    return Err(ParseError::new(line_no, toks[1].0, format!("duplicate station {sname:?}")).into());
                }
                station_order.push(pos);
            }
            "spawn" => {
                let g = require_grid(&grid, line_no, col)?;
                let [_, (_, "at"), (pcol, p)] = toks[..] else {
                    return Err(ParseError::new(line_no, col, "expected 'spawn at <x>,<y>'").into());
                };
                spawn = Some(parse_floor_pos(g, line_no, pcol, p)?);
            }
            "entity" => {
                let g = require_grid(&grid, line_no, col)?;
                if toks.len() < 5 || toks[3].1 != "at" {
                    return Err(ParseError::new(
                        line_no,
                        col,
                        "expected 'entity <id> <kind> at <x>,<y> [key=value ...]'",
                    )
                    .into());
                }
                let pos = parse_floor_pos(g, line_no, toks[4].0, toks[4].1)?;
                let mut keys = Vec::new();
                for &(kcol, kv) in &toks[5..] {
                    let (k, v) = split_kv(line_no, kcol, kv)?;
                    if keys.iter().any(|(_, seen, _)| *seen == k) {
                        return Err(ParseError::new(line_no, kcol, format!("duplicate key {k:?}")).into());
                    }
                    keys.push((kcol, k, v));
                }
                decls.push(EntityDecl {
                    line: line_no,
                    id: toks[1],
                    kind: toks[2],
                    pos,
                    keys,
                });
            }
            other => {
                return Err(ParseError::new(line_no, col, format!("unknown declaration {other:?}")).into());
            }
        }
    }

    let grid = grid.ok_or_else(|| ParseError::new(1, 1, "missing grid block"))?;
    let mut entities: Vec<Entity> = Vec::with_capacity(decls.len());
    for decl in &decls {
        let (id_col, id) = decl.id;
        if entities.iter().any(|e| e.id == id) {
            return Err(ParseError::new(decl.line, id_col, format!("duplicate entity id {id:?}")).into());
        }
        let kind = build_kind(decl, &params)?;
        entities.push(Entity::new(id, kind, decl.pos));
    }
    validate_references(&entities)?;

    let spawn = spawn
        .or_else(|| stations.get("spawn").copied())
        .or_else(|| station_order.first().copied())
        .or_else(|| grid.positions().find(|p| grid.is_floor(*p)))
        .ok_or_else(|| ParseError::new(1, 1, "level has no floor cell to spawn on"))?;

    Ok(LevelDefinition {
        name: name.unwrap_or_else(|| "unnamed".to_string()),
        grid,
        entities,
        stations,
        spawn,
        params,
    })
}

fn require_grid(grid: &Option<Grid>, line: usize, col: usize) -> Result<&Grid, ParseError> {
    grid.as_ref()
        .ok_or_else(|| ParseError::new(line, col, "declaration before grid block"))
}

fn split_kv(line: usize, col: usize, kv: &str) -> Result<(&str, &str), ParseError> {
    match kv.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k, v)),
        _ => Err(ParseError::new(line, col, format!("expected key=value, found {kv:?}"))),
    }
}

fn parse_pos(s: &str) -> Option<GridPos> {
    let (x, y) = s.split_once(',')?;
    Some(GridPos::new(x.parse().ok()?, y.parse().ok()?))
}

fn parse_floor_pos(grid: &Grid, line: usize, col: usize, s: &str) -> Result<GridPos, ParseError> {
    let pos = parse_pos(s).ok_or_else(|| ParseError::new(line, col, format!("expected <x>,<y>, found {s:?}")))?;
    if !grid.in_bounds(pos) {
        return Err(ParseError::new(
            line,
            col,
            format!("position {pos} is outside the grid"),
        ));
    }
    if !grid.is_floor(pos) {
        return Err(ParseError::new(
            line,
            col,
            format!("position {pos} is not a floor cell"),
        ));
    }
    Ok(pos)
}

fn set_param(p: &mut LevelParams, key: &str, value: &str) -> Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
        v.parse().map_err(|_| format!("invalid value {v:?} for {key}"))
    }
    match key {
        "interaction_range" => p.interaction_range = non_negative(key, num(key, value)?)?,
        "observation_radius" => p.observation_radius = non_negative(key, num(key, value)?)?,
        "fire_damage" => p.fire_damage = num(key, value)?,
        "grind_rate" => p.grind_rate = num(key, value)?,
        "weld_rate" => p.weld_rate = num(key, value)?,
        "oxygen_drain" => p.oxygen_drain = num(key, value)?,
        "suffocation_damage" => p.suffocation_damage = num(key, value)?,
        "heal_rate" => p.heal_rate = num(key, value)?,
        other => return Err(format!("unknown param {other:?}")),
    }
    Ok(())
}

fn non_negative(key: &str, v: f64) -> Result<f64, String> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{key} must be a non-negative number"))
    }
}

fn build_kind(decl: &EntityDecl<'_>, params: &LevelParams) -> Result<EntityKind, ParseError> {
    let line = decl.line;
    let allowed: &[&str] = match decl.kind.1 {
        "button" => &["links", "score", "spawns"],
        "door" => &["open"],
        "fire" => &["damage"],
        "monster" => &["damage", "aggro"],
        "flag" => &["score"],
        "block" => &["type", "integrity", "max", "yield", "cost"],
        "medical" => &["tank", "heal", "oxygen"],
        other => {
            return Err(ParseError::new(
                line,
                decl.kind.0,
                format!("unknown entity kind {other:?}"),
            ));
        }
    };
    for (col, k, _) in &decl.keys {
        if !allowed.contains(k) {
            return Err(ParseError::new(
                line,
                *col,
                format!("unknown key {k:?} for {} entity", decl.kind.1),
            ));
        }
    }
    let get = |key: &str| decl.keys.iter().find(|(_, k, _)| *k == key).map(|(c, _, v)| (*c, *v));
    let uint = |key: &str, default: u32| -> Result<u32, ParseError> {
        match get(key) {
            None => Ok(default),
            Some((c, v)) => v
                .parse()
                .map_err(|_| ParseError::new(line, c, format!("{key} must be a non-negative integer"))),
        }
    };
    let boolean = |key: &str| -> Result<bool, ParseError> {
        match get(key) {
            None => Ok(false),
            Some((_, "true")) => Ok(true),
            Some((_, "false")) => Ok(false),
            Some((c, _)) => Err(ParseError::new(line, c, format!("{key} must be true or false"))),
        }
    };
    let components = |key: &str| -> Result<Components, ParseError> {
        let mut out = Components::new();
        if let Some((c, v)) = get(key) {
            for item in v.split(',') {
                let parsed = item
                    .split_once(':')
                    .and_then(|(n, k)| Some((n, k.parse::<u32>().ok()?)))
                    .filter(|(n, _)| !n.is_empty());
                let Some((n, k)) = parsed else {
                    return Err(ParseError::new(line, c, format!("expected name:count, found {item:?}")));
                };
                *out.entry(n.to_string()).or_default() += k;
            }
        }
        Ok(out)
    };

    Ok(match decl.kind.1 {
        "button" => {
            let links = get("links")
                .map(|(_, v)| v.split(',').map(str::to_string).collect())
                .unwrap_or_default();
            let spawns =
                match get("spawns") {
                    None => None,
                    Some((c, v)) => Some(match v.split_once('@') {
                        None => SpawnEvent {
                            monster: v.to_string(),
                            at: None,
                        },
                        Some((m, p)) => SpawnEvent {
                            monster: m.to_string(),
                            at: Some(parse_pos(p).ok_or_else(|| {
                                ParseError::new(line, c, format!("expected <id>@<x>,<y>, found {v:?}"))
                            })?),
                        },
                    }),
                };
            EntityKind::Button {
                links,
                score: uint("score", 0)?,
                spawns,
            }
        }
        "door" => EntityKind::Door { open: boolean("open")? },
        "fire" => EntityKind::Fire {
            damage: uint("damage", params.fire_damage)?,
        },
        "monster" => EntityKind::Monster {
            damage: uint("damage", DEFAULT_MONSTER_DAMAGE)?,
            aggro_radius: match get("aggro") {
                None => DEFAULT_MONSTER_AGGRO,
                Some((c, v)) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|a| a.is_finite() && *a >= 0.0)
                    .ok_or_else(|| ParseError::new(line, c, "aggro must be a non-negative number"))?,
            },
        },
        "flag" => EntityKind::Flag {
            score: uint("score", 0)?,
        },
        "block" => {
            let max_integrity = uint("max", DEFAULT_MAX_INTEGRITY)?;
            if max_integrity == 0 {
                return Err(ParseError::new(
                    line,
                    get("max").map_or(1, |g| g.0),
                    "max must be positive",
                ));
            }
            let integrity = uint("integrity", max_integrity)?;
            if integrity > max_integrity {
                return Err(ParseError::new(
                    line,
                    get("integrity").map_or(1, |g| g.0),
                    "integrity exceeds max",
                ));
            }
            EntityKind::Block {
                block_type: get("type").map_or_else(|| "block".to_string(), |(_, v)| v.to_string()),
                integrity,
                max_integrity,
                component_yield: components("yield")?,
                build_cost: components("cost")?,
            }
        }
        "medical" => EntityKind::Medical {
            has_oxygen_tank: boolean("tank")?,
            heal_per_tick: uint("heal", params.heal_rate)?,
            oxygen_per_tick: uint("oxygen", DEFAULT_TANK_OXYGEN)?,
        },
        _ => unreachable!("kind checked above"),
    })
}

fn validate_references(entities: &[Entity]) -> Result<(), LevelError> {
    let find = |id: &str| entities.iter().find(|e| e.id == id);
    for e in entities {
        if let EntityKind::Button { links, spawns, .. } = &e.kind {
            for link in links {
                match find(link) {
                    Some(Entity {
                        kind: EntityKind::Door { .. },
                        ..
                    }) => {}
                    _ => {
                        return Err(LevelError::Validation {
                            id: link.clone(),
                            context: format!("button {:?} link", e.id),
                        })
                    }
                }
            }
            if let Some(ev) = spawns {
                match find(&ev.monster) {
                    Some(Entity {
                        kind: EntityKind::Monster { .. },
                        ..
                    }) => {}
                    _ => {
                        return Err(LevelError::Validation {
                            id: ev.monster.clone(),
                            context: format!("button {:?} spawn event", e.id),
                        })
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "grid:\n###\n#.#\n###\nentity f1 flag at 1,1 score=5\n";

    #[test]
    fn minimal_level() {
        let lvl = parse_level(MINIMAL).unwrap();
        assert_eq!(lvl.entities.len(), 1);
        assert_eq!(lvl.spawn, GridPos::new(1, 1));
        assert_eq!(lvl.params, LevelParams::default());
    }

    #[test]
    fn dangling_link_names_the_id() {
        let text = "grid:\n#####\n#...#\n#####\nentity b1 button at 1,1 links=d9\n";
        match parse_level(text) {
            Err(LevelError::Validation { id, .. }) => assert_eq!(id, "d9"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_located() {
        let text = "grid:\n###\n#.#\n###\nentity f1 flag at 1,1 colour=red\n";
        let Err(LevelError::Parse(e)) = parse_level(text) else {
            panic!()
        };
        assert_eq!((e.line, e.column), (5, 23));
    }

    #[test]
    fn unknown_param_is_rejected() {
        let text = "grid:\n###\n#.#\n###\nparam gravity=9\n";
        let Err(LevelError::Parse(e)) = parse_level(text) else {
            panic!()
        };
        assert_eq!((e.line, e.column), (5, 7));
        assert!(e.message.contains("gravity"));
    }

    #[test]
    fn entity_on_wall_is_rejected() {
        let text = "grid:\n###\n#.#\n###\nentity f1 flag at 0,0\n";
        let Err(LevelError::Parse(e)) = parse_level(text) else {
            panic!()
        };
        assert!(e.message.contains("not a floor"));
    }

    #[test]
    fn open_boundary_is_rejected() {
        let text = "grid:\n###\n#..\n###\n";
        assert!(matches!(parse_level(text), Err(LevelError::Parse(_))));
    }

    #[test]
    fn params_apply_to_defaults_regardless_of_order() {
        let text = "grid:\n####\n#..#\n####\nentity f fire at 1,1\nparam fire_damage=7\n";
        let lvl = parse_level(text).unwrap();
        assert_eq!(lvl.entities[0].kind, EntityKind::Fire { damage: 7 });
    }

    #[test]
    fn block_components_parse() {
        let text = "grid:\n####\n#..#\n####\nentity k block at 1,1 type=armor yield=steel_plate:10,motor:1 cost=steel_plate:12\n";
        let lvl = parse_level(text).unwrap();
        let EntityKind::Block {
            component_yield,
            build_cost,
            integrity,
            ..
        } = &lvl.entities[0].kind
        else {
            panic!()
        };
        assert_eq!(component_yield["steel_plate"], 10);
        assert_eq!(component_yield["motor"], 1);
        assert_eq!(build_cost["steel_plate"], 12);
        assert_eq!(*integrity, 100);
    }

    #[test]
    fn spawn_event_must_target_monster() {
        let text = "grid:\n####\n#..#\n####\nentity b button at 1,1 spawns=f\nentity f flag at 2,1\n";
        assert!(matches!(parse_level(text), Err(LevelError::Validation { .. })));
    }
}
