//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls the library's geometry or search code; the oracles are
//! written from first principles so they can check it.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use gridbdd::agent::{
    build_goal, deliberation_cycle, initial_belief, run_agent_with, AgentOutcome, Budget, CycleOutcome, GoalStructure,
};
use gridbdd::bdd::{parse_feature, run_features, FeatureFile, Report, RunOptions, StepRegistry};
use gridbdd::env::observe;
use gridbdd::env::{CellView, EnvSession, LevelSet};
use gridbdd::fixtures;
use gridbdd::nav::{plan_path, select_frontier, tactic_navigate_to, NavGraph, LEAF_EXPLORE, LEAF_FOLLOW};
use gridbdd::world::{GridPos, WorldState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cells whose closed unit square the segment between the centres of `a`
/// and `b` touches. Works in doubled coordinates so everything is an exact
/// integer: a segment meets a convex box iff their bounding boxes overlap
/// and the box corners are not all strictly on one side of the line.
pub fn touched_cells(a: GridPos, b: GridPos) -> Vec<GridPos> {
    let (ax, ay, bx, by) = (2 * a.x as i64, 2 * a.y as i64, 2 * b.x as i64, 2 * b.y as i64);
    let mut out = Vec::new();
    for y in a.y.min(b.y)..=a.y.max(b.y) {
        for x in a.x.min(b.x)..=a.x.max(b.x) {
            let (cx, cy) = (2 * x as i64, 2 * y as i64);
            let side = |px: i64, py: i64| ((bx - ax) * (py - ay) - (by - ay) * (px - ax)).signum();
            let sides = [
                side(cx - 1, cy - 1),
                side(cx + 1, cy - 1),
                side(cx - 1, cy + 1),
                side(cx + 1, cy + 1),
            ];
            let all_pos = sides.iter().all(|s| *s > 0);
            let all_neg = sides.iter().all(|s| *s < 0);
            if !all_pos && !all_neg {
                out.push(GridPos::new(x, y));
            }
        }
    }
    out
}

/// No wall on any touched cell other than the endpoints.
pub fn oracle_los(is_wall: impl Fn(GridPos) -> bool, a: GridPos, b: GridPos) -> bool {
    touched_cells(a, b)
        .into_iter()
        .filter(|p| *p != a && *p != b)
        .all(|p| !is_wall(p))
}

/// Breadth-first distances over `open` cells from `from`. `target` may be
/// closed; it is entered but never expanded.
pub fn bfs(open: &BTreeSet<GridPos>, from: GridPos, target: Option<GridPos>) -> BTreeMap<GridPos, usize> {
    let mut dist = BTreeMap::from([(from, 0)]);
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        if Some(p) == target && p != from {
            continue;
        }
        let d = dist[&p];
        for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
            let n = GridPos::new(p.x + dx, p.y + dy);
            if (open.contains(&n) || Some(n) == target) && !dist.contains_key(&n) {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Rows of a random closed grid: border walls, interior walls with
/// probability `density`.
pub fn random_rows(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> Vec<String> {
    (0..h)
        .map(|y| {
            (0..w)
                .map(|x| {
                    let border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
                    if border || rng.gen_bool(density) {
                        '#'
                    } else {
                        '.'
                    }
                })
                .collect()
        })
        .collect()
}

/// A navigation graph that knows every cell of `rows`.
pub fn full_nav(rows: &[String]) -> NavGraph {
    let mut nav = NavGraph::new();
    let cells: Vec<CellView> = rows
        .iter()
        .enumerate()
        .flat_map(|(y, r)| {
            r.chars().enumerate().map(move |(x, c)| CellView {
                pos: GridPos::new(x as i32, y as i32),
                wall: c == '#',
            })
        })
        .collect();
    nav.update(&cells);
    nav
}

pub fn floor_cells(rows: &[String]) -> BTreeSet<GridPos> {
    rows.iter()
        .enumerate()
        .flat_map(|(y, r)| {
            r.chars()
                .enumerate()
                .filter(|(_, c)| *c == '.')
                .map(move |(x, _)| GridPos::new(x as i32, y as i32))
        })
        .collect()
}

pub fn load_features(dir: &Path) -> Vec<(String, FeatureFile)> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "feature"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let f = parse_feature(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, f)
        })
        .collect()
}

pub fn bundled_levels() -> Arc<LevelSet> {
    Arc::new(LevelSet::from_dir(fixtures::dir().join("levels")))
}

pub fn fixed_clock() -> RunOptions {
    RunOptions {
        fixed_clock: true,
        levels_label: "levels".into(),
        ..RunOptions::default()
    }
}

/// Runs the features in `fixtures/<dir>` in-process.
pub fn run_dir(dir: &str, opts: &RunOptions) -> Report {
    let features = load_features(&fixtures::dir().join(dir));
    let levels = bundled_levels();
    let registry = StepRegistry::with_builtins();
    run_features(&features, &registry, opts, &|| {
        Ok(EnvSession::in_process(Arc::clone(&levels)))
    })
    .unwrap()
}

/// Level text for a random bordered grid with flags on random floor cells.
pub fn random_level(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    loop {
        let (w, h) = (rng.gen_range(6..16), rng.gen_range(6..12));
        let rows = random_rows(rng, w, h, 0.25);
        let mut floor: Vec<GridPos> = floor_cells(&rows).into_iter().collect();
        if floor.len() < 4 {
            continue;
        }
        floor.shuffle(rng);
        let mut text = format!("name random\ngrid:\n{}\n", rows.join("\n"));
        for (i, p) in floor[1..].iter().take(8).enumerate() {
            let _ = writeln!(text, "entity f{i} flag at {},{} score=1", p.x, p.y);
        }
        let _ = writeln!(text, "spawn at {},{}", floor[0].x, floor[0].y);
        let _ = writeln!(text, "param observation_radius={}", rng.gen_range(2..8));
        return (text, rows);
    }
}

/// Random unbordered grid, so planning also meets the open edge.
pub fn small_grid(rng: &mut ChaCha8Rng) -> Vec<String> {
    let (w, h) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
    (0..h)
        .map(|_| (0..w).map(|_| if rng.gen_bool(0.3) { '#' } else { '.' }).collect())
        .collect()
}

pub fn check_all_pairs(nav: &NavGraph, floor: &BTreeSet<GridPos>, obstacles: &BTreeSet<GridPos>) {
    let open: BTreeSet<GridPos> = floor.difference(obstacles).copied().collect();
    for &from in floor {
        for &to in floor {
            let want = bfs(&open, from, Some(to)).get(&to).copied();
            let got = plan_path(nav, from, to);
            assert_eq!(got.as_ref().map(|p| p.cost()), want, "{from:?} -> {to:?}");
            if let Some(path) = got {
                assert!(path.is_valid(nav, from));
                let cells = path.cells();
                assert_eq!((cells[0], cells[cells.len() - 1]), (from, to));
                assert!(cells.windows(2).all(|w| w[0].manhattan(w[1]) == 1));
                assert!(cells
                    .iter()
                    .skip(1)
                    .take(cells.len().saturating_sub(2))
                    .all(|p| open.contains(p)));
            }
        }
    }
}

/// A* against BFS on `rounds` random grids; odd rounds add obstacles.
pub fn check_random_grids(seed: u64, rounds: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for round in 0..rounds {
        let rows = small_grid(&mut rng);
        let floor = floor_cells(&rows);
        let mut nav = full_nav(&rows);
        let obstacles: BTreeSet<GridPos> = if round % 2 == 0 {
            BTreeSet::new()
        } else {
            floor.iter().copied().filter(|_| rng.gen_bool(0.2)).collect()
        };
        nav.set_obstacles(obstacles.iter().copied());
        check_all_pairs(&nav, &floor, &obstacles);
    }
}

/// A* against BFS between every pair of floor cells of every bundled level.
pub fn check_bundled_levels() {
    for (_, text) in fixtures::LEVELS {
        let w = WorldState::load(text, 0).unwrap();
        let rows = w.grid().rows();
        check_all_pairs(&full_nav(&rows), &floor_cells(&rows), &BTreeSet::new());
    }
}

/// Observation against the brute-force line check on `worlds` random
/// levels: visible entities pass it, hidden in-radius ones fail it.
pub fn check_occlusion(seed: u64, worlds: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..worlds {
        let (text, rows) = random_level(&mut rng);
        let w = WorldState::load(&text, 0).unwrap();
        let obs = observe(&w);
        let from = w.character.pos;
        let r = w.params().observation_radius;
        let is_wall = |p: GridPos| rows[p.y as usize].as_bytes()[p.x as usize] == b'#';
        let sees = |p: GridPos| from.distance(p) <= r && oracle_los(is_wall, from, p);
        for e in &w.entities {
            assert_eq!(
                obs.entity(&e.id).is_some(),
                sees(e.pos),
                "{} from {from:?}\n{text}",
                e.id
            );
        }
        let cells: BTreeSet<GridPos> = obs.visible_cells.iter().map(|c| c.pos).collect();
        let want: BTreeSet<GridPos> = (0..rows.len() as i32)
            .flat_map(|y| (0..rows[0].len() as i32).map(move |x| GridPos::new(x, y)))
            .filter(|p| sees(*p))
            .collect();
        assert_eq!(cells, want, "\n{text}");
        assert!(obs.visible_cells.iter().all(|c| c.wall == is_wall(c.pos)));
    }
}

/// Expected error position and message fragment per malformed file,
/// worked out by hand from the files.
pub const MALFORMED: [(&str, usize, usize, &str); 10] = [
    ("and_first.feature", 4, 7, "And cannot start a scenario"),
    ("duplicate.feature", 6, 2, "duplicate scenario name \"same\""),
    ("empty.feature", 1, 1, "missing Feature header"),
    ("interleaved.feature", 7, 5, "When step after Then step"),
    ("no_header.feature", 2, 3, "missing Feature header"),
    ("no_scenarios.feature", 2, 1, "feature has no scenarios"),
    ("no_steps.feature", 6, 3, "scenario \"has none\" has no steps"),
    ("outline.feature", 3, 3, "unsupported construct \"Scenario Outline\""),
    ("step_outside.feature", 2, 2, "step outside of a scenario"),
    ("unknown_line.feature", 5, 5, "expected a step or Scenario"),
];

/// Every malformed fixture fails at its documented position.
pub fn check_malformed() {
    let dir = fixtures::dir().join("malformed");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, MALFORMED.map(|m| m.0.to_string()));
    for (name, line, column, message) in MALFORMED {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        let err = parse_feature(&text).expect_err(name);
        assert_eq!((err.line, err.column), (line, column), "{name}: {err}");
        assert!(err.message.contains(message), "{name}: {}", err.message);
    }
}

/// Parses, serializes and reparses every corpus file. Returns the count.
pub fn check_round_trip() -> usize {
    let mut files = load_features(&fixtures::dir().join("features"));
    files.extend(load_features(&fixtures::dir().join("expected_failures")));
    for (name, f) in &files {
        let text = f.serialize();
        let again = parse_feature(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(&again, f, "{name}");
        assert_eq!(again.serialize(), text, "{name}");
    }
    files.len()
}

pub fn session(level: &str) -> EnvSession {
    let mut env = EnvSession::in_process(bundled_levels());
    env.load(level, 0).unwrap();
    env
}

pub fn navigate_near(id: &'static str) -> GoalStructure {
    build_goal(format!("near {id}"), move |b| b.in_reach(id), tactic_navigate_to(id)).lift()
}

/// An unreachable target fails through Abort, and only once nothing is
/// left to explore.
pub fn check_sealed_abort() {
    let mut env = session("sealed");
    let info = env.level_info().cloned().unwrap();
    let mut belief = initial_belief(&mut env, info).unwrap();
    let mut goals = navigate_near("treasure");
    let r = run_agent_with(&mut goals, &mut env, &mut belief, &mut Budget::new(500)).unwrap();
    assert_eq!(r.outcome, AgentOutcome::GoalFailed("near treasure".into()));
    assert!(!r.trace.is_empty());
    assert!(r.trace.iter().all(|t| t.leaf == LEAF_EXPLORE));
    assert!(belief.entity("treasure").is_none());
    assert!(belief.nav.frontier().is_empty());
    assert_eq!(select_frontier(&belief.nav, belief.pos()), None);
    let left: Vec<_> = floor_cells(&env.world().unwrap().grid().rows())
        .into_iter()
        .filter(|p| p.x < 4)
        .collect();
    assert!(left.iter().all(|p| belief.nav.known().contains(p)));
}

/// The cycle that first sees the target follows a path to it; every
/// earlier cycle explores.
pub fn check_discovery_switch() {
    let mut env = session("station_lab");
    let info = env.level_info().cloned().unwrap();
    let mut belief = initial_belief(&mut env, info).unwrap();
    assert!(belief.entity("hot").is_none(), "target must start unseen");
    let mut goals = navigate_near("hot");
    let (mut budget, mut trace) = (Budget::new(200), Vec::new());
    let mut leaves = Vec::new();
    loop {
        let before = trace.len();
        let out = deliberation_cycle(&mut goals, &mut env, &mut belief, &mut budget, &mut trace).unwrap();
        if trace.len() > before {
            let known = belief.entity("hot").is_some();
            let leaf = &trace[before].leaf;
            assert_eq!(
                leaf,
                if known { LEAF_FOLLOW } else { LEAF_EXPLORE },
                "cycle {}",
                budget.cycles_used
            );
            leaves.push(leaf.clone());
        }
        match out {
            CycleOutcome::Acted | CycleOutcome::Solved(_) => {}
            CycleOutcome::AllSolved => break,
            other => panic!("{other:?}"),
        }
    }
    assert!(leaves.contains(&LEAF_EXPLORE.to_string()) && leaves.contains(&LEAF_FOLLOW.to_string()));
    assert!(belief.in_reach("hot"));
}
