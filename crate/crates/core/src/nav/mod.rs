//! The agent's discovered map and how it moves through it.
//!
//! A [`NavGraph`] only contains what the agent has seen. Planning runs over
//! known floor cells, treating walls, closed doors, live blocks, monsters
//! and fire as impassable. Exploration targets the nearest reachable
//! frontier cell: a known floor cell with an unseen 4-neighbour.

mod tactics;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use serde::Serialize;

use crate::env::CellView;
use crate::world::{Dir, GridPos};

pub use tactics::{
    tactic_explore, tactic_interact_with, tactic_navigate_to, tactic_navigate_to_cell, LEAF_EXPLORE, LEAF_FOLLOW,
    LEAF_INTERACT,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NavGraph {
    known: BTreeSet<GridPos>,
    walls: BTreeSet<GridPos>,
    frontier: BTreeSet<GridPos>,
    obstacles: BTreeSet<GridPos>,
}

impl NavGraph {
    pub fn new() -> Self {
        NavGraph::default()
    }

    /// Known floor cells.
    pub fn known(&self) -> &BTreeSet<GridPos> {
        &self.known
    }

    pub fn walls(&self) -> &BTreeSet<GridPos> {
        &self.walls
    }

    pub fn frontier(&self) -> &BTreeSet<GridPos> {
        &self.frontier
    }

    /// Known cells currently occupied by something the planner must avoid.
    pub fn obstacles(&self) -> &BTreeSet<GridPos> {
        &self.obstacles
    }

    pub fn is_known(&self, p: GridPos) -> bool {
        self.known.contains(&p) || self.walls.contains(&p)
    }

    pub fn is_passable(&self, p: GridPos) -> bool {
        self.known.contains(&p) && !self.obstacles.contains(&p)
    }

    /// Folds newly seen cells in and recomputes the frontier.
    pub fn update(&mut self, grid_view: &[CellView]) {
        for cell in grid_view {
            if cell.wall {
                if !self.known.contains(&cell.pos) {
                    self.walls.insert(cell.pos);
                }
            } else if !self.walls.contains(&cell.pos) {
                self.known.insert(cell.pos);
            }
        }
        self.frontier = self
            .known
            .iter()
            .copied()
            .filter(|p| p.neighbors().any(|(_, n)| !self.is_known(n)))
            .collect();
    }

    pub fn set_obstacles(&mut self, obstacles: impl IntoIterator<Item = GridPos>) {
        self.obstacles = obstacles.into_iter().collect();
    }

    /// Line of sight against the walls seen so far. Unseen cells count as open.
    pub fn line_of_sight(&self, a: GridPos, b: GridPos) -> bool {
        crate::env::line_of_sight_by(a, b, |p| self.walls.contains(&p))
    }

    fn step_allowed(&self, p: GridPos, to: GridPos) -> bool {
        p == to || self.is_passable(p)
    }

    /// Shortest-path distance from `from` to every reachable passable cell.
    pub fn distances_from(&self, from: GridPos) -> BTreeMap<GridPos, u32> {
        let mut dist = BTreeMap::new();
        if !self.known.contains(&from) {
            return dist;
        }
        dist.insert(from, 0);
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            let d = dist[&p];
            for (_, n) in p.neighbors() {
                if self.is_passable(n) && !dist.contains_key(&n) {
                    dist.insert(n, d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Renders known walls (`#`), floor (`.`), frontier (`*`) and unknown
    /// (space) cells as rows.
    pub fn render(&self, width: usize, height: usize) -> Vec<Vec<char>> {
        let mut rows = vec![vec![' '; width]; height];
        for (set, ch) in [(&self.known, '.'), (&self.frontier, '*'), (&self.walls, '#')] {
            for p in set {
                if p.x >= 0 && p.y >= 0 && (p.x as usize) < width && (p.y as usize) < height {
                    rows[p.y as usize][p.x as usize] = ch;
                }
            }
        }
        rows
    }
}

/// A 4-connected route. The first cell is the start position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Path(Vec<GridPos>);

impl Path {
    pub fn cells(&self) -> &[GridPos] {
        &self.0
    }

    /// Number of moves.
    pub fn cost(&self) -> usize {
        self.0.len() - 1
    }

    pub fn first_step(&self) -> Option<Dir> {
        match self.0.as_slice() {
            [a, b, ..] => a.dir_to(*b),
            _ => None,
        }
    }

    /// Checks the route invariants against `nav`: starts at `from`, each
    /// step adjacent, every cell known floor and every intermediate cell
    /// passable.
    pub fn is_valid(&self, nav: &NavGraph, from: GridPos) -> bool {
        let cells = &self.0;
        if cells.is_empty() {
            return false;
        }
        cells[0] == from
            && cells.windows(2).all(|w| w[0].manhattan(w[1]) == 1)
            && cells.iter().all(|p| nav.known.contains(p))
            && cells
                .iter()
                .skip(1)
                .take(cells.len().saturating_sub(2))
                .all(|p| nav.is_passable(*p))
    }
}

/// A* over the known graph with a Manhattan heuristic. The target cell may
/// itself be occupied (a door or block to stand next to); every other cell
/// after the start must be passable. Neighbours are expanded N, E, S, W and
/// ties on f-score are broken first-in-first-out.
pub fn plan_path(nav: &NavGraph, from: GridPos, to: GridPos) -> Option<Path> {
    if !nav.known.contains(&from) || !nav.known.contains(&to) {
        return None;
    }
    if from == to {
        return Some(Path(vec![from]));
    }
    let mut g: BTreeMap<GridPos, u32> = BTreeMap::from([(from, 0)]);
    let mut came_from: BTreeMap<GridPos, GridPos> = BTreeMap::new();
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Reverse((from.manhattan(to), seq, from)));
    while let Some(Reverse((_, _, p))) = open.pop() {
        if p == to {
            let mut cells = vec![to];
            let mut cur = to;
            while let Some(&prev) = came_from.get(&cur) {
                cells.push(prev);
                cur = prev;
            }
            cells.reverse();
            return Some(Path(cells));
        }
        let gp = g[&p];
        for (_, n) in p.neighbors() {
            if !nav.known.contains(&n) || !nav.step_allowed(n, to) {
                continue;
            }
            let cand = gp + 1;
            if g.get(&n).is_none_or(|&old| cand < old) {
                g.insert(n, cand);
                came_from.insert(n, p);
                seq += 1;
                open.push(Reverse((cand + n.manhattan(to), seq, n)));
            }
        }
    }
    None
}

/// Nearest reachable frontier cell by path distance, ties broken by `(y, x)`.
pub fn select_frontier(nav: &NavGraph, pos: GridPos) -> Option<GridPos> {
    if nav.frontier.is_empty() {
        return None;
    }
    let dist = nav.distances_from(pos);
    nav.frontier
        .iter()
        .filter(|f| **f != pos)
        .filter_map(|f| dist.get(f).map(|d| (*d, f.row_major(), *f)))
        .min()
        .map(|(_, _, f)| f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_nav(w: i32, h: i32) -> NavGraph {
        let mut nav = NavGraph::new();
        let cells: Vec<CellView> = (0..h)
            .flat_map(|y| {
                (0..w).map(move |x| CellView {
                    pos: GridPos::new(x, y),
                    wall: false,
                })
            })
            .collect();
        nav.update(&cells);
        nav
    }

    #[test]
    fn path_to_self_is_valid() {
        let nav = open_nav(2, 2);
        let p = GridPos::new(1, 1);
        let path = plan_path(&nav, p, p).unwrap();
        assert_eq!(path.cost(), 0);
        assert!(path.is_valid(&nav, p));
    }

    #[test]
    fn three_by_three_diagonal_costs_four() {
        let nav = open_nav(3, 3);
        let path = plan_path(&nav, GridPos::new(0, 0), GridPos::new(2, 2)).unwrap();
        assert_eq!(path.cost(), 4);
        assert!(path.is_valid(&nav, GridPos::new(0, 0)));
    }

    #[test]
    fn unknown_target_has_no_path() {
        let nav = open_nav(3, 3);
        assert!(plan_path(&nav, GridPos::new(0, 0), GridPos::new(5, 5)).is_none());
    }

    #[test]
    fn obstacle_target_is_reachable_but_not_traversable() {
        let mut nav = open_nav(5, 1);
        nav.set_obstacles([GridPos::new(2, 0)]);
        let p = plan_path(&nav, GridPos::new(0, 0), GridPos::new(2, 0)).unwrap();
        assert_eq!(p.cost(), 2);
        assert!(plan_path(&nav, GridPos::new(0, 0), GridPos::new(4, 0)).is_none());
    }

    #[test]
    fn empty_frontier_selects_nothing() {
        let mut nav = NavGraph::new();
        let mut cells = Vec::new();
        for y in 0..3 {
            for x in 0..3 {
                cells.push(CellView {
                    pos: GridPos::new(x, y),
                    wall: x != 1 || y != 1,
                });
            }
        }
        nav.update(&cells);
        assert!(nav.frontier().is_empty());
        assert_eq!(select_frontier(&nav, GridPos::new(1, 1)), None);
    }

    #[test]
    fn equidistant_frontiers_prefer_lower_row() {
        // Known: a plus shape around (1,1); every arm tip has unknown beyond.
        let mut nav = NavGraph::new();
        let cells: Vec<CellView> = [(1, 1), (1, 0), (0, 1), (2, 1), (1, 2)]
            .into_iter()
            .map(|(x, y)| CellView {
                pos: GridPos::new(x + 5, y + 5),
                wall: false,
            })
            .collect();
        nav.update(&cells);
        let pick = select_frontier(&nav, GridPos::new(6, 6)).unwrap();
        assert_eq!(pick, GridPos::new(6, 5));
    }

    #[test]
    fn partial_view_leaves_frontier() {
        let nav = open_nav(4, 4);
        assert!(!nav.frontier().is_empty());
    }
}
