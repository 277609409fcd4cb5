use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

/// A cell coordinate. `x` grows to the east, `y` grows to the south.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPos {
    pub x: i32,
    pub y: i32,
}

impl GridPos {
    pub const fn new(x: i32, y: i32) -> Self {
        GridPos { x, y }
    }

    pub fn step(self, dir: Dir) -> GridPos {
        let (dx, dy) = dir.delta();
        GridPos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: GridPos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// Euclidean distance between cell centres.
    pub fn distance(self, other: GridPos) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }

    /// Sort key for row-major tie breaking: `(y, x)` ascending.
    pub fn row_major(self) -> (i32, i32) {
        (self.y, self.x)
    }

    pub fn neighbors(self) -> impl Iterator<Item = (Dir, GridPos)> {
        Dir::ALL.into_iter().map(move |d| (d, self.step(d)))
    }

    /// Direction of a single 4-connected step from `self` to `next`.
    pub fn dir_to(self, next: GridPos) -> Option<Dir> {
        Dir::ALL.into_iter().find(|d| self.step(*d) == next)
    }
}

impl fmt::Display for GridPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// Cardinal direction. `ALL` is in the canonical tie-break order N, E, S, W.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    #[serde(rename = "N")]
    North,
    #[serde(rename = "E")]
    East,
    #[serde(rename = "S")]
    South,
    #[serde(rename = "W")]
    West,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::East, Dir::South, Dir::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::North => (0, -1),
            Dir::East => (1, 0),
            Dir::South => (0, 1),
            Dir::West => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Floor,
    Wall,
}

pub const MAX_CELLS: usize = 1_000_000;

/// Closed rectangular map of floor and wall cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl Grid {
    /// Builds a grid from `#`/`.` rows. Returns `None` if rows are ragged,
    /// empty, contain other characters, or exceed [`MAX_CELLS`].
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Option<Grid> {
        let height = rows.len();
        let width = rows.first()?.as_ref().chars().count();
        if width == 0 || width.checked_mul(height)? > MAX_CELLS {
            return None;
        }
        let mut cells = Vec::with_capacity(width * height);
        for row in rows {
            let row = row.as_ref();
            if row.chars().count() != width {
                return None;
            }
            for c in row.chars() {
                cells.push(match c {
                    '#' => Cell::Wall,
                    '.' => Cell::Floor,
                    _ => return None,
                });
            }
        }
        Some(Grid { width, height, cells })
    }

    /// An all-floor interior surrounded by a wall ring.
    pub fn open_room(width: usize, height: usize) -> Grid {
        let mut cells = vec![Cell::Floor; width * height];
        for y in 0..height {
            for x in 0..width {
                if x == 0 || y == 0 || x + 1 == width || y + 1 == height {
                    cells[y * width + x] = Cell::Wall;
                }
            }
        }
        Grid { width, height, cells }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, p: GridPos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Cell at `p`; out-of-bounds reads as wall.
    pub fn cell(&self, p: GridPos) -> Cell {
        if self.in_bounds(p) {
            self.cells[p.y as usize * self.width + p.x as usize]
        } else {
            Cell::Wall
        }
    }

    pub fn set(&mut self, p: GridPos, cell: Cell) {
        if self.in_bounds(p) {
            self.cells[p.y as usize * self.width + p.x as usize] = cell;
        }
    }

    pub fn is_wall(&self, p: GridPos) -> bool {
        self.cell(p) == Cell::Wall
    }

    pub fn is_floor(&self, p: GridPos) -> bool {
        self.cell(p) == Cell::Floor
    }

    /// True when every boundary cell is a wall.
    pub fn is_closed(&self) -> bool {
        self.positions().all(|p| {
            let edge = p.x == 0 || p.y == 0 || p.x as usize + 1 == self.width || p.y as usize + 1 == self.height;
            !edge || self.is_wall(p)
        })
    }

    pub fn positions(&self) -> impl Iterator<Item = GridPos> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| GridPos::new(x as i32, y as i32)))
    }

    pub fn rows(&self) -> Vec<String> {
        self.cells
            .chunks(self.width)
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Wall => '#',
                        Cell::Floor => '.',
                    })
                    .collect()
            })
            .collect()
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(Grid::from_rows(&["###", "##"]).is_none());
        assert!(Grid::from_rows(&["#x#"]).is_none());
        assert!(Grid::from_rows::<&str>(&[]).is_none());
    }

    #[test]
    fn open_room_is_closed() {
        let g = Grid::open_room(5, 4);
        assert!(g.is_closed());
        assert!(g.is_floor(GridPos::new(1, 1)));
        assert!(g.is_wall(GridPos::new(4, 1)));
        assert_eq!(g.rows()[0], "#####");
    }

    #[test]
    fn out_of_bounds_reads_as_wall() {
        let g = Grid::open_room(3, 3);
        assert!(g.is_wall(GridPos::new(-1, 1)));
        assert!(g.is_wall(GridPos::new(1, 7)));
    }

    #[test]
    fn dir_round_trip() {
        let p = GridPos::new(3, 3);
        for d in Dir::ALL {
            assert_eq!(p.dir_to(p.step(d)), Some(d));
        }
        assert_eq!(p.dir_to(GridPos::new(4, 4)), None);
    }
}
