use crate::world::{Grid, GridPos};

/// Every cell touched by the segment between the centres of `a` and `b`,
/// in walk order from `a`. When the segment passes exactly through a cell
/// corner, both cells flanking the corner are included.
pub fn supercover(a: GridPos, b: GridPos) -> Vec<GridPos> {
    let dx = b.x.abs_diff(a.x) as i64;
    let dy = b.y.abs_diff(a.y) as i64;
    let sx = (b.x - a.x).signum();
    let sy = (b.y - a.y).signum();
    let mut out = Vec::with_capacity((dx + dy + 1) as usize);
    let mut p = a;
    out.push(p);
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < dx || iy < dy {
        // Compare where the segment crosses the next vertical vs horizontal
        // cell edge: (0.5 + ix) / dx against (0.5 + iy) / dy.
        let decision = (1 + 2 * ix) * dy - (1 + 2 * iy) * dx;
        if decision == 0 {
            out.push(GridPos::new(p.x + sx, p.y));
            out.push(GridPos::new(p.x, p.y + sy));
            p = GridPos::new(p.x + sx, p.y + sy);
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            p = GridPos::new(p.x + sx, p.y);
            ix += 1;
        } else {
            p = GridPos::new(p.x, p.y + sy);
            iy += 1;
        }
        out.push(p);
    }
    out
}

/// True iff no wall lies on the supercover line strictly between `a` and `b`.
pub fn line_of_sight(grid: &Grid, a: GridPos, b: GridPos) -> bool {
    line_of_sight_by(a, b, |p| grid.is_wall(p))
}

/// Line of sight against an arbitrary wall predicate.
pub fn line_of_sight_by(a: GridPos, b: GridPos, is_wall: impl Fn(GridPos) -> bool) -> bool {
    supercover(a, b).into_iter().all(|p| p == a || p == b || !is_wall(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_cell_is_visible() {
        let g = Grid::open_room(3, 3);
        let p = GridPos::new(1, 1);
        assert!(line_of_sight(&g, p, p));
        assert_eq!(supercover(p, p), vec![p]);
    }

    #[test]
    fn wall_in_row_blocks() {
        let mut g = Grid::open_room(7, 3);
        g.set(GridPos::new(3, 1), crate::world::Cell::Wall);
        assert!(!line_of_sight(&g, GridPos::new(1, 1), GridPos::new(5, 1)));
        assert!(line_of_sight(&g, GridPos::new(1, 1), GridPos::new(2, 1)));
    }

    #[test]
    fn endpoints_never_block() {
        let g = Grid::open_room(4, 3);
        assert!(line_of_sight(&g, GridPos::new(1, 1), GridPos::new(0, 1)));
    }

    #[test]
    fn diagonal_corner_includes_both_flanks() {
        let cells = supercover(GridPos::new(0, 0), GridPos::new(1, 1));
        assert_eq!(
            cells,
            vec![
                GridPos::new(0, 0),
                GridPos::new(1, 0),
                GridPos::new(0, 1),
                GridPos::new(1, 1)
            ]
        );
    }

    #[test]
    fn shallow_line_walks_contiguously() {
        let cells = supercover(GridPos::new(0, 0), GridPos::new(4, 1));
        assert_eq!(cells.first(), Some(&GridPos::new(0, 0)));
        assert_eq!(cells.last(), Some(&GridPos::new(4, 1)));
        for pair in cells.windows(2) {
            assert_eq!(pair[0].manhattan(pair[1]), 1);
        }
    }
}
