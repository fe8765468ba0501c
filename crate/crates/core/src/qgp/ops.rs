use crate::grid::{Cell, Direction, Pos, ProblemMatrix, SolutionMatrix};

/// Writes `object` at `pos`. Obstacles and positions outside the playfield
/// leave the matrix unchanged.
pub fn op_place(
    problem: &ProblemMatrix,
    matrix: &SolutionMatrix,
    pos: Pos,
    object: Cell,
) -> SolutionMatrix {
    let mut out = matrix.clone();
    write(problem, &mut out, pos, object);
    out
}

/// Lays surface belts along an L-shaped route: horizontally from `a` to
/// `(b.x, a.y)`, then vertically to `b`. Each cell faces along its segment and
/// the corner takes the vertical segment's facing. Obstacles on the route are
/// skipped, not routed around.
pub fn op_connect(
    problem: &ProblemMatrix,
    matrix: &SolutionMatrix,
    a: Pos,
    b: Pos,
) -> SolutionMatrix {
    let mut out = matrix.clone();
    for (p, d) in connect_path(a, b) {
        write(problem, &mut out, p, Cell::Belt(d));
    }
    out
}

/// Cells and facings written by [`op_connect`], in route order.
pub fn connect_path(a: Pos, b: Pos) -> Vec<(Pos, Direction)> {
    if a == b {
        return vec![(a, Direction::East)];
    }
    let mut path = Vec::new();
    let horizontal = if b.x > a.x { Direction::East } else { Direction::West };
    let mut x = a.x;
    while x != b.x {
        path.push((Pos::new(x, a.y), horizontal));
        x += horizontal.delta().0;
    }
    if a.y == b.y {
        path.push((b, horizontal));
        return path;
    }
    let vertical = if b.y > a.y { Direction::South } else { Direction::North };
    let mut y = a.y;
    loop {
        path.push((Pos::new(b.x, y), vertical));
        if y == b.y {
            break;
        }
        y += vertical.delta().1;
    }
    path
}

fn write(problem: &ProblemMatrix, m: &mut SolutionMatrix, p: Pos, cell: Cell) {
    if problem.in_playfield(p) && !problem.is_obstacle(p) {
        m.set(p, cell).expect("solution cell inside playfield");
    }
}
