//! Integer grid encoding of belt placement problems and their candidate solutions.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row, origin at the
//! top-left of the playfield and `y` growing downward. Problem matrices are
//! stored with a two-cell wall ring around the playfield, so encoded problem
//! files are `(n + 4) x (n + 4)` while solution files are `n x n`.

pub mod generate;
pub mod io;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GridError;

pub use generate::{gen_problem, is_connected, make_benchmark, obstacle_count, MAX_DRAWS};
pub use io::{read_matrix, write_matrix, AnyMatrix, Matrix};

/// Thickness of the wall ring drawn around every playfield.
pub const WALL_THICKNESS: i32 = 2;

/// Smallest and largest legal cell codes.
pub const MIN_CODE: i8 = -6;
pub const MAX_CODE: i8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Direction> {
        Self::ALL.get(i).copied()
    }

    /// Unit step `(dx, dy)` with `y` growing downward.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        Self::ALL[(self.index() + 2) % 4]
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Direction::North => "N",
            Direction::East => "E",
            Direction::South => "S",
            Direction::West => "W",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Pos {
        Pos { x, y }
    }

    pub fn step(self, dir: Direction) -> Pos {
        self.offset(dir, 1)
    }

    pub fn offset(self, dir: Direction, k: i32) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx * k, self.y + dy * k)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Decoded value of one grid cell.
///
/// Codes: `0` empty, `1..=4` belt facing N/E/S/W, `5..=8` underground belt
/// facing N/E/S/W, `-1` obstacle, `-2` wall, `-3` input inserter, `-4` input
/// chest, `-5` output inserter, `-6` output chest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Cell {
    #[default]
    Empty,
    Belt(Direction),
    Underground(Direction),
    Obstacle,
    Wall,
    InputInserter,
    InputChest,
    OutputInserter,
    OutputChest,
}

impl Cell {
    pub fn code(self) -> i8 {
        match self {
            Cell::Empty => 0,
            Cell::Belt(d) => 1 + d as i8,
            Cell::Underground(d) => 5 + d as i8,
            Cell::Obstacle => -1,
            Cell::Wall => -2,
            Cell::InputInserter => -3,
            Cell::InputChest => -4,
            Cell::OutputInserter => -5,
            Cell::OutputChest => -6,
        }
    }

    pub fn from_code(code: i8) -> Option<Cell> {
        Some(match code {
            0 => Cell::Empty,
            1..=4 => Cell::Belt(Direction::ALL[(code - 1) as usize]),
            5..=8 => Cell::Underground(Direction::ALL[(code - 5) as usize]),
            -1 => Cell::Obstacle,
            -2 => Cell::Wall,
            -3 => Cell::InputInserter,
            -4 => Cell::InputChest,
            -5 => Cell::OutputInserter,
            -6 => Cell::OutputChest,
            _ => return None,
        })
    }

    /// Solution codes are `0..=8`; everything else belongs to problems.
    pub fn is_solution_cell(self) -> bool {
        self.code() >= 0
    }

    /// True for belts and underground belts (code > 0).
    pub fn is_placement(self) -> bool {
        self.code() > 0
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Cell::Belt(d) | Cell::Underground(d) => Some(d),
            _ => None,
        }
    }
}

/// A benchmark instance: an `n x n` playfield with obstacles, an input port and
/// an output port on the playfield border.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProblemMatrix {
    size: usize,
    obstacles: Vec<bool>,
    insert_at: Pos,
    insert_side: Direction,
    extract_at: Pos,
    extract_side: Direction,
}

impl ProblemMatrix {
    /// Builds a problem, placing the inserter on the default outward side of
    /// each port cell.
    pub fn new(
        size: usize,
        obstacles: impl IntoIterator<Item = Pos>,
        insert_at: Pos,
        extract_at: Pos,
    ) -> Result<ProblemMatrix, GridError> {
        let insert_side = outward_side(size, insert_at)?;
        let extract_side = outward_side(size, extract_at)?;
        Self::with_sides(size, obstacles, (insert_at, insert_side), (extract_at, extract_side))
    }

    pub fn with_sides(
        size: usize,
        obstacles: impl IntoIterator<Item = Pos>,
        insert: (Pos, Direction),
        extract: (Pos, Direction),
    ) -> Result<ProblemMatrix, GridError> {
        if size < 2 {
            return Err(GridError::InvalidProblem(format!("size {size} is below 2")));
        }
        let mut problem = ProblemMatrix {
            size,
            obstacles: vec![false; size * size],
            insert_at: insert.0,
            insert_side: insert.1,
            extract_at: extract.0,
            extract_side: extract.1,
        };
        for p in obstacles {
            let i = problem.index(p).ok_or(GridError::OutOfBounds(p))?;
            problem.obstacles[i] = true;
        }
        problem.validate()?;
        Ok(problem)
    }

    /// Obstacle-free instance with the input at the top-right and the output at
    /// the bottom-left of the playfield.
    pub fn canonical(size: usize) -> Result<ProblemMatrix, GridError> {
        let n = size as i32;
        Self::new(size, [], Pos::new(n - 1, 0), Pos::new(0, n - 1))
    }

    fn validate(&self) -> Result<(), GridError> {
        for (p, side) in [
            (self.insert_at, self.insert_side),
            (self.extract_at, self.extract_side),
        ] {
            if !self.in_playfield(p) {
                return Err(GridError::OutOfBounds(p));
            }
            if self.in_playfield(p.step(side)) {
                return Err(GridError::InvalidProblem(format!(
                    "port at {p} does not face the wall on side {}",
                    side.short_name()
                )));
            }
            if self.is_obstacle(p) {
                return Err(GridError::InvalidProblem(format!("port at {p} is obstructed")));
            }
        }
        if self.insert_at == self.extract_at {
            return Err(GridError::InvalidProblem(
                "input and output share a cell".to_string(),
            ));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn insert_at(&self) -> Pos {
        self.insert_at
    }

    pub fn extract_at(&self) -> Pos {
        self.extract_at
    }

    pub fn insert_side(&self) -> Direction {
        self.insert_side
    }

    pub fn extract_side(&self) -> Direction {
        self.extract_side
    }

    pub fn in_playfield(&self, p: Pos) -> bool {
        let n = self.size as i32;
        (0..n).contains(&p.x) && (0..n).contains(&p.y)
    }

    /// Row-major index of a playfield cell.
    pub fn index(&self, p: Pos) -> Option<usize> {
        self.in_playfield(p)
            .then(|| p.y as usize * self.size + p.x as usize)
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new((index % self.size) as i32, (index / self.size) as i32)
    }

    pub fn is_obstacle(&self, p: Pos) -> bool {
        self.index(p).is_some_and(|i| self.obstacles[i])
    }

    pub fn obstacles(&self) -> impl Iterator<Item = Pos> + '_ {
        self.obstacles
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| self.pos_of(i))
    }

    pub fn obstacle_count(&self) -> usize {
        self.obstacles.iter().filter(|&&o| o).count()
    }

    /// Problem cell at any coordinate, including the wall ring. Anything beyond
    /// the encoded area reads as a wall.
    pub fn cell_at(&self, p: Pos) -> Cell {
        if self.in_playfield(p) {
            return if self.is_obstacle(p) { Cell::Obstacle } else { Cell::Empty };
        }
        let inserter = self.insert_at.step(self.insert_side);
        let receiver = self.extract_at.step(self.extract_side);
        if p == inserter {
            Cell::InputInserter
        } else if p == inserter.step(self.insert_side) {
            Cell::InputChest
        } else if p == receiver {
            Cell::OutputInserter
        } else if p == receiver.step(self.extract_side) {
            Cell::OutputChest
        } else {
            Cell::Wall
        }
    }

    /// Full encoded matrix including the wall ring.
    pub fn to_matrix(&self) -> Matrix {
        let side = self.size + 2 * WALL_THICKNESS as usize;
        let mut data = Vec::with_capacity(side * side);
        for row in 0..side as i32 {
            for col in 0..side as i32 {
                let p = Pos::new(col - WALL_THICKNESS, row - WALL_THICKNESS);
                data.push(self.cell_at(p).code());
            }
        }
        Matrix::new(side, side, data)
    }

    /// Parses an encoded problem matrix (playfield plus wall ring).
    pub fn from_matrix(m: &Matrix) -> Result<ProblemMatrix, GridError> {
        let ring = 2 * WALL_THICKNESS as usize;
        if m.rows() != m.cols() || m.rows() < ring + 2 {
            return Err(GridError::InvalidProblem(format!(
                "problem matrix must be square with side >= {}, got {}x{}",
                ring + 2,
                m.rows(),
                m.cols()
            )));
        }
        let size = m.rows() - ring;
        let n = size as i32;
        let mut obstacles = Vec::new();
        let mut inserter = None;
        let mut receiver = None;
        for row in 0..m.rows() {
            for col in 0..m.cols() {
                let p = Pos::new(col as i32 - WALL_THICKNESS, row as i32 - WALL_THICKNESS);
                let cell = Cell::from_code(m.get(row, col)).ok_or(GridError::CodeOutOfRange {
                    code: m.get(row, col) as i64,
                    min: MIN_CODE,
                    max: MAX_CODE,
                })?;
                let inside = (0..n).contains(&p.x) && (0..n).contains(&p.y);
                match (cell, inside) {
                    (Cell::Obstacle, true) => obstacles.push(p),
                    (Cell::Empty, true) => {}
                    (Cell::InputInserter, false) => set_once(&mut inserter, p, "input inserter")?,
                    (Cell::OutputInserter, false) => {
                        set_once(&mut receiver, p, "output inserter")?
                    }
                    (Cell::Wall | Cell::InputChest | Cell::OutputChest, false) => {}
                    (other, _) => {
                        return Err(GridError::InvalidProblem(format!(
                            "code {} not allowed at {p}",
                            other.code()
                        )))
                    }
                }
            }
        }
        let inserter =
            inserter.ok_or_else(|| GridError::InvalidProblem("no input inserter".into()))?;
        let receiver =
            receiver.ok_or_else(|| GridError::InvalidProblem("no output inserter".into()))?;
        let port = |at: Pos, what: &str| -> Result<(Pos, Direction), GridError> {
            Direction::ALL
                .iter()
                .map(|&d| (at.step(d.opposite()), d))
                .find(|&(q, _)| (0..n).contains(&q.x) && (0..n).contains(&q.y))
                .ok_or_else(|| GridError::InvalidProblem(format!("{what} at {at} is not adjacent to the playfield")))
        };
        let problem = ProblemMatrix::with_sides(
            size,
            obstacles,
            port(inserter, "input inserter")?,
            port(receiver, "output inserter")?,
        )?;
        if problem.to_matrix() != *m {
            return Err(GridError::InvalidProblem(
                "chests or walls do not match the port layout".into(),
            ));
        }
        Ok(problem)
    }
}

fn set_once(slot: &mut Option<Pos>, p: Pos, what: &str) -> Result<(), GridError> {
    if slot.replace(p).is_some() {
        return Err(GridError::InvalidProblem(format!("more than one {what}")));
    }
    Ok(())
}

/// Default wall side for a port cell: north on the top row, then east, south, west.
pub fn outward_side(size: usize, p: Pos) -> Result<Direction, GridError> {
    let n = size as i32;
    if !((0..n).contains(&p.x) && (0..n).contains(&p.y)) {
        return Err(GridError::OutOfBounds(p));
    }
    if p.y == 0 {
        Ok(Direction::North)
    } else if p.x == n - 1 {
        Ok(Direction::East)
    } else if p.y == n - 1 {
        Ok(Direction::South)
    } else if p.x == 0 {
        Ok(Direction::West)
    } else {
        Err(GridError::InvalidProblem(format!(
            "port at {p} is not on the playfield border"
        )))
    }
}

/// Candidate placement overlay for a problem: one code in `0..=8` per cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SolutionMatrix {
    size: usize,
    cells: Vec<Cell>,
}

impl SolutionMatrix {
    pub fn empty(size: usize) -> SolutionMatrix {
        SolutionMatrix {
            size,
            cells: vec![Cell::Empty; size * size],
        }
    }

    /// Builds a solution from row-major codes.
    pub fn from_codes(size: usize, codes: &[i8]) -> Result<SolutionMatrix, GridError> {
        if codes.len() != size * size {
            return Err(GridError::RowCount {
                expected: size * size,
                found: codes.len(),
            });
        }
        let cells = codes
            .iter()
            .map(|&c| match Cell::from_code(c) {
                Some(cell) if cell.is_solution_cell() => Ok(cell),
                _ => Err(GridError::CodeOutOfRange {
                    code: c as i64,
                    min: 0,
                    max: MAX_CODE,
                }),
            })
            .collect::<Result<_, _>>()?;
        Ok(SolutionMatrix { size, cells })
    }

    pub fn from_matrix(m: &Matrix) -> Result<SolutionMatrix, GridError> {
        if m.rows() != m.cols() {
            return Err(GridError::BadDimensions(format!(
                "solution must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Self::from_codes(m.rows(), m.data())
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(self.size, self.size, self.codes())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn codes(&self) -> Vec<i8> {
        self.cells.iter().map(|c| c.code()).collect()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn index(&self, p: Pos) -> Option<usize> {
        let n = self.size as i32;
        ((0..n).contains(&p.x) && (0..n).contains(&p.y))
            .then(|| p.y as usize * self.size + p.x as usize)
    }

    pub fn get(&self, p: Pos) -> Option<Cell> {
        self.index(p).map(|i| self.cells[i])
    }

    /// Writes a cell. Problem-only cells are rejected.
    pub fn set(&mut self, p: Pos, cell: Cell) -> Result<(), GridError> {
        if !cell.is_solution_cell() {
            return Err(GridError::CodeOutOfRange {
                code: cell.code() as i64,
                min: 0,
                max: MAX_CODE,
            });
        }
        let i = self.index(p).ok_or(GridError::OutOfBounds(p))?;
        self.cells[i] = cell;
        Ok(())
    }

    pub fn set_index(&mut self, index: usize, cell: Cell) {
        debug_assert!(cell.is_solution_cell());
        self.cells[index] = cell;
    }

    pub fn placements(&self) -> usize {
        self.cells.iter().filter(|c| c.is_placement()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HardConstraint {
    /// At most one object per cell; nothing placed on an obstacle.
    Hc1,
    /// At least one belt or underground belt placed.
    Hc2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violated: Vec<HardConstraint>,
    pub offending_positions: Vec<Pos>,
}

/// Checks both hard constraints. The one-object-per-cell half of HC1 holds by
/// construction since every cell stores a single code.
pub fn check_feasible(
    problem: &ProblemMatrix,
    solution: &SolutionMatrix,
) -> Result<FeasibilityReport, GridError> {
    if problem.size() != solution.size() {
        return Err(GridError::DimensionMismatch {
            problem: problem.size(),
            rows: solution.size(),
            cols: solution.size(),
        });
    }
    let mut violated = Vec::new();
    let offending_positions: Vec<Pos> = solution
        .cells()
        .iter()
        .enumerate()
        .filter(|(i, c)| c.is_placement() && problem.obstacles[*i])
        .map(|(i, _)| problem.pos_of(i))
        .collect();
    if !offending_positions.is_empty() {
        violated.push(HardConstraint::Hc1);
    }
    if solution.placements() == 0 {
        violated.push(HardConstraint::Hc2);
    }
    Ok(FeasibilityReport {
        feasible: violated.is_empty(),
        violated,
        offending_positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_bijection() {
        for code in MIN_CODE..=MAX_CODE {
            let cell = Cell::from_code(code).unwrap();
            assert_eq!(cell.code(), code);
        }
        assert_eq!(Cell::from_code(9), None);
        assert_eq!(Cell::from_code(-7), None);
        let solution_codes = (MIN_CODE..=MAX_CODE)
            .filter(|&c| Cell::from_code(c).unwrap().is_solution_cell())
            .count();
        assert_eq!(solution_codes, 9);
        assert_eq!(Cell::Belt(Direction::East).code(), 2);
        assert_eq!(Cell::Underground(Direction::West).code(), 8);
    }

    #[test]
    fn directions_point_the_right_way() {
        assert_eq!(Direction::North.delta(), (0, -1));
        assert_eq!(Direction::East.delta(), (1, 0));
        assert_eq!(Direction::South.delta(), (0, 1));
        assert_eq!(Direction::West.delta(), (-1, 0));
        for d in Direction::ALL {
            assert_eq!(d.opposite().opposite(), d);
        }
    }

    #[test]
    fn all_empty_violates_hc2() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let r = check_feasible(&p, &SolutionMatrix::empty(3)).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.violated, vec![HardConstraint::Hc2]);
    }

    #[test]
    fn single_belt_is_feasible() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let mut s = SolutionMatrix::empty(3);
        s.set(Pos::new(1, 1), Cell::from_code(2).unwrap()).unwrap();
        assert!(check_feasible(&p, &s).unwrap().feasible);
    }

    #[test]
    fn belt_on_obstacle_violates_hc1() {
        let p = ProblemMatrix::new(3, [Pos::new(1, 1)], Pos::new(2, 0), Pos::new(0, 2)).unwrap();
        let mut s = SolutionMatrix::empty(3);
        s.set(Pos::new(1, 1), Cell::from_code(1).unwrap()).unwrap();
        let r = check_feasible(&p, &s).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.violated, vec![HardConstraint::Hc1]);
        assert_eq!(r.offending_positions, vec![Pos::new(1, 1)]);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let p = ProblemMatrix::canonical(3).unwrap();
        assert!(matches!(
            check_feasible(&p, &SolutionMatrix::empty(6)),
            Err(GridError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn problem_layout_validation() {
        assert!(ProblemMatrix::new(3, [], Pos::new(1, 1), Pos::new(0, 2)).is_err());
        assert!(ProblemMatrix::new(3, [], Pos::new(2, 0), Pos::new(2, 0)).is_err());
        assert!(ProblemMatrix::new(3, [Pos::new(2, 0)], Pos::new(2, 0), Pos::new(0, 2)).is_err());
        assert!(ProblemMatrix::new(3, [Pos::new(3, 0)], Pos::new(2, 0), Pos::new(0, 2)).is_err());
    }

    #[test]
    fn canonical_ports_and_ring() {
        let p = ProblemMatrix::canonical(3).unwrap();
        assert_eq!(p.insert_at(), Pos::new(2, 0));
        assert_eq!(p.extract_at(), Pos::new(0, 2));
        assert_eq!(p.cell_at(Pos::new(2, -1)), Cell::InputInserter);
        assert_eq!(p.cell_at(Pos::new(2, -2)), Cell::InputChest);
        assert_eq!(p.cell_at(Pos::new(0, 3)), Cell::OutputInserter);
        assert_eq!(p.cell_at(Pos::new(0, 4)), Cell::OutputChest);
        assert_eq!(p.cell_at(Pos::new(-1, 0)), Cell::Wall);
        assert_eq!(p.cell_at(Pos::new(40, 40)), Cell::Wall);
        let m = p.to_matrix();
        assert_eq!((m.rows(), m.cols()), (7, 7));
        assert_eq!(ProblemMatrix::from_matrix(&m).unwrap(), p);
    }

    #[test]
    fn side_ports_round_trip() {
        let p = ProblemMatrix::with_sides(
            4,
            [Pos::new(1, 2)],
            (Pos::new(3, 0), Direction::East),
            (Pos::new(0, 2), Direction::West),
        )
        .unwrap();
        assert_eq!(ProblemMatrix::from_matrix(&p.to_matrix()).unwrap(), p);
    }

    #[test]
    fn solution_rejects_problem_codes() {
        let mut s = SolutionMatrix::empty(2);
        assert!(s.set(Pos::new(0, 0), Cell::Obstacle).is_err());
        assert!(s.set(Pos::new(2, 0), Cell::Empty).is_err());
        assert!(SolutionMatrix::from_codes(2, &[0, 0, 0, -1]).is_err());
    }
}
