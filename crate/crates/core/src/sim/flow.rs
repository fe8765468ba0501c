use crate::grid::{Cell, Direction, Pos, ProblemMatrix, SolutionMatrix};

/// Longest underground hop: the exit may sit at most five cells ahead.
pub const MAX_UNDERGROUND_REACH: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Surface belt or underground exit; feeds the next cell in its direction.
    Surface,
    /// Underground entry; feeds its paired exit.
    Entry,
    Exit,
    /// Not a carrier: empty ground, obstacles, unpaired undergrounds.
    Inert,
}

/// Per-cell successor links derived from a placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGraph {
    size: usize,
    succ: Vec<Option<usize>>,
    roles: Vec<Role>,
    facing: Vec<Option<Direction>>,
    underground_pairs: Vec<(Pos, Pos)>,
}

impl FlowGraph {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn successor(&self, index: usize) -> Option<usize> {
        self.succ[index]
    }

    pub fn successors(&self) -> &[Option<usize>] {
        &self.succ
    }

    pub fn role(&self, index: usize) -> Role {
        self.roles[index]
    }

    /// Cells that can hold an item: belts and paired underground ends.
    pub fn is_carrier(&self, index: usize) -> bool {
        self.roles[index] != Role::Inert
    }

    pub fn facing(&self, index: usize) -> Option<Direction> {
        self.facing[index]
    }

    pub fn underground_pairs(&self) -> &[(Pos, Pos)] {
        &self.underground_pairs
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new((index % self.size) as i32, (index / self.size) as i32)
    }

    fn index(&self, p: Pos) -> Option<usize> {
        let n = self.size as i32;
        ((0..n).contains(&p.x) && (0..n).contains(&p.y))
            .then(|| p.y as usize * self.size + p.x as usize)
    }
}

/// Derives successor links.
///
/// Undergrounds pair greedily in row-major scan order: an unpaired
/// underground facing `d` claims the nearest unpaired same-facing underground
/// `k` cells ahead, `1 <= k <= 5`. Anything left unpaired is inert. A carrier's
/// successor is the next carrier in its facing direction, if any.
pub fn build_flow(problem: &ProblemMatrix, solution: &SolutionMatrix) -> FlowGraph {
    let n = solution.size();
    let cells = solution.cells();
    let mut roles = vec![Role::Inert; n * n];
    let mut facing = vec![None; n * n];
    let mut graph = FlowGraph {
        size: n,
        succ: vec![None; n * n],
        roles: Vec::new(),
        facing: Vec::new(),
        underground_pairs: Vec::new(),
    };
    let blocked = |i: usize| problem.is_obstacle(problem.pos_of(i));

    for i in 0..n * n {
        if blocked(i) {
            continue;
        }
        if let Cell::Belt(d) = cells[i] {
            roles[i] = Role::Surface;
            facing[i] = Some(d);
        }
    }

    let mut exit_of = vec![None; n * n];
    for i in 0..n * n {
        let Cell::Underground(d) = cells[i] else { continue };
        if roles[i] != Role::Inert || blocked(i) {
            continue;
        }
        let p = graph.pos_of(i);
        for k in 1..=MAX_UNDERGROUND_REACH {
            let Some(j) = graph.index(p.offset(d, k)) else { break };
            if cells[j] == Cell::Underground(d) && roles[j] == Role::Inert && !blocked(j) {
                roles[i] = Role::Entry;
                roles[j] = Role::Exit;
                facing[i] = Some(d);
                facing[j] = Some(d);
                exit_of[i] = Some(j);
                graph.underground_pairs.push((p, graph.pos_of(j)));
                break;
            }
        }
    }

    for i in 0..n * n {
        graph.succ[i] = match roles[i] {
            Role::Inert => None,
            Role::Entry => exit_of[i],
            Role::Surface | Role::Exit => {
                let d = facing[i].expect("carrier has a facing");
                graph
                    .index(graph.pos_of(i).step(d))
                    .filter(|&j| roles[j] != Role::Inert)
            }
        };
    }
    graph.roles = roles;
    graph.facing = facing;
    graph
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ug(d: Direction) -> Cell {
        Cell::Underground(d)
    }

    fn solution(size: usize, cells: &[(Pos, Cell)]) -> SolutionMatrix {
        let mut s = SolutionMatrix::empty(size);
        for &(p, c) in cells {
            s.set(p, c).unwrap();
        }
        s
    }

    #[test]
    fn gap_of_four_pairs() {
        let p = ProblemMatrix::canonical(12).unwrap();
        let s = solution(
            12,
            &[
                (Pos::new(0, 0), ug(Direction::East)),
                (Pos::new(5, 0), ug(Direction::East)),
            ],
        );
        let g = build_flow(&p, &s);
        assert_eq!(g.underground_pairs(), &[(Pos::new(0, 0), Pos::new(5, 0))]);
        assert_eq!(g.successor(0), Some(5));
        assert_eq!(g.role(5), Role::Exit);
    }

    #[test]
    fn gap_of_five_is_inert() {
        let p = ProblemMatrix::canonical(12).unwrap();
        let s = solution(
            12,
            &[
                (Pos::new(0, 0), ug(Direction::East)),
                (Pos::new(6, 0), ug(Direction::East)),
            ],
        );
        let g = build_flow(&p, &s);
        assert!(g.underground_pairs().is_empty());
        assert_eq!(g.successor(0), None);
        assert_eq!(g.successor(6), None);
        assert!(!g.is_carrier(0) && !g.is_carrier(6));
    }

    #[test]
    fn direction_mismatch_is_inert() {
        let p = ProblemMatrix::canonical(6).unwrap();
        let s = solution(
            6,
            &[
                (Pos::new(0, 0), ug(Direction::East)),
                (Pos::new(3, 0), ug(Direction::West)),
            ],
        );
        let g = build_flow(&p, &s);
        assert!(g.underground_pairs().is_empty());
    }

    #[test]
    fn pairing_is_greedy_nearest() {
        let p = ProblemMatrix::canonical(6).unwrap();
        let s = solution(
            6,
            &[
                (Pos::new(0, 1), ug(Direction::East)),
                (Pos::new(2, 1), ug(Direction::East)),
                (Pos::new(4, 1), ug(Direction::East)),
            ],
        );
        let g = build_flow(&p, &s);
        assert_eq!(g.underground_pairs(), &[(Pos::new(0, 1), Pos::new(2, 1))]);
        assert!(!g.is_carrier(g.index(Pos::new(4, 1)).unwrap()));
    }

    #[test]
    fn westward_pair_found_from_the_east_end() {
        let p = ProblemMatrix::canonical(6).unwrap();
        let s = solution(
            6,
            &[
                (Pos::new(0, 2), ug(Direction::West)),
                (Pos::new(3, 2), ug(Direction::West)),
            ],
        );
        let g = build_flow(&p, &s);
        assert_eq!(g.underground_pairs(), &[(Pos::new(3, 2), Pos::new(0, 2))]);
    }

    #[test]
    fn belt_into_wall_or_ground_has_no_successor() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let s = solution(
            3,
            &[
                (Pos::new(2, 0), Cell::Belt(Direction::North)),
                (Pos::new(1, 1), Cell::Belt(Direction::East)),
                (Pos::new(0, 0), Cell::Belt(Direction::East)),
                (Pos::new(1, 0), Cell::Belt(Direction::South)),
            ],
        );
        let g = build_flow(&p, &s);
        assert_eq!(g.successor(2), None);
        assert_eq!(g.successor(4), None);
        assert_eq!(g.successor(0), Some(1));
        assert_eq!(g.successor(1), Some(4));
    }

    #[test]
    fn surface_belts_cross_an_underground_gap() {
        let p = ProblemMatrix::canonical(6).unwrap();
        let s = solution(
            6,
            &[
                (Pos::new(0, 3), ug(Direction::East)),
                (Pos::new(2, 3), Cell::Belt(Direction::South)),
                (Pos::new(4, 3), ug(Direction::East)),
            ],
        );
        let g = build_flow(&p, &s);
        assert_eq!(g.underground_pairs(), &[(Pos::new(0, 3), Pos::new(4, 3))]);
        assert_eq!(g.role(g.index(Pos::new(2, 3)).unwrap()), Role::Surface);
    }
}
