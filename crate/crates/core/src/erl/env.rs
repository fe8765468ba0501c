use std::fmt;

use crate::grid::{Cell, Direction, Pos, ProblemMatrix, SolutionMatrix};

/// Timesteps per episode.
pub const EPISODE_LEN: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    MoveN,
    MoveE,
    MoveS,
    MoveW,
    /// Place a surface belt with code 1..=4 (facing N, E, S, W).
    Place1,
    Place2,
    Place3,
    Place4,
}

impl Action {
    pub const ALL: [Action; 8] = [
        Action::MoveN,
        Action::MoveE,
        Action::MoveS,
        Action::MoveW,
        Action::Place1,
        Action::Place2,
        Action::Place3,
        Action::Place4,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }
}

/// 3x3 window around the agent, row-major. Playfield cells show obstacles
/// (-1) or the working placement; cells past the playfield show the problem's
/// ring (walls -2, inserters -3/-5, chests -4/-6) and anything further out
/// reads as wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Observation(pub [i32; 9]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeOver;

impl fmt::Display for EpisodeOver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step after the episode ended")
    }
}

impl std::error::Error for EpisodeOver {}

#[derive(Debug, Clone)]
pub struct BeltEnv {
    problem: ProblemMatrix,
    working: SolutionMatrix,
    agent: Pos,
    timestep: u32,
}

impl BeltEnv {
    /// Fresh episode: empty placement, agent at the centre cell.
    pub fn new(problem: ProblemMatrix) -> BeltEnv {
        let c = (problem.size() / 2) as i32;
        let working = SolutionMatrix::empty(problem.size());
        BeltEnv {
            problem,
            working,
            agent: Pos::new(c, c),
            timestep: 0,
        }
    }

    pub fn problem(&self) -> &ProblemMatrix {
        &self.problem
    }

    pub fn working(&self) -> &SolutionMatrix {
        &self.working
    }

    pub fn agent(&self) -> Pos {
        self.agent
    }

    pub fn timestep(&self) -> u32 {
        self.timestep
    }

    pub fn done(&self) -> bool {
        self.timestep >= EPISODE_LEN
    }

    pub fn into_working(self) -> SolutionMatrix {
        self.working
    }

    pub fn observe(&self) -> Observation {
        let mut window = [0; 9];
        for (k, slot) in window.iter_mut().enumerate() {
            let p = Pos::new(self.agent.x + k as i32 % 3 - 1, self.agent.y + k as i32 / 3 - 1);
            let problem_cell = self.problem.cell_at(p);
            *slot = if problem_cell != Cell::Empty {
                problem_cell.code() as i32
            } else {
                self.working.get(p).map_or(Cell::Wall.code(), Cell::code) as i32
            };
        }
        Observation(window)
    }

    /// Applies one action. Moves clamp to the playfield; placements over an
    /// obstacle do nothing. Returns whether the episode is over.
    pub fn step(&mut self, action: Action) -> Result<bool, EpisodeOver> {
        if self.done() {
            return Err(EpisodeOver);
        }
        let n = self.problem.size() as i32 - 1;
        let move_to = |d: Direction| {
            let p = self.agent.step(d);
            Pos::new(p.x.clamp(0, n), p.y.clamp(0, n))
        };
        match action {
            Action::MoveN => self.agent = move_to(Direction::North),
            Action::MoveE => self.agent = move_to(Direction::East),
            Action::MoveS => self.agent = move_to(Direction::South),
            Action::MoveW => self.agent = move_to(Direction::West),
            place => {
                let dir = Direction::ALL[place.index() - 4];
                if !self.problem.is_obstacle(self.agent) {
                    self.working
                        .set(self.agent, Cell::Belt(dir))
                        .expect("agent stays inside the playfield");
                }
            }
        }
        self.timestep += 1;
        Ok(self.done())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_in_the_centre() {
        assert_eq!(BeltEnv::new(ProblemMatrix::canonical(3).unwrap()).agent(), Pos::new(1, 1));
        assert_eq!(BeltEnv::new(ProblemMatrix::canonical(6).unwrap()).agent(), Pos::new(3, 3));
    }

    #[test]
    fn moves_clamp_at_the_border() {
        let mut env = BeltEnv::new(ProblemMatrix::canonical(3).unwrap());
        env.step(Action::MoveW).unwrap();
        env.step(Action::MoveN).unwrap();
        assert_eq!(env.agent(), Pos::new(0, 0));
        env.step(Action::MoveW).unwrap();
        assert_eq!(env.agent(), Pos::new(0, 0));
        assert_eq!(env.timestep(), 3);
    }

    #[test]
    fn place_writes_belt_code() {
        let mut env = BeltEnv::new(ProblemMatrix::canonical(3).unwrap());
        env.step(Action::Place2).unwrap();
        assert_eq!(env.working().get(Pos::new(1, 1)).unwrap().code(), 2);
        assert_eq!(env.agent(), Pos::new(1, 1));
    }

    #[test]
    fn place_on_obstacle_is_a_no_op() {
        let p = ProblemMatrix::new(3, [Pos::new(1, 1)], Pos::new(2, 0), Pos::new(0, 2)).unwrap();
        let mut env = BeltEnv::new(p);
        env.step(Action::Place1).unwrap();
        assert_eq!(env.working().placements(), 0);
        assert_eq!(env.timestep(), 1);
    }

    #[test]
    fn ports_are_writable() {
        let mut env = BeltEnv::new(ProblemMatrix::canonical(3).unwrap());
        env.step(Action::MoveN).unwrap();
        env.step(Action::MoveE).unwrap();
        env.step(Action::Place4).unwrap();
        assert_eq!(env.working().get(Pos::new(2, 0)).unwrap().code(), 4);
    }

    #[test]
    fn episode_ends_after_twenty_steps() {
        let mut env = BeltEnv::new(ProblemMatrix::canonical(3).unwrap());
        for t in 1..=EPISODE_LEN {
            assert_eq!(env.step(Action::MoveS).unwrap(), t == EPISODE_LEN);
        }
        assert_eq!(env.step(Action::MoveS), Err(EpisodeOver));
    }

    #[test]
    fn observation_window() {
        let mut env = BeltEnv::new(ProblemMatrix::canonical(3).unwrap());
        // Centre of an empty 3x3: the whole playfield is visible.
        assert_eq!(env.observe(), Observation([0; 9]));
        env.step(Action::MoveN).unwrap();
        env.step(Action::MoveE).unwrap();
        env.step(Action::Place3).unwrap();
        // At (2,0): the inserter sits north of the agent.
        assert_eq!(env.observe(), Observation([-2, -3, -2, 0, 3, -2, 0, 0, -2]));
    }

    #[test]
    fn obstacles_take_precedence() {
        let p = ProblemMatrix::new(3, [Pos::new(0, 0)], Pos::new(2, 0), Pos::new(0, 2)).unwrap();
        let env = BeltEnv::new(p);
        assert_eq!(env.observe().0[0], -1);
    }
}
