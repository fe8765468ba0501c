use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GridError;

use super::{Direction, Pos, ProblemMatrix};

/// Upper bound on obstacle re-draws before giving up.
pub const MAX_DRAWS: usize = 1000;

/// Longest straight hop an underground pair can make (gap of four cells).
const MAX_HOP: i32 = 5;

/// Obstacle count for an `n x n` playfield: `ceil(0.15 * n^2)`.
pub fn obstacle_count(size: usize) -> usize {
    (15 * size * size).div_ceil(100)
}

/// Canonical benchmark instance. Obstacle layouts are drawn from `seed` and
/// re-drawn until the ports are connected.
pub fn make_benchmark(
    size: usize,
    with_obstacles: bool,
    seed: u64,
) -> Result<ProblemMatrix, GridError> {
    let base = ProblemMatrix::canonical(size)?;
    if !with_obstacles {
        return Ok(base);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    place_obstacles(&base, &mut rng)
}

/// Random instance for episodic training: ports on distinct border cells,
/// optional obstacles, always connected.
pub fn gen_problem<R: Rng + ?Sized>(
    size: usize,
    with_obstacles: bool,
    rng: &mut R,
) -> Result<ProblemMatrix, GridError> {
    let border = border_cells(size);
    if border.len() < 2 {
        return Err(GridError::InvalidProblem(format!("size {size} has no two border cells")));
    }
    let a = rng.gen_range(0..border.len());
    let mut b = rng.gen_range(0..border.len() - 1);
    if b >= a {
        b += 1;
    }
    let base = ProblemMatrix::new(size, [], border[a], border[b])?;
    if !with_obstacles {
        return Ok(base);
    }
    place_obstacles(&base, rng)
}

fn place_obstacles<R: Rng + ?Sized>(
    base: &ProblemMatrix,
    rng: &mut R,
) -> Result<ProblemMatrix, GridError> {
    let size = base.size();
    let free: Vec<Pos> = (0..size * size)
        .map(|i| base.pos_of(i))
        .filter(|&p| p != base.insert_at() && p != base.extract_at())
        .collect();
    let count = obstacle_count(size).min(free.len());
    for _ in 0..MAX_DRAWS {
        let obstacles = free.choose_multiple(rng, count).copied();
        let candidate = ProblemMatrix::with_sides(
            size,
            obstacles,
            (base.insert_at(), base.insert_side()),
            (base.extract_at(), base.extract_side()),
        )?;
        if is_connected(&candidate) {
            return Ok(candidate);
        }
    }
    Err(GridError::Generation(MAX_DRAWS))
}

/// Border cells in clockwise order starting at the top-left corner.
fn border_cells(size: usize) -> Vec<Pos> {
    let n = size as i32;
    if n == 1 {
        return vec![Pos::new(0, 0)];
    }
    let top = (0..n).map(|x| Pos::new(x, 0));
    let right = (1..n).map(|y| Pos::new(n - 1, y));
    let bottom = (0..n - 1).rev().map(|x| Pos::new(x, n - 1));
    let left = (1..n - 1).rev().map(|y| Pos::new(0, y));
    top.chain(right).chain(bottom).chain(left).collect()
}

/// Breadth-first reachability from the input cell to the output cell over
/// obstacle-free cells, with 4-neighbour steps plus straight hops of 2..=5
/// cells standing in for underground pairs.
pub fn is_connected(problem: &ProblemMatrix) -> bool {
    let size = problem.size();
    let mut seen = vec![false; size * size];
    let mut queue = VecDeque::new();
    let start = problem.insert_at();
    seen[problem.index(start).expect("port inside playfield")] = true;
    queue.push_back(start);
    while let Some(p) = queue.pop_front() {
        if p == problem.extract_at() {
            return true;
        }
        for d in Direction::ALL {
            for k in 1..=MAX_HOP {
                let q = p.offset(d, k);
                let Some(i) = problem.index(q) else { break };
                if !problem.is_obstacle(q) && !seen[i] {
                    seen[i] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    false
}
