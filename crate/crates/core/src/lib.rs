//! Conveyor-belt placement on small grids: problem encoding, a deterministic
//! belt simulator used as the fitness function, three metaheuristic solvers
//! (parallel simulated annealing, linear-genome GP and evolved register-machine
//! agents), a remote console client that can stand in for the simulator, and
//! the experiment harness behind the `beltforge` CLI.

pub mod backend;
pub mod erl;
pub mod error;
pub mod exec;
pub mod grid;
pub mod harness;
pub mod psa;
pub mod qgp;
pub mod rcon;
pub mod sim;

pub use backend::{EvalBackend, Evaluation, SimBackend};
pub use error::{ConfigError, EvalError, GridError, RconError};
pub use exec::Exec;
pub use grid::{Cell, Direction, Pos, ProblemMatrix, SolutionMatrix};
pub use sim::{SimConfig, Weights};
