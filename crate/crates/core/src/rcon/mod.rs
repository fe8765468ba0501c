//! Remote console client that evaluates placements inside a running game.
//!
//! The wire format is the common source-style remote console protocol. A
//! [`RconBackend`] implements [`EvalBackend`] so any solver can use a live
//! server in place of the native simulator.

pub mod commands;
pub mod fake;
pub mod packet;
pub mod session;

use std::sync::Mutex;
use std::time::Duration;

use crate::backend::{EvalBackend, Evaluation};
use crate::error::{EvalError, RconError};
use crate::grid::{ProblemMatrix, SolutionMatrix};
use crate::sim::{SimConfig, Weights};

pub use commands::{emit_commands, parse_counts};
pub use packet::Packet;
pub use session::{Session, DEFAULT_TIMEOUT};

pub const ENV_HOST: &str = "BELTFORGE_RCON_HOST";
pub const ENV_PORT: &str = "BELTFORGE_RCON_PORT";
pub const ENV_PASSWORD: &str = "BELTFORGE_RCON_PASSWORD";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RconConfig {
    pub host: String,
    pub port: u16,
    pub password: String,
    pub timeout: Duration,
}

impl Default for RconConfig {
    fn default() -> Self {
        RconConfig {
            host: "127.0.0.1".into(),
            port: 27015,
            password: String::new(),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl RconConfig {
    /// Defaults overridden by the `BELTFORGE_RCON_*` environment variables.
    pub fn from_env() -> Result<RconConfig, RconError> {
        let mut c = RconConfig::default();
        if let Ok(h) = std::env::var(ENV_HOST) {
            c.host = h;
        }
        if let Ok(p) = std::env::var(ENV_PORT) {
            c.port = p
                .parse()
                .map_err(|_| RconError::Parse(format!("{ENV_PORT}={p}")))?;
        }
        if let Ok(pw) = std::env::var(ENV_PASSWORD) {
            c.password = pw;
        }
        Ok(c)
    }

    pub fn connect(&self) -> Result<Session, RconError> {
        Session::connect((self.host.as_str(), self.port), &self.password, self.timeout)
    }
}

/// Sends one layout and reads back `(items_in, items_out)`.
pub fn remote_counts(
    session: &mut Session,
    problem: &ProblemMatrix,
    solution: &SolutionMatrix,
    config: &SimConfig,
) -> Result<(u32, u32), RconError> {
    let mut last = String::new();
    for cmd in emit_commands(problem, solution, config) {
        last = session.exec(&cmd)?;
    }
    parse_counts(&last).ok_or(RconError::Parse(last))
}

/// Scores a placement on the server. Infeasible placements score 0 without
/// any network traffic.
pub fn remote_evaluate(
    session: &mut Session,
    problem: &ProblemMatrix,
    solution: &SolutionMatrix,
    config: &SimConfig,
    weights: &Weights,
) -> Result<Evaluation, EvalError> {
    SessionBackend(Mutex::new(session)).evaluate(problem, solution, config, weights)
}

struct SessionBackend<'a>(Mutex<&'a mut Session>);

impl EvalBackend for SessionBackend<'_> {
    fn run_counts(
        &self,
        problem: &ProblemMatrix,
        solution: &SolutionMatrix,
        config: &SimConfig,
    ) -> Result<(u32, u32), EvalError> {
        let mut s = self.0.lock().unwrap_or_else(|e| e.into_inner());
        Ok(remote_counts(&mut s, problem, solution, config)?)
    }
}

/// Evaluation backend over one shared session. Concurrent callers queue on
/// the session lock; open several backends for parallel evaluation.
#[derive(Debug)]
pub struct RconBackend {
    session: Mutex<Session>,
}

impl RconBackend {
    pub fn new(session: Session) -> RconBackend {
        RconBackend {
            session: Mutex::new(session),
        }
    }

    pub fn connect(config: &RconConfig) -> Result<RconBackend, RconError> {
        Ok(RconBackend::new(config.connect()?))
    }
}

impl EvalBackend for RconBackend {
    fn run_counts(
        &self,
        problem: &ProblemMatrix,
        solution: &SolutionMatrix,
        config: &SimConfig,
    ) -> Result<(u32, u32), EvalError> {
        let mut s = self.session.lock().unwrap_or_else(|e| e.into_inner());
        Ok(remote_counts(&mut s, problem, solution, config)?)
    }
}
