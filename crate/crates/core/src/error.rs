use thiserror::Error;

use crate::grid::Pos;

/// Errors raised while reading, writing or validating grid matrices.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("dimension mismatch: problem is {problem}x{problem}, solution is {rows}x{cols}")]
    DimensionMismatch {
        problem: usize,
        rows: usize,
        cols: usize,
    },
    #[error("malformed dimension line: {0:?}")]
    BadDimensions(String),
    #[error("line {line}: invalid integer token {token:?}")]
    BadToken { line: usize, token: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    RowLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("cell code {code} out of range {min}..={max}")]
    CodeOutOfRange { code: i64, min: i8, max: i8 },
    #[error("position {0} lies outside the playfield")]
    OutOfBounds(Pos),
    #[error("invalid problem layout: {0}")]
    InvalidProblem(String),
    #[error("no connected layout found after {0} draws")]
    Generation(usize),
}

/// Errors raised by evaluation backends.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("simulation requires a feasible solution")]
    Infeasible,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Rcon(#[from] RconError),
}

/// Remote console protocol and session failures.
#[derive(Debug, Error)]
pub enum RconError {
    #[error("buffer too short: need {need} bytes, have {have}")]
    ShortBuffer { need: usize, have: usize },
    #[error("size field {size} does not match a valid packet")]
    SizeMismatch { size: i32 },
    #[error("packet is missing its NUL terminators")]
    MissingTerminators,
    #[error("packet body contains a NUL byte")]
    NulInBody,
    #[error("packet body of {0} bytes exceeds the 4086 byte limit")]
    BodyTooLarge(usize),
    #[error("authentication rejected by server")]
    Credentials,
    #[error("timed out waiting for the server")]
    Timeout,
    #[error("unexpected packet: {0}")]
    Unexpected(String),
    #[error("could not parse evaluation response {0:?}")]
    Parse(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Invalid solver or harness configuration.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);
