//! Experiment harness: instance generation, solver runs with unified traces,
//! multi-seed suites and plot data.

pub mod bench;
pub mod config;
pub mod plot;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backend::{EvalBackend, SimBackend};
use crate::erl::run_erl_observed;
use crate::error::{ConfigError, EvalError, GridError};
use crate::grid::{make_benchmark, read_matrix, AnyMatrix, ProblemMatrix, SolutionMatrix};
use crate::psa::run_psa_observed;
use crate::qgp::run_qgp_observed;
use crate::rcon::{RconBackend, RconConfig};
use crate::sim::SimConfig;

pub use config::{Algorithm, BackendKind, ConfigFile, ProblemSpec, RunConfig};

/// One row of a unified trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub iteration: u32,
    pub best_fitness: f64,
    pub wall_ms: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Solver(String),
}

impl HarnessError {
    fn io(path: &Path, source: std::io::Error) -> HarnessError {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Native simulator or a live server.
pub enum AnyBackend {
    Sim(SimBackend),
    Rcon(RconBackend),
}

impl AnyBackend {
    pub fn open(kind: BackendKind) -> Result<AnyBackend, HarnessError> {
        Ok(match kind {
            BackendKind::Sim => AnyBackend::Sim(SimBackend),
            BackendKind::Rcon => {
                let cfg = RconConfig::from_env().map_err(EvalError::from)?;
                AnyBackend::Rcon(RconBackend::connect(&cfg).map_err(EvalError::from)?)
            }
        })
    }
}

impl EvalBackend for AnyBackend {
    fn run_counts(
        &self,
        problem: &ProblemMatrix,
        solution: &SolutionMatrix,
        config: &SimConfig,
    ) -> Result<(u32, u32), EvalError> {
        match self {
            AnyBackend::Sim(b) => b.run_counts(problem, solution, config),
            AnyBackend::Rcon(b) => b.run_counts(problem, solution, config),
        }
    }
}

/// Writes `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let name = path
        .file_name()
        .map_or_else(|| "out".into(), |n| n.to_string_lossy().into_owned());
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(contents).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(HarnessError::io(path, e));
    }
    Ok(())
}

/// Generates a benchmark instance and writes it as a matrix file.
pub fn cmd_gen(size: usize, obstacles: bool, seed: u64, out: &Path) -> Result<ProblemMatrix, HarnessError> {
    let problem = make_benchmark(size, obstacles, seed)?;
    write_atomic(out, problem.to_text().as_bytes())?;
    Ok(problem)
}

pub fn load_problem(spec: &ProblemSpec) -> Result<ProblemMatrix, HarnessError> {
    match spec {
        ProblemSpec::Instance {
            size,
            obstacles,
            seed,
        } => Ok(make_benchmark(*size, *obstacles, *seed)?),
        ProblemSpec::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            match read_matrix(&text)? {
                AnyMatrix::Problem(p) => Ok(p),
                AnyMatrix::Solution(_) => Err(HarnessError::Config(ConfigError(format!(
                    "{} holds a solution, not a problem",
                    path.display()
                )))),
            }
        }
    }
}

/// Result of one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    /// Solver-specific trace CSV.
    pub native_trace: String,
    pub best_fitness: f64,
    pub delivered: bool,
    /// Best placement (psa, qgp) or policy listing (erl).
    pub artifact: String,
}

/// Runs replicate `r` of `config` against `backend`.
pub fn run_replicate<B: EvalBackend>(
    config: &RunConfig,
    problem: Option<&ProblemMatrix>,
    backend: &B,
    r: u32,
) -> Result<ReplicateOutcome, HarnessError> {
    let seed = config.seed + r as u64;
    let algorithm = config.algorithm.name().to_string();
    let problem_id = config.problem.id();
    let start = Instant::now();
    let mut stamps: Vec<f64> = Vec::new();
    let mut on_step = |_: u32| stamps.push(start.elapsed().as_secs_f64() * 1000.0);
    let need_problem = || {
        problem.ok_or_else(|| HarnessError::Config(ConfigError("run needs a problem instance".into())))
    };

    let (fitness, native_trace, best_fitness, delivered, artifact) = match config.algorithm {
        Algorithm::Psa => {
            let p = need_problem()?;
            let s = run_psa_observed(p, &config.psa_for(r), backend, &config.sim, &config.weights, &mut on_step)?;
            let f: Vec<f64> = s.trace.iter().map(|t| t.best_fitness).collect();
            let (sol, e) = &s.best;
            (f, s.trace_csv(), e.fitness, e.delivers(), sol.to_text())
        }
        Algorithm::Qgp => {
            let p = need_problem()?;
            let q = run_qgp_observed(p, &config.qgp_for(r), backend, &config.sim, &config.weights, &mut on_step)
                .map_err(|e| HarnessError::Solver(e.to_string()))?;
            let f: Vec<f64> = q.trace.iter().map(|t| t.best_fitness).collect();
            (f, q.trace_csv(), q.best.fitness, q.best.delivers(), q.best_solution.to_text())
        }
        Algorithm::Erl => {
            let e = run_erl_observed(&config.erl_for(r), backend, &config.sim, &config.weights, &mut on_step)
                .map_err(|e| HarnessError::Solver(e.to_string()))?;
            // The per-generation leader changes; report the best seen so far.
            let mut top = 0.0f64;
            let f: Vec<f64> = e
                .trace
                .iter()
                .map(|t| {
                    top = top.max(t.best_fitness);
                    top
                })
                .collect();
            (f, e.trace_csv(), top, e.peak_solved() > 0, e.best.to_text())
        }
    };

    let rows = fitness
        .iter()
        .zip(&stamps)
        .enumerate()
        .map(|(i, (&best_fitness, &wall_ms))| TraceRow {
            algorithm: algorithm.clone(),
            problem: problem_id.clone(),
            seed,
            iteration: i as u32 + 1,
            best_fitness,
            wall_ms,
        })
        .collect();
    Ok(ReplicateOutcome {
        seed,
        rows,
        native_trace,
        best_fitness,
        delivered,
        artifact,
    })
}

pub fn trace_csv(rows: &[TraceRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["algorithm", "problem", "seed", "iteration", "best_fitness", "wall_ms"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Solver(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Summary of a `run`.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub replicates: Vec<ReplicateOutcome>,
    pub best_index: usize,
}

impl RunSummary {
    pub fn best(&self) -> &ReplicateOutcome {
        &self.replicates[self.best_index]
    }
}

/// Runs every replicate in order and writes `trace.csv`, one solver trace
/// per seed and the best artifact into `out_dir`.
pub fn cmd_run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary, HarnessError> {
    config.validate()?;
    let problem = match config.algorithm {
        Algorithm::Erl => None,
        _ => Some(load_problem(&config.problem)?),
    };
    let backend = AnyBackend::open(config.backend)?;
    let replicates = (0..config.replicates)
        .map(|r| run_replicate(config, problem.as_ref(), &backend, r))
        .collect::<Result<Vec<_>, _>>()?;

    let all_rows: Vec<TraceRow> = replicates.iter().flat_map(|o| o.rows.clone()).collect();
    write_atomic(&out_dir.join("trace.csv"), trace_csv(&all_rows)?.as_bytes())?;
    let algo = config.algorithm.name();
    for o in &replicates {
        write_atomic(
            &out_dir.join(format!("{algo}-seed{}.csv", o.seed)),
            o.native_trace.as_bytes(),
        )?;
    }
    let best_index = (0..replicates.len())
        .max_by(|&a, &b| {
            replicates[a]
                .best_fitness
                .total_cmp(&replicates[b].best_fitness)
                .then(b.cmp(&a))
        })
        .expect("at least one replicate");
    let best_name = match config.algorithm {
        Algorithm::Erl => "best_policy.txt",
        _ => "best_solution.txt",
    };
    write_atomic(&out_dir.join(best_name), replicates[best_index].artifact.as_bytes())?;
    Ok(RunSummary {
        replicates,
        best_index,
    })
}
