//! Multi-seed experiment suite.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::exec::Exec;

use super::config::{Algorithm, ConfigFile, ProblemSpec, RunConfig};
use super::{load_problem, run_replicate, trace_csv, write_atomic, AnyBackend, HarnessError, TraceRow};

/// One (algorithm, instance) combination of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCell {
    pub config: RunConfig,
}

impl SuiteCell {
    pub fn label(&self) -> String {
        format!("{}-{}", self.config.algorithm.name(), self.config.problem.id())
    }
}

/// Expands a configuration file into suite cells: psa and qgp on every
/// size, erl on its own sizes, each with and without obstacles.
pub fn suite_cells(file: &ConfigFile) -> Vec<SuiteCell> {
    let base = file.run_config();
    let s = &file.suite;
    let mut cells = Vec::new();
    for &algorithm in &s.algorithms {
        let sizes = match algorithm {
            Algorithm::Erl => &s.erl_sizes,
            _ => &s.sizes,
        };
        for &size in sizes {
            for obstacles in [false, true] {
                cells.push(SuiteCell {
                    config: RunConfig {
                        algorithm,
                        problem: ProblemSpec::Instance {
                            size,
                            obstacles,
                            seed: file.run.instance_seed,
                        },
                        budget: s.budget,
                        replicates: s.replicates,
                        ..base.clone()
                    },
                });
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub problem: String,
    pub iteration: u32,
    pub mean_best_fitness: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub problem: String,
    pub status: String,
    pub runs: usize,
    pub delivered_runs: usize,
    pub mean_final: f64,
    pub median_final: f64,
    pub q1_final: f64,
    pub q3_final: f64,
    pub iqr_final: f64,
}

/// Outcome of one cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub label: String,
    pub algorithm: String,
    pub problem: String,
    pub rows: Vec<TraceRow>,
    pub finals: Vec<f64>,
    pub delivered: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub cells: Vec<CellResult>,
    pub aggregate: Vec<AggregateRow>,
    pub summary: Vec<SummaryRow>,
}

impl SuiteReport {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean best fitness across seeds for each iteration.
pub fn aggregate(rows: &[TraceRow]) -> Vec<AggregateRow> {
    let mut by_key: BTreeMap<(String, String, u32), Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_key
            .entry((r.algorithm.clone(), r.problem.clone(), r.iteration))
            .or_default()
            .push(r.best_fitness);
    }
    by_key
        .into_iter()
        .map(|((algorithm, problem, iteration), v)| AggregateRow {
            algorithm,
            problem,
            iteration,
            mean_best_fitness: v.iter().sum::<f64>() / v.len() as f64,
            runs: v.len(),
        })
        .collect()
}

fn summarize(cell: &CellResult) -> SummaryRow {
    let mut sorted = cell.finals.clone();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    SummaryRow {
        algorithm: cell.algorithm.clone(),
        problem: cell.problem.clone(),
        status: cell.error.clone().map_or_else(|| "ok".into(), |e| format!("failed: {e}")),
        runs: sorted.len(),
        delivered_runs: cell.delivered,
        mean_final: if sorted.is_empty() {
            f64::NAN
        } else {
            sorted.iter().sum::<f64>() / sorted.len() as f64
        },
        median_final: quantile(&sorted, 0.5),
        q1_final: q1,
        q3_final: q3,
        iqr_final: q3 - q1,
    }
}

fn run_cell(cell: &SuiteCell) -> CellResult {
    let c = &cell.config;
    let mut result = CellResult {
        label: cell.label(),
        algorithm: c.algorithm.name().to_string(),
        problem: c.problem.id(),
        rows: Vec::new(),
        finals: Vec::new(),
        delivered: 0,
        error: None,
    };
    let attempt = || -> Result<Vec<super::ReplicateOutcome>, HarnessError> {
        c.validate()?;
        let problem = match c.algorithm {
            Algorithm::Erl => None,
            _ => Some(load_problem(&c.problem)?),
        };
        let backend = AnyBackend::open(c.backend)?;
        (0..c.replicates)
            .map(|r| run_replicate(c, problem.as_ref(), &backend, r))
            .collect()
    };
    match attempt() {
        Ok(outcomes) => {
            for o in outcomes {
                result.finals.push(o.best_fitness);
                result.delivered += o.delivered as usize;
                result.rows.extend(o.rows);
            }
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result
}

fn csv_string<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Solver(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Runs all cells, writing `traces/<cell>.csv` as each finishes and
/// `aggregate.csv` plus `summary.csv` at the end. A failing cell is
/// recorded in the summary and does not stop the others.
pub fn cmd_bench(file: &ConfigFile, out_dir: &Path) -> Result<SuiteReport, HarnessError> {
    let cells = suite_cells(file);
    let exec = if file.suite.workers == 1 { Exec::Sequential } else { Exec::Parallel };
    let work = |cell: &SuiteCell| {
        let r = run_cell(cell);
        let written = trace_csv(&r.rows)
            .and_then(|csv| write_atomic(&out_dir.join("traces").join(format!("{}.csv", r.label)), csv.as_bytes()));
        (r, written)
    };
    let results = with_workers(file.suite.workers, || exec.map(&cells, work));

    let mut report_cells = Vec::with_capacity(results.len());
    for (mut r, written) in results {
        if let (Err(e), None) = (written, &r.error) {
            r.error = Some(e.to_string());
        }
        report_cells.push(r);
    }
    let all_rows: Vec<TraceRow> = report_cells.iter().flat_map(|c| c.rows.clone()).collect();
    let aggregate = aggregate(&all_rows);
    let summary: Vec<SummaryRow> = report_cells.iter().map(summarize).collect();
    write_atomic(
        &out_dir.join("aggregate.csv"),
        csv_string(&aggregate, &["algorithm", "problem", "iteration", "mean_best_fitness", "runs"])?.as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("summary.csv"),
        csv_string(
            &summary,
            &[
                "algorithm",
                "problem",
                "status",
                "runs",
                "delivered_runs",
                "mean_final",
                "median_final",
                "q1_final",
                "q3_final",
                "iqr_final",
            ],
        )?
        .as_bytes(),
    )?;
    Ok(SuiteReport {
        cells: report_cells,
        aggregate,
        summary,
    })
}

#[cfg(feature = "parallel")]
fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers <= 1 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers<R: Send>(_workers: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}
