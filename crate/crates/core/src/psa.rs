//! Parallel simulated annealing: `n` independent chains share one geometric
//! cooling schedule and are stepped in lock-step, one neighbour each per
//! iteration.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{EvalBackend, Evaluation};
use crate::error::ConfigError;
use crate::exec::Exec;
use crate::grid::{Cell, ProblemMatrix, SolutionMatrix};
use crate::sim::{SimConfig, Weights};

/// Probability that a cell starts empty in a random initial solution.
const INITIAL_EMPTY_PROB: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsaConfig {
    pub t0: f64,
    /// Stopping temperature.
    pub delta: f64,
    pub cooling_rate: f64,
    /// Chains stepped per iteration.
    pub n: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for PsaConfig {
    /// `t0 = 1`, `delta = 0.0094`, `cooling_rate = 0.9724`: 167 iterations.
    fn default() -> Self {
        PsaConfig {
            t0: 1.0,
            delta: 0.0094,
            cooling_rate: 0.9724,
            n: 20,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl PsaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta > 0.0 && self.delta < self.t0) {
            return Err(ConfigError(format!(
                "need 0 < delta < t0, got delta={} t0={}",
                self.delta, self.t0
            )));
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(ConfigError(format!(
                "cooling rate {} outside (0,1)",
                self.cooling_rate
            )));
        }
        if self.n == 0 {
            return Err(ConfigError("need at least one chain".into()));
        }
        Ok(())
    }

    pub fn iterations(&self) -> u32 {
        iteration_count(self.t0, self.delta, self.cooling_rate)
    }

    /// Picks a cooling rate that yields exactly `iterations` steps from `t0`
    /// down to `delta`.
    pub fn with_budget(mut self, iterations: u32) -> PsaConfig {
        let iterations = iterations.max(1) as f64;
        // Aim halfway between iterations - 1 and iterations to stay clear of
        // the ceiling's rounding edge.
        self.cooling_rate = ((self.delta / self.t0).ln() / (iterations - 0.5)).exp();
        self
    }
}

/// Number of cooling steps from `t0` to `delta`: `ceil(ln(delta/t0) / ln(cr))`.
pub fn iteration_count(t0: f64, delta: f64, cooling_rate: f64) -> u32 {
    let steps = ((delta / t0).ln() / cooling_rate.ln()).ceil();
    steps.max(0.0) as u32
}

/// Probability of accepting a move from fitness `f` to a worse `f_new` at
/// temperature `t`: `exp((f_new - f) / t)`, capped at 1.
pub fn acceptance_probability(t: f64, f_new: f64, f: f64) -> f64 {
    ((f_new - f) / t).exp().min(1.0)
}

/// Metropolis test for a worsening move.
pub fn accept_worse<R: Rng + ?Sized>(t: f64, f_new: f64, f: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < acceptance_probability(t, f_new, f)
}

/// Sparse random placement: each cell empty with probability 0.7, otherwise a
/// uniform code in `1..=8`.
pub fn random_solution<R: Rng + ?Sized>(size: usize, rng: &mut R) -> SolutionMatrix {
    let codes: Vec<i8> = (0..size * size)
        .map(|_| {
            if rng.gen_bool(INITIAL_EMPTY_PROB) {
                0
            } else {
                rng.gen_range(1..=8)
            }
        })
        .collect();
    SolutionMatrix::from_codes(size, &codes).expect("codes in range")
}

/// Upper bound on the number of cells a neighbour may change at temperature `t`.
pub fn change_bound(cells: usize, t: f64, t0: f64) -> usize {
    ((cells as f64 * (t / t0)).ceil() as usize).clamp(1, cells.max(1))
}

/// Changes `k ~ U[1, ceil(cells * t / t0)]` distinct cells, each to a
/// different uniformly drawn code.
pub fn select_neighbor<R: Rng + ?Sized>(
    solution: &SolutionMatrix,
    t: f64,
    t0: f64,
    rng: &mut R,
) -> SolutionMatrix {
    let cells = solution.cells().len();
    let k = rng.gen_range(1..=change_bound(cells, t, t0));
    let mut next = solution.clone();
    for i in sample(rng, cells, k) {
        let old = solution.cells()[i].code();
        // Draw from the 8 codes other than the current one.
        let mut code = rng.gen_range(0..8);
        if code >= old {
            code += 1;
        }
        next.set_index(i, Cell::from_code(code).expect("code in 0..=8"));
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsaTraceRow {
    pub iteration: u32,
    pub temperature: f64,
    pub best_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct PsaState {
    pub solutions: Vec<SolutionMatrix>,
    pub temperature: f64,
    pub iteration: u32,
    pub best: (SolutionMatrix, Evaluation),
    pub trace: Vec<PsaTraceRow>,
    /// Candidates whose evaluation failed and were scored 0.
    pub eval_failures: u64,
}

impl PsaState {
    /// Trace as CSV `iteration,temperature,best_fitness`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,temperature,best_fitness\n");
        for row in &self.trace {
            out.push_str(&format!(
                "{},{},{}\n",
                row.iteration, row.temperature, row.best_fitness
            ));
        }
        out
    }
}

struct Chain {
    rng: ChaCha8Rng,
    current: SolutionMatrix,
    memo: HashMap<SolutionMatrix, Evaluation>,
    failures: u64,
}

impl Chain {
    fn evaluate<B: EvalBackend>(
        &mut self,
        s: &SolutionMatrix,
        ctx: &EvalContext<'_, B>,
    ) -> Evaluation {
        if let Some(e) = self.memo.get(s) {
            return *e;
        }
        let e = match ctx.backend.evaluate(ctx.problem, s, ctx.sim, ctx.weights) {
            Ok(e) => e,
            Err(_) => {
                self.failures += 1;
                Evaluation::INFEASIBLE
            }
        };
        self.memo.insert(s.clone(), e);
        e
    }
}

struct EvalContext<'a, B> {
    backend: &'a B,
    problem: &'a ProblemMatrix,
    sim: &'a SimConfig,
    weights: &'a Weights,
}

/// Runs all chains through the full cooling schedule.
pub fn run_psa<B: EvalBackend>(
    problem: &ProblemMatrix,
    config: &PsaConfig,
    backend: &B,
    sim: &SimConfig,
    weights: &Weights,
) -> Result<PsaState, ConfigError> {
    run_psa_observed(problem, config, backend, sim, weights, &mut |_| {})
}

/// Like [`run_psa`], calling `on_step` after each iteration is recorded.
pub fn run_psa_observed<B: EvalBackend>(
    problem: &ProblemMatrix,
    config: &PsaConfig,
    backend: &B,
    sim: &SimConfig,
    weights: &Weights,
    on_step: &mut dyn FnMut(u32),
) -> Result<PsaState, ConfigError> {
    config.validate()?;
    sim.validate()?;
    let ctx = EvalContext {
        backend,
        problem,
        sim,
        weights,
    };
    let size = problem.size();
    let mut chains: Vec<Chain> = (0..config.n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ i as u64);
            let current = random_solution(size, &mut rng);
            Chain {
                rng,
                current,
                memo: HashMap::new(),
                failures: 0,
            }
        })
        .collect();

    let mut best: Option<(SolutionMatrix, Evaluation)> = None;
    let mut trace = Vec::new();
    let mut t = config.t0;
    let iterations = config.iterations();

    for iteration in 1..=iterations {
        // Each chain returns the better of the two solutions it evaluated.
        let candidates = config.exec.map_mut(&mut chains, |chain| {
            let neighbor = select_neighbor(&chain.current, t, config.t0, &mut chain.rng);
            let f = chain.evaluate(&chain.current.clone(), &ctx);
            let f_new = chain.evaluate(&neighbor, &ctx);
            let top = if f_new.fitness > f.fitness {
                (neighbor.clone(), f_new)
            } else {
                (chain.current.clone(), f)
            };
            if f_new.fitness >= f.fitness
                || accept_worse(t, f_new.fitness, f.fitness, &mut chain.rng)
            {
                chain.current = neighbor;
            }
            top
        });
        for (s, e) in candidates {
            if best.as_ref().is_none_or(|(_, b)| e.fitness > b.fitness) {
                best = Some((s, e));
            }
        }
        let best_fitness = best.as_ref().map_or(0.0, |(_, e)| e.fitness);
        trace.push(PsaTraceRow {
            iteration,
            temperature: t,
            best_fitness,
        });
        on_step(iteration);
        t *= config.cooling_rate;
    }

    let best = match best {
        Some(b) => b,
        None => {
            let s = chains[0].current.clone();
            let e = chains[0].evaluate(&s, &ctx);
            (s, e)
        }
    };
    Ok(PsaState {
        solutions: chains.iter().map(|c| c.current.clone()).collect(),
        temperature: t,
        iteration: iterations,
        best,
        trace,
        eval_failures: chains.iter().map(|c| c.failures).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::SimBackend;

    #[test]
    fn iteration_formula() {
        assert_eq!(iteration_count(1.0, 0.01, 0.95), 90);
        assert_eq!(iteration_count(1.0, 0.001, 0.9), 66);
        for cr in [0.5, 0.9, 0.95, 0.99] {
            assert_eq!(iteration_count(1.0, 1.0 * cr, cr), 1);
        }
        assert_eq!(PsaConfig::default().iterations(), 167);
    }

    #[test]
    fn budget_sets_iterations() {
        for budget in [1, 2, 10, 90, 167, 500] {
            let c = PsaConfig::default().with_budget(budget);
            c.validate().unwrap();
            assert_eq!(c.iterations(), budget);
        }
    }

    #[test]
    fn acceptance_edges() {
        assert_eq!(acceptance_probability(0.3, 0.5, 0.5), 1.0);
        assert!(acceptance_probability(1e-9, 0.4, 0.5) < 1e-300);
        assert!((acceptance_probability(0.5, 0.4, 0.6) - (-0.4f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn neighbor_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = random_solution(12, &mut rng);
        assert_eq!(change_bound(144, 1.0, 1.0), 144);
        assert_eq!(change_bound(144, 1e-6, 1.0), 1);
        for _ in 0..200 {
            let next = select_neighbor(&base, 1e-6, 1.0, &mut rng);
            let diff = base.cells().iter().zip(next.cells()).filter(|(a, b)| a != b).count();
            assert_eq!(diff, 1);
        }
        let mut seen_large = false;
        for _ in 0..200 {
            let next = select_neighbor(&base, 1.0, 1.0, &mut rng);
            let diff = base.cells().iter().zip(next.cells()).filter(|(a, b)| a != b).count();
            assert!((1..=144).contains(&diff));
            seen_large |= diff > 72;
        }
        assert!(seen_large);
    }

    #[test]
    fn config_validation() {
        let bad = [
            PsaConfig { delta: 2.0, ..Default::default() },
            PsaConfig { delta: 0.0, ..Default::default() },
            PsaConfig { cooling_rate: 1.0, ..Default::default() },
            PsaConfig { n: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn trace_is_monotone_and_reproducible() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let cfg = PsaConfig { seed: 9, ..Default::default() };
        let a = run_psa(&p, &cfg, &SimBackend, &SimConfig::default(), &Weights::default()).unwrap();
        let b = run_psa(&p, &cfg, &SimBackend, &SimConfig::default(), &Weights::default()).unwrap();
        assert_eq!(a.trace.len(), 167);
        assert!(a.trace.windows(2).all(|w| w[0].best_fitness <= w[1].best_fitness));
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.best.0, b.best.0);
        assert_eq!(a.solutions.len(), 20);
        assert!(a.temperature <= cfg.delta);
        for (j, row) in a.trace.iter().enumerate() {
            let expected = cfg.t0 * cfg.cooling_rate.powi(j as i32);
            assert!((row.temperature - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn sequential_matches_parallel() {
        let p = ProblemMatrix::canonical(6).unwrap();
        let par = PsaConfig { seed: 3, exec: Exec::Parallel, ..Default::default() }.with_budget(30);
        let seq = PsaConfig { exec: Exec::Sequential, ..par };
        let a = run_psa(&p, &par, &SimBackend, &SimConfig::default(), &Weights::default()).unwrap();
        let b = run_psa(&p, &seq, &SimBackend, &SimConfig::default(), &Weights::default()).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.solutions, b.solutions);
    }

    #[test]
    fn csv_header() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let cfg = PsaConfig::default().with_budget(3);
        let s = run_psa(&p, &cfg, &SimBackend, &SimConfig::default(), &Weights::default()).unwrap();
        let csv = s.trace_csv();
        assert!(csv.starts_with("iteration,temperature,best_fitness\n1,1,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
