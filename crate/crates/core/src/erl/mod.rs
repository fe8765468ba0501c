//! Evolutionary reinforcement learning: register-machine agents that build a
//! belt layout over a 20-step episode, evolved by a truncation GA.

pub mod env;
pub mod policy;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{EvalBackend, Evaluation};
use crate::error::{ConfigError, EvalError, GridError};
use crate::exec::Exec;
use crate::grid::generate::gen_problem;
use crate::grid::{ProblemMatrix, SolutionMatrix};
use crate::sim::{SimConfig, Weights};

pub use env::{Action, BeltEnv, Observation, EPISODE_LEN};
pub use policy::{crossover, MutationRates, Policy, Registers};

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub actions: Vec<Action>,
    pub solution: SolutionMatrix,
    pub evaluation: Evaluation,
}

/// Plays one episode without touching the policy's record.
pub fn play_episode<B: EvalBackend>(
    policy: &Policy,
    problem: &ProblemMatrix,
    backend: &B,
    sim: &SimConfig,
    weights: &Weights,
) -> Result<Episode, EvalError> {
    let mut env = BeltEnv::new(problem.clone());
    let mut regs = Registers::default();
    let mut actions = Vec::with_capacity(EPISODE_LEN as usize);
    while !env.done() {
        let action = policy.act(&env.observe(), &mut regs);
        env.step(action).expect("loop stops at episode end");
        actions.push(action);
    }
    let solution = env.into_working();
    let evaluation = backend.evaluate(problem, &solution, sim, weights)?;
    Ok(Episode {
        actions,
        solution,
        evaluation,
    })
}

/// Plays one episode and appends its reward to the policy's history.
pub fn run_episode<B: EvalBackend>(
    policy: &mut Policy,
    problem: &ProblemMatrix,
    backend: &B,
    sim: &SimConfig,
    weights: &Weights,
) -> Result<f64, EvalError> {
    let episode = play_episode(policy, problem, backend, sim, weights)?;
    policy.record(episode.evaluation.fitness);
    if episode.evaluation.delivers() {
        policy.mark_solved(problem);
    }
    Ok(episode.evaluation.fitness)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErlConfig {
    pub pop_size: usize,
    pub generations: u32,
    pub episodes_per_gen: usize,
    pub crossover_prob: f64,
    pub mutation: MutationRates,
    pub size: usize,
    pub obstacles: bool,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for ErlConfig {
    fn default() -> Self {
        ErlConfig {
            pop_size: 50,
            generations: 100,
            episodes_per_gen: 5,
            crossover_prob: 0.5,
            mutation: MutationRates::default(),
            size: 3,
            obstacles: false,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl ErlConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.pop_size < 4 || !self.pop_size.is_multiple_of(2) {
            return Err(ConfigError(format!(
                "population {} must be even and at least 4",
                self.pop_size
            )));
        }
        if self.generations == 0 || self.episodes_per_gen == 0 {
            return Err(ConfigError("need at least one generation and one episode".into()));
        }
        if !matches!(self.size, 3 | 6) {
            return Err(ConfigError(format!("agents train on 3x3 or 6x6, not {}", self.size)));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation.replace", self.mutation.replace),
            ("mutation.insert", self.mutation.insert),
            ("mutation.delete", self.mutation.delete),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlTraceRow {
    pub generation: u32,
    pub best_fitness: f64,
    pub unique_solved: usize,
}

#[derive(Debug, Clone)]
pub struct ErlResult {
    pub best: Policy,
    pub trace: Vec<ErlTraceRow>,
}

impl ErlResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,unique_solved\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{}\n", r.generation, r.best_fitness, r.unique_solved));
        }
        out
    }

    /// Most problems solved by the best policy of any generation.
    pub fn peak_solved(&self) -> usize {
        self.trace.iter().map(|r| r.unique_solved).max().unwrap_or(0)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ErlError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Evolves a population of policies on freshly drawn problems.
pub fn run_erl<B: EvalBackend>(
    config: &ErlConfig,
    backend: &B,
    sim: &SimConfig,
    weights: &Weights,
) -> Result<ErlResult, ErlError> {
    run_erl_observed(config, backend, sim, weights, &mut |_| {})
}

/// Like [`run_erl`], calling `on_step` after each generation is recorded.
pub fn run_erl_observed<B: EvalBackend>(
    config: &ErlConfig,
    backend: &B,
    sim: &SimConfig,
    weights: &Weights,
    on_step: &mut dyn FnMut(u32),
) -> Result<ErlResult, ErlError> {
    config.validate()?;
    sim.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<Policy> = (0..config.pop_size).map(|_| Policy::random(&mut rng)).collect();
    let mut trace = Vec::with_capacity(config.generations as usize);

    for generation in 1..=config.generations {
        let problems = (0..config.episodes_per_gen)
            .map(|_| gen_problem(config.size, config.obstacles, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;

        let outcomes = config.exec.map_mut(&mut population, |policy| {
            for problem in &problems {
                run_episode(policy, problem, backend, sim, weights)?;
            }
            Ok::<f64, EvalError>(policy.fitness())
        });
        let fitness = outcomes.into_iter().collect::<Result<Vec<f64>, _>>()?;

        let mut ranked: Vec<(f64, Policy)> = fitness.into_iter().zip(population).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (best_fitness, leader) = &ranked[0];
        trace.push(ErlTraceRow {
            generation,
            best_fitness: *best_fitness,
            unique_solved: leader.unique_solved(),
        });
        on_step(generation);

        ranked.truncate(config.pop_size / 2);
        population = ranked.into_iter().map(|(_, p)| p).collect();
        if generation == config.generations {
            break;
        }
        let survivors = population.len();
        while population.len() < config.pop_size {
            let a = population[..survivors].choose(&mut rng).expect("non-empty");
            let mut child = if rng.gen_bool(config.crossover_prob) {
                let b = population[..survivors].choose(&mut rng).expect("non-empty");
                crossover(a, b, &mut rng)
            } else {
                a.offspring()
            };
            child.mutate(&config.mutation, &mut rng);
            population.push(child);
        }
    }

    Ok(ErlResult {
        best: population.swap_remove(0),
        trace,
    })
}
