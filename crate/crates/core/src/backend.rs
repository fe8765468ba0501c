//! Interchangeable fitness backends: the native simulator and, behind the
//! same trait, the remote console bridge in [`crate::rcon`].

use crate::error::EvalError;
use crate::grid::{check_feasible, ProblemMatrix, SolutionMatrix};
use crate::sim::{score, simulate, SimConfig, Weights};

/// Counts reported by one evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Evaluation {
    pub fitness: f64,
    pub items_in: u32,
    pub items_out: u32,
}

impl Evaluation {
    pub const INFEASIBLE: Evaluation = Evaluation {
        fitness: 0.0,
        items_in: 0,
        items_out: 0,
    };

    /// A run delivered at least one item.
    pub fn delivers(&self) -> bool {
        self.items_out >= 1
    }
}

/// Something that can run a feasible placement and count items.
///
/// Implementors supply [`EvalBackend::run_counts`]; the feasibility gate and
/// the fitness formula are shared so every backend scores identical counts
/// identically.
pub trait EvalBackend: Sync {
    /// Returns `(items_in, items_out)` for a feasible solution.
    fn run_counts(
        &self,
        problem: &ProblemMatrix,
        solution: &SolutionMatrix,
        config: &SimConfig,
    ) -> Result<(u32, u32), EvalError>;

    fn evaluate(
        &self,
        problem: &ProblemMatrix,
        solution: &SolutionMatrix,
        config: &SimConfig,
        weights: &Weights,
    ) -> Result<Evaluation, EvalError> {
        if !check_feasible(problem, solution)?.feasible {
            return Ok(Evaluation::INFEASIBLE);
        }
        let (items_in, items_out) = self.run_counts(problem, solution, config)?;
        Ok(Evaluation {
            fitness: score(items_in, items_out, config, weights),
            items_in,
            items_out,
        })
    }
}

/// In-process simulator backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimBackend;

impl EvalBackend for SimBackend {
    fn run_counts(
        &self,
        problem: &ProblemMatrix,
        solution: &SolutionMatrix,
        config: &SimConfig,
    ) -> Result<(u32, u32), EvalError> {
        let r = simulate(problem, solution, config)?;
        Ok((r.items_in, r.items_out))
    }
}

impl<B: EvalBackend + ?Sized> EvalBackend for &B {
    fn run_counts(
        &self,
        problem: &ProblemMatrix,
        solution: &SolutionMatrix,
        config: &SimConfig,
    ) -> Result<(u32, u32), EvalError> {
        (**self).run_counts(problem, solution, config)
    }
}
