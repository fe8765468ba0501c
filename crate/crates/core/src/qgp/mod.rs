//! Linear-genome genetic programming with a Place/Connect function set.
//!
//! A genome is a flat token sequence of operators and operands. The
//! interpreter in [`interpret`] wires operators to operands in order of
//! appearance and threads the accumulated matrix through every call, so a
//! genome compiles to a chain of placements. Evolution is generational with
//! tournament selection, one-point crossover, token mutation and a single
//! elite.

mod interpret;
mod ops;

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{EvalBackend, Evaluation};
use crate::error::{ConfigError, EvalError};
use crate::exec::Exec;
use crate::grid::{Cell, Direction, Pos, ProblemMatrix, SolutionMatrix};
use crate::sim::{SimConfig, Weights};

pub use interpret::{interpret, Interpretation, Invocation, Operand, OperandKind};
pub use ops::{connect_path, op_connect, op_place};

pub const MAX_GENOME_LEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Place,
    Connect,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Place => "Place",
            OpKind::Connect => "Connect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Op(OpKind),
    /// Belt or underground belt to place.
    Obj(Cell),
    Pos(Pos),
    /// Reference to the problem's empty placement overlay.
    Mat,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Op(op) => write!(f, "OP {}", op.name()),
            Token::Obj(c) => write!(f, "OBJ {}", c.code()),
            Token::Pos(p) => write!(f, "POS {} {}", p.x, p.y),
            Token::Mat => write!(f, "MAT"),
        }
    }
}

impl std::str::FromStr for Token {
    type Err = String;

    fn from_str(s: &str) -> Result<Token, String> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let int = |t: &str| t.parse::<i32>().map_err(|_| format!("bad integer {t:?}"));
        match parts.as_slice() {
            ["OP", "Place"] => Ok(Token::Op(OpKind::Place)),
            ["OP", "Connect"] => Ok(Token::Op(OpKind::Connect)),
            ["OBJ", code] => {
                let code = int(code)?;
                i8::try_from(code)
                    .ok()
                    .and_then(Cell::from_code)
                    .filter(|c| c.is_placement())
                    .map(Token::Obj)
                    .ok_or_else(|| format!("object code {code} outside 1..=8"))
            }
            ["POS", x, y] => Ok(Token::Pos(Pos::new(int(x)?, int(y)?))),
            ["MAT"] => Ok(Token::Mat),
            _ => Err(format!("unrecognised token {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genome {
    tokens: Vec<Token>,
}

impl Genome {
    pub fn new(tokens: Vec<Token>) -> Result<Genome, ConfigError> {
        if tokens.is_empty() || tokens.len() > MAX_GENOME_LEN {
            return Err(ConfigError(format!(
                "genome length {} outside 1..={MAX_GENOME_LEN}",
                tokens.len()
            )));
        }
        Ok(Genome { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn random<R: Rng + ?Sized>(len: usize, size: usize, op_ratio: f64, rng: &mut R) -> Genome {
        let tokens = (0..len.clamp(1, MAX_GENOME_LEN))
            .map(|_| random_token(size, op_ratio, rng))
            .collect();
        Genome { tokens }
    }

    /// One token per line: `OP <name>`, `OBJ <code>`, `POS <x> <y>`, `MAT`.
    pub fn to_text(&self) -> String {
        self.tokens.iter().map(|t| format!("{t}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Genome, String> {
        let tokens = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Token>, _>>()?;
        Genome::new(tokens).map_err(|e| e.0)
    }
}

/// Operators with probability `op_ratio`; otherwise an operand: object 40%,
/// position 50%, matrix reference 10%.
pub fn random_token<R: Rng + ?Sized>(size: usize, op_ratio: f64, rng: &mut R) -> Token {
    if rng.gen_bool(op_ratio) {
        return Token::Op(if rng.gen_bool(0.5) { OpKind::Place } else { OpKind::Connect });
    }
    let roll: f64 = rng.gen();
    if roll < 0.4 {
        let dir = Direction::ALL[rng.gen_range(0..4)];
        Token::Obj(if rng.gen_bool(0.5) { Cell::Belt(dir) } else { Cell::Underground(dir) })
    } else if roll < 0.9 {
        let n = size as i32;
        Token::Pos(Pos::new(rng.gen_range(0..n), rng.gen_range(0..n)))
    } else {
        Token::Mat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QgpConfig {
    pub population: usize,
    pub generations: u32,
    pub initial_genome: usize,
    pub tournament: usize,
    /// Share of operator tokens in fresh genomes and mutations.
    pub op_ratio: f64,
    /// Per-token replacement probability.
    pub mutation_rate: f64,
    /// Per-genome probability of inserting one token.
    pub insertion_rate: f64,
    /// Per-genome probability of deleting one token.
    pub deletion_rate: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for QgpConfig {
    fn default() -> Self {
        QgpConfig {
            population: 30,
            generations: 167,
            initial_genome: 40,
            tournament: 5,
            op_ratio: 0.2,
            mutation_rate: 0.02,
            insertion_rate: 0.01,
            deletion_rate: 0.01,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl QgpConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.generations == 0 {
            return Err(ConfigError("need at least one generation".into()));
        }
        if self.population < 2 || self.tournament == 0 || self.tournament > self.population {
            return Err(ConfigError(format!(
                "population {} with tournament {} is not usable",
                self.population, self.tournament
            )));
        }
        if !(1..=MAX_GENOME_LEN).contains(&self.initial_genome) {
            return Err(ConfigError(format!(
                "initial genome length {} outside 1..={MAX_GENOME_LEN}",
                self.initial_genome
            )));
        }
        for (name, p) in [
            ("op_ratio", self.op_ratio),
            ("mutation_rate", self.mutation_rate),
            ("insertion_rate", self.insertion_rate),
            ("deletion_rate", self.deletion_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }
}

/// Tournament winner among `k` distinct random individuals; ties go to the
/// lower index.
pub fn tournament<R: Rng + ?Sized>(fitness: &[f64], k: usize, rng: &mut R) -> usize {
    sample(rng, fitness.len(), k)
        .into_iter()
        .max_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(b.cmp(&a)))
        .expect("tournament size >= 1")
}

/// One-point crossover with an independent cut in each parent. Both children
/// keep at least one token and are truncated to the maximum length.
pub fn crossover<R: Rng + ?Sized>(a: &Genome, b: &Genome, rng: &mut R) -> (Genome, Genome) {
    let ca = rng.gen_range(1..=a.len());
    let cb = rng.gen_range(1..=b.len());
    let join = |x: &[Token], y: &[Token]| {
        let mut tokens: Vec<Token> = x.iter().chain(y).copied().collect();
        tokens.truncate(MAX_GENOME_LEN);
        Genome { tokens }
    };
    (
        join(&a.tokens[..ca], &b.tokens[cb..]),
        join(&b.tokens[..cb], &a.tokens[ca..]),
    )
}

pub fn mutate<R: Rng + ?Sized>(g: &mut Genome, size: usize, config: &QgpConfig, rng: &mut R) {
    for t in g.tokens.iter_mut() {
        if rng.gen_bool(config.mutation_rate) {
            *t = random_token(size, config.op_ratio, rng);
        }
    }
    if g.len() < MAX_GENOME_LEN && rng.gen_bool(config.insertion_rate) {
        let at = rng.gen_range(0..=g.len());
        g.tokens.insert(at, random_token(size, config.op_ratio, rng));
    }
    if g.len() > 1 && rng.gen_bool(config.deletion_rate) {
        let at = rng.gen_range(0..g.len());
        g.tokens.remove(at);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QgpTraceRow {
    pub generation: u32,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub population: usize,
}

#[derive(Debug, Clone)]
pub struct QgpResult {
    pub best_genome: Genome,
    pub best_solution: SolutionMatrix,
    pub best: Evaluation,
    pub trace: Vec<QgpTraceRow>,
}

impl QgpResult {
    /// Trace as CSV `generation,best_fitness,mean_fitness`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,mean_fitness\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{}\n", r.generation, r.best_fitness, r.mean_fitness));
        }
        out
    }
}

/// Evolves genomes for `config.generations` generations.
pub fn run_qgp<B: EvalBackend>(
    problem: &ProblemMatrix,
    config: &QgpConfig,
    backend: &B,
    sim: &SimConfig,
    weights: &Weights,
) -> Result<QgpResult, QgpError> {
    run_qgp_observed(problem, config, backend, sim, weights, &mut |_| {})
}

/// Like [`run_qgp`], calling `on_step` after each generation is recorded.
pub fn run_qgp_observed<B: EvalBackend>(
    problem: &ProblemMatrix,
    config: &QgpConfig,
    backend: &B,
    sim: &SimConfig,
    weights: &Weights,
    on_step: &mut dyn FnMut(u32),
) -> Result<QgpResult, QgpError> {
    config.validate()?;
    sim.validate()?;
    let size = problem.size();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<Genome> = (0..config.population)
        .map(|_| Genome::random(config.initial_genome, size, config.op_ratio, &mut rng))
        .collect();
    let mut trace = Vec::with_capacity(config.generations as usize);
    let mut best: Option<(Genome, SolutionMatrix, Evaluation)> = None;

    for generation in 1..=config.generations {
        let scored = config.exec.map(&population, |g| {
            let solution = interpret(g, problem).solution;
            backend
                .evaluate(problem, &solution, sim, weights)
                .map(|e| (solution, e))
        });
        let scored = scored.into_iter().collect::<Result<Vec<_>, _>>()?;
        let fitness: Vec<f64> = scored.iter().map(|(_, e)| e.fitness).collect();

        let leader = (0..fitness.len())
            .max_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(b.cmp(&a)))
            .expect("non-empty population");
        if best.as_ref().is_none_or(|(_, _, e)| fitness[leader] > e.fitness) {
            let (s, e) = &scored[leader];
            best = Some((population[leader].clone(), s.clone(), *e));
        }
        let (elite, _, best_eval) = best.as_ref().expect("set above");
        trace.push(QgpTraceRow {
            generation,
            best_fitness: best_eval.fitness,
            mean_fitness: fitness.iter().sum::<f64>() / fitness.len() as f64,
            population: population.len(),
        });
        on_step(generation);
        if generation == config.generations {
            break;
        }

        let mut next = Vec::with_capacity(config.population);
        while next.len() < config.population - 1 {
            let a = &population[tournament(&fitness, config.tournament, &mut rng)];
            let b = &population[tournament(&fitness, config.tournament, &mut rng)];
            let (c1, c2) = crossover(a, b, &mut rng);
            next.push(c1);
            if next.len() < config.population - 1 {
                next.push(c2);
            }
        }
        for g in next.iter_mut() {
            mutate(g, size, config, &mut rng);
        }
        next.push(elite.clone());
        population = next;
    }

    let (best_genome, best_solution, best) = best.expect("at least one generation");
    Ok(QgpResult {
        best_genome,
        best_solution,
        best,
        trace,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum QgpError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::SimBackend;
    use crate::sim::simulate;

    #[test]
    fn token_text_round_trip() {
        let g = Genome::new(vec![
            Token::Op(OpKind::Connect),
            Token::Pos(Pos::new(2, 0)),
            Token::Obj(Cell::Underground(Direction::West)),
            Token::Mat,
            Token::Op(OpKind::Place),
        ])
        .unwrap();
        let text = g.to_text();
        assert_eq!(text, "OP Connect\nPOS 2 0\nOBJ 8\nMAT\nOP Place\n");
        assert_eq!(Genome::parse(&text).unwrap(), g);
        assert!(Genome::parse("OBJ 0\n").is_err());
        assert!(Genome::parse("OP Rotate\n").is_err());
        assert!(Genome::parse("").is_err());
    }

    #[test]
    fn variation_respects_length_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = QgpConfig {
            insertion_rate: 0.5,
            deletion_rate: 0.5,
            ..Default::default()
        };
        let mut pool: Vec<Genome> = (0..10).map(|_| Genome::random(95, 6, 0.2, &mut rng)).collect();
        pool.push(Genome::random(1, 6, 0.2, &mut rng));
        for _ in 0..500 {
            let a = rng.gen_range(0..pool.len());
            let b = rng.gen_range(0..pool.len());
            let (mut c1, mut c2) = crossover(&pool[a], &pool[b], &mut rng);
            mutate(&mut c1, 6, &cfg, &mut rng);
            mutate(&mut c2, 6, &cfg, &mut rng);
            for c in [c1, c2] {
                assert!((1..=MAX_GENOME_LEN).contains(&c.len()));
                pool[rng.gen_range(0..11)] = c;
            }
        }
    }

    #[test]
    fn tournament_picks_the_sample_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fitness: Vec<f64> = (0..30).map(|i| i as f64).collect();
        for _ in 0..500 {
            let w = tournament(&fitness, 5, &mut rng);
            // The winner beats at least four others, so it cannot be in the bottom four.
            assert!(w >= 4);
        }
        assert_eq!(tournament(&fitness, 30, &mut rng), 29);
    }

    #[test]
    fn reachability_witness() {
        for size in [3, 6, 12] {
            let p = ProblemMatrix::canonical(size).unwrap();
            let g = Genome::new(vec![
                Token::Op(OpKind::Connect),
                Token::Pos(p.insert_at()),
                Token::Pos(p.extract_at()),
            ])
            .unwrap();
            let s = interpret(&g, &p).solution;
            assert!(simulate(&p, &s, &SimConfig::default()).unwrap().items_out >= 1);
        }
    }

    #[test]
    fn elite_never_regresses_and_population_is_stable() {
        let p = ProblemMatrix::canonical(6).unwrap();
        let cfg = QgpConfig {
            generations: 40,
            seed: 1,
            ..Default::default()
        };
        let r = run_qgp(&p, &cfg, &SimBackend, &SimConfig::default(), &Weights::default()).unwrap();
        assert_eq!(r.trace.len(), 40);
        assert!(r.trace.iter().all(|t| t.population == 30));
        assert!(r.trace.windows(2).all(|w| w[0].best_fitness <= w[1].best_fitness));
        assert_eq!(r.best.fitness, r.trace.last().unwrap().best_fitness);
        assert!(r.trace_csv().starts_with("generation,best_fitness,mean_fitness\n1,"));
    }

    #[test]
    fn sequential_matches_parallel() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let par = QgpConfig {
            generations: 15,
            seed: 8,
            exec: Exec::Parallel,
            ..Default::default()
        };
        let seq = QgpConfig {
            exec: Exec::Sequential,
            ..par
        };
        let a = run_qgp(&p, &par, &SimBackend, &SimConfig::default(), &Weights::default()).unwrap();
        let b = run_qgp(&p, &seq, &SimBackend, &SimConfig::default(), &Weights::default()).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.best_genome, b.best_genome);
    }
}
