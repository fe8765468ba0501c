use std::collections::VecDeque;
use std::sync::Arc;

use crate::grid::{Cell, Pos, ProblemMatrix, SolutionMatrix};

use super::ops::{op_connect, op_place};
use super::{Genome, OpKind, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandKind {
    Matrix,
    Position,
    Object,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Matrix(Arc<SolutionMatrix>),
    Position(Pos),
    Object(Cell),
}

impl Operand {
    pub fn kind(&self) -> OperandKind {
        match self {
            Operand::Matrix(_) => OperandKind::Matrix,
            Operand::Position(_) => OperandKind::Position,
            Operand::Object(_) => OperandKind::Object,
        }
    }
}

impl OpKind {
    /// Input signature. New operators register here and in [`OpKind::apply`].
    pub fn inputs(self) -> &'static [OperandKind] {
        use OperandKind::*;
        match self {
            OpKind::Place => &[Matrix, Position, Object],
            OpKind::Connect => &[Matrix, Position, Position],
        }
    }

    /// Applies the operator to operands matching [`OpKind::inputs`].
    pub fn apply(self, problem: &ProblemMatrix, args: &[Operand]) -> SolutionMatrix {
        match (self, args) {
            (OpKind::Place, [Operand::Matrix(m), Operand::Position(p), Operand::Object(o)]) => {
                op_place(problem, m, *p, *o)
            }
            (OpKind::Connect, [Operand::Matrix(m), Operand::Position(a), Operand::Position(b)]) => {
                op_connect(problem, m, *a, *b)
            }
            _ => unreachable!("operands bound against the declared signature"),
        }
    }
}

/// One executed operator with the operand-list indices it consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub op: OpKind,
    pub genome_index: usize,
    pub args: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Interpretation {
    pub solution: SolutionMatrix,
    /// Executed operators in firing order.
    pub model: Vec<Invocation>,
    /// Operators that never found operands, as genome indices.
    pub idle: Vec<usize>,
    /// Final operand list, including operator outputs.
    pub operands: Vec<Operand>,
}

struct Interpreter<'a> {
    problem: &'a ProblemMatrix,
    operands: Vec<Operand>,
    consumed: Vec<bool>,
    model: Vec<Invocation>,
}

impl Interpreter<'_> {
    /// Binds the most recent matrix and the earliest unconsumed position and
    /// object operands.
    fn bind(&self, op: OpKind) -> Option<Vec<usize>> {
        let mut taken: Vec<usize> = Vec::new();
        for &kind in op.inputs() {
            let idx = if kind == OperandKind::Matrix {
                self.operands.iter().rposition(|o| o.kind() == kind)?
            } else {
                (0..self.operands.len()).find(|&i| {
                    !self.consumed[i] && self.operands[i].kind() == kind && !taken.contains(&i)
                })?
            };
            taken.push(idx);
        }
        Some(taken)
    }

    fn try_fire(&mut self, op: OpKind, genome_index: usize) -> bool {
        let Some(args) = self.bind(op) else { return false };
        let values: Vec<Operand> = args.iter().map(|&i| self.operands[i].clone()).collect();
        for (&i, v) in args.iter().zip(&values) {
            if v.kind() != OperandKind::Matrix {
                self.consumed[i] = true;
            }
        }
        let out = op.apply(self.problem, &values);
        self.operands.push(Operand::Matrix(Arc::new(out)));
        self.consumed.push(false);
        self.model.push(Invocation {
            op,
            genome_index,
            args,
        });
        true
    }
}

/// Interprets a genome into a placement.
///
/// All operand tokens are collected up front, after one seed matrix standing
/// for the empty overlay. Operators are then tried in genome order; one that
/// cannot bind its inputs waits in the idle list and is retried, oldest first,
/// whenever an operator output extends the operand list. Operators still idle
/// at the end are dropped. The result is the last matrix produced.
pub fn interpret(genome: &Genome, problem: &ProblemMatrix) -> Interpretation {
    let size = problem.size();
    let empty = Arc::new(SolutionMatrix::empty(size));
    let mut operands = vec![Operand::Matrix(empty.clone())];
    let mut queue = VecDeque::new();
    for (i, token) in genome.tokens().iter().enumerate() {
        match *token {
            Token::Op(op) => queue.push_back((i, op)),
            Token::Obj(cell) => operands.push(Operand::Object(cell)),
            Token::Pos(p) => operands.push(Operand::Position(p)),
            Token::Mat => operands.push(Operand::Matrix(empty.clone())),
        }
    }
    let consumed = vec![false; operands.len()];
    let mut it = Interpreter {
        problem,
        operands,
        consumed,
        model: Vec::new(),
    };
    let mut idle: VecDeque<(usize, OpKind)> = VecDeque::new();

    while let Some((i, op)) = queue.pop_front() {
        if !it.try_fire(op, i) {
            idle.push_back((i, op));
            continue;
        }
        // A new operand appeared: give idle operators another chance until
        // none of them can fire.
        let mut fired = true;
        while fired {
            fired = false;
            for k in 0..idle.len() {
                let (j, waiting) = idle[k];
                if it.try_fire(waiting, j) {
                    idle.remove(k);
                    fired = true;
                    break;
                }
            }
        }
    }

    let solution = it
        .model
        .last()
        .and_then(|_| match it.operands.last() {
            Some(Operand::Matrix(m)) => Some((**m).clone()),
            _ => None,
        })
        .unwrap_or_else(|| (*empty).clone());
    Interpretation {
        solution,
        model: it.model,
        idle: idle.into_iter().map(|(i, _)| i).collect(),
        operands: it.operands,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Direction;

    fn genome(tokens: Vec<Token>) -> Genome {
        Genome::new(tokens).unwrap()
    }

    #[test]
    fn connect_builds_the_l_path() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let g = genome(vec![
            Token::Op(OpKind::Connect),
            Token::Pos(Pos::new(2, 0)),
            Token::Pos(Pos::new(0, 2)),
        ]);
        let r = interpret(&g, &p);
        assert_eq!(r.solution.codes(), vec![3, 4, 4, 3, 0, 0, 3, 0, 0]);
        assert_eq!(r.model.len(), 1);
        assert!(r.idle.is_empty());
    }

    #[test]
    fn single_place() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let g = genome(vec![
            Token::Op(OpKind::Place),
            Token::Obj(Cell::Belt(Direction::East)),
            Token::Pos(Pos::new(1, 1)),
        ]);
        let r = interpret(&g, &p);
        assert_eq!(r.solution.get(Pos::new(1, 1)).unwrap().code(), 2);
        assert_eq!(r.solution.placements(), 1);
    }

    #[test]
    fn unbindable_place_is_neglected() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let g = genome(vec![Token::Op(OpKind::Place), Token::Pos(Pos::new(0, 0))]);
        let r = interpret(&g, &p);
        assert_eq!(r.solution, SolutionMatrix::empty(3));
        assert_eq!(r.idle, vec![0]);
        assert!(r.model.is_empty());
    }

    #[test]
    fn outputs_chain_through_the_most_recent_matrix() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let g = genome(vec![
            Token::Op(OpKind::Place),
            Token::Op(OpKind::Place),
            Token::Obj(Cell::Belt(Direction::North)),
            Token::Pos(Pos::new(0, 0)),
            Token::Obj(Cell::Underground(Direction::South)),
            Token::Pos(Pos::new(2, 2)),
        ]);
        let r = interpret(&g, &p);
        assert_eq!(r.solution.get(Pos::new(0, 0)).unwrap().code(), 1);
        assert_eq!(r.solution.get(Pos::new(2, 2)).unwrap().code(), 7);
        // Second Place consumed the first one's output matrix.
        assert_eq!(r.model[1].args[0], r.operands.len() - 2);
    }

    #[test]
    fn positions_are_consumed_in_order() {
        let p = ProblemMatrix::canonical(3).unwrap();
        let g = genome(vec![
            Token::Op(OpKind::Connect),
            Token::Op(OpKind::Connect),
            Token::Pos(Pos::new(2, 0)),
            Token::Pos(Pos::new(1, 0)),
            Token::Pos(Pos::new(1, 1)),
        ]);
        let r = interpret(&g, &p);
        assert_eq!(r.model.len(), 1);
        assert_eq!(r.idle, vec![1]);
    }

    #[test]
    fn deterministic() {
        use rand::SeedableRng;
        let p = ProblemMatrix::canonical(6).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = Genome::random(40, 6, 0.2, &mut rng);
            assert_eq!(interpret(&g, &p).solution, interpret(&g, &p).solution);
        }
    }
}
