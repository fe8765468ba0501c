//! Linear register-machine policies.
//!
//! Register file: 9 read-only inputs (the observation), 8 action registers
//! cleared every timestep, and 8 memory registers that persist for the whole
//! episode. After the program runs, the action register with the largest
//! value picks the action; ties go to the lowest index.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use rand::Rng;

use crate::grid::ProblemMatrix;

use super::env::{Action, Observation};

pub const INPUTS: usize = 9;
pub const ACTIONS: usize = 8;
pub const MEMORY: usize = 8;
pub const MIN_PROGRAM: usize = 8;
pub const MAX_PROGRAM: usize = 256;
pub const HISTORY_CAP: usize = 100;
const CONST_MIN: i32 = -4;
const CONST_MAX: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    /// Division with `x / 0 = 1`.
    Div,
    Copy,
    /// Skip the next instruction when `a > b`.
    SkipIfGreater,
}

impl Opcode {
    const ALL: [Opcode; 6] = [
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Div,
        Opcode::Copy,
        Opcode::SkipIfGreater,
    ];

    fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::Div => "div",
            Opcode::Copy => "cpy",
            Opcode::SkipIfGreater => "skp",
        }
    }
}

/// Where an instruction writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dst {
    Action(u8),
    Memory(u8),
}

/// Where an instruction reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Src {
    Input(u8),
    Action(u8),
    Memory(u8),
    Const(i8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Opcode,
    pub dst: Dst,
    pub a: Src,
    pub b: Src,
}

impl Instruction {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Instruction {
        Instruction {
            op: Opcode::ALL[rng.gen_range(0..Opcode::ALL.len())],
            dst: random_dst(rng),
            a: random_src(rng),
            b: random_src(rng),
        }
    }
}

fn random_dst<R: Rng + ?Sized>(rng: &mut R) -> Dst {
    let k = rng.gen_range(0..(ACTIONS + MEMORY) as u8);
    if (k as usize) < ACTIONS {
        Dst::Action(k)
    } else {
        Dst::Memory(k - ACTIONS as u8)
    }
}

fn random_src<R: Rng + ?Sized>(rng: &mut R) -> Src {
    let consts = (CONST_MAX - CONST_MIN + 1) as usize;
    let k = rng.gen_range(0..INPUTS + ACTIONS + MEMORY + consts);
    match k {
        k if k < INPUTS => Src::Input(k as u8),
        k if k < INPUTS + ACTIONS => Src::Action((k - INPUTS) as u8),
        k if k < INPUTS + ACTIONS + MEMORY => Src::Memory((k - INPUTS - ACTIONS) as u8),
        k => Src::Const((k - INPUTS - ACTIONS - MEMORY) as i8 + CONST_MIN as i8),
    }
}

impl fmt::Display for Dst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dst::Action(i) => write!(f, "A{i}"),
            Dst::Memory(i) => write!(f, "M{i}"),
        }
    }
}

impl fmt::Display for Src {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Src::Input(i) => write!(f, "I{i}"),
            Src::Action(i) => write!(f, "A{i}"),
            Src::Memory(i) => write!(f, "M{i}"),
            Src::Const(c) => write!(f, "C{c}"),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.op.mnemonic(), self.dst, self.a, self.b)
    }
}

fn parse_index(s: &str, limit: usize) -> Result<u8, String> {
    s.parse::<u8>()
        .ok()
        .filter(|&i| (i as usize) < limit)
        .ok_or_else(|| format!("register index {s:?} out of range"))
}

impl std::str::FromStr for Instruction {
    type Err = String;

    fn from_str(line: &str) -> Result<Instruction, String> {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [op, dst, a, b] = parts.as_slice() else {
            return Err(format!("expected 4 fields in {line:?}"));
        };
        let op = Opcode::ALL
            .into_iter()
            .find(|o| o.mnemonic() == *op)
            .ok_or_else(|| format!("unknown opcode {op:?}"))?;
        let dst = match dst.split_at_checked(1) {
            Some(("A", i)) => Dst::Action(parse_index(i, ACTIONS)?),
            Some(("M", i)) => Dst::Memory(parse_index(i, MEMORY)?),
            _ => return Err(format!("bad destination {dst:?}")),
        };
        let src = |s: &str| -> Result<Src, String> {
            match s.split_at_checked(1) {
                Some(("I", i)) => Ok(Src::Input(parse_index(i, INPUTS)?)),
                Some(("A", i)) => Ok(Src::Action(parse_index(i, ACTIONS)?)),
                Some(("M", i)) => Ok(Src::Memory(parse_index(i, MEMORY)?)),
                Some(("C", c)) => c
                    .parse::<i8>()
                    .ok()
                    .filter(|c| (CONST_MIN..=CONST_MAX).contains(&(*c as i32)))
                    .map(Src::Const)
                    .ok_or_else(|| format!("bad constant {s:?}")),
                _ => Err(format!("bad source {s:?}")),
            }
        };
        Ok(Instruction {
            op,
            dst,
            a: src(a)?,
            b: src(b)?,
        })
    }
}

/// Register state for one episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registers {
    pub actions: [i32; ACTIONS],
    pub memory: [i32; MEMORY],
}

impl Default for Registers {
    fn default() -> Self {
        Registers {
            actions: [0; ACTIONS],
            memory: [0; MEMORY],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Policy {
    program: Vec<Instruction>,
    history: VecDeque<f64>,
    solved: HashSet<ProblemMatrix>,
}

impl PartialEq for Policy {
    fn eq(&self, other: &Self) -> bool {
        self.program == other.program
    }
}

impl Policy {
    pub fn new(program: Vec<Instruction>) -> Result<Policy, String> {
        if !(MIN_PROGRAM..=MAX_PROGRAM).contains(&program.len()) {
            return Err(format!(
                "program length {} outside {MIN_PROGRAM}..={MAX_PROGRAM}",
                program.len()
            ));
        }
        Ok(Policy {
            program,
            history: VecDeque::new(),
            solved: HashSet::new(),
        })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Policy {
        let len = rng.gen_range(MIN_PROGRAM..=3 * MIN_PROGRAM);
        let program = (0..len).map(|_| Instruction::random(rng)).collect();
        Policy::new(program).expect("length in range")
    }

    pub fn program(&self) -> &[Instruction] {
        &self.program
    }

    /// Copy of the program with a fresh lifetime record.
    pub fn offspring(&self) -> Policy {
        Policy::new(self.program.clone()).expect("parent program is valid")
    }

    /// Runs the program on one observation and picks an action.
    pub fn act(&self, obs: &Observation, regs: &mut Registers) -> Action {
        regs.actions = [0; ACTIONS];
        let read = |regs: &Registers, s: Src| -> i32 {
            match s {
                Src::Input(i) => obs.0[i as usize],
                Src::Action(i) => regs.actions[i as usize],
                Src::Memory(i) => regs.memory[i as usize],
                Src::Const(c) => c as i32,
            }
        };
        let mut pc = 0;
        while pc < self.program.len() {
            let ins = self.program[pc];
            pc += 1;
            let a = read(regs, ins.a);
            let b = read(regs, ins.b);
            let value = match ins.op {
                Opcode::Add => a.wrapping_add(b),
                Opcode::Sub => a.wrapping_sub(b),
                Opcode::Mul => a.wrapping_mul(b),
                Opcode::Div => {
                    if b == 0 {
                        1
                    } else {
                        a.wrapping_div(b)
                    }
                }
                Opcode::Copy => a,
                Opcode::SkipIfGreater => {
                    if a > b {
                        pc += 1;
                    }
                    continue;
                }
            };
            match ins.dst {
                Dst::Action(i) => regs.actions[i as usize] = value,
                Dst::Memory(i) => regs.memory[i as usize] = value,
            }
        }
        argmax(&regs.actions)
    }

    pub fn record(&mut self, reward: f64) {
        if self.history.len() == HISTORY_CAP {
            self.history.pop_front();
        }
        self.history.push_back(reward);
    }

    pub fn history(&self) -> &VecDeque<f64> {
        &self.history
    }

    /// Mean reward over the lifetime window; 0 before any episode.
    pub fn fitness(&self) -> f64 {
        if self.history.is_empty() {
            0.0
        } else {
            self.history.iter().sum::<f64>() / self.history.len() as f64
        }
    }

    pub fn mark_solved(&mut self, problem: &ProblemMatrix) {
        if !self.solved.contains(problem) {
            self.solved.insert(problem.clone());
        }
    }

    /// Distinct problems this policy has delivered at least one item on.
    pub fn unique_solved(&self) -> usize {
        self.solved.len()
    }

    /// One instruction per line.
    pub fn to_text(&self) -> String {
        self.program.iter().map(|i| format!("{i}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Policy, String> {
        let program = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Instruction>, _>>()?;
        Policy::new(program)
    }

    pub fn mutate<R: Rng + ?Sized>(&mut self, rates: &MutationRates, rng: &mut R) {
        for ins in self.program.iter_mut() {
            if rng.gen_bool(rates.replace) {
                *ins = Instruction::random(rng);
            }
        }
        if self.program.len() < MAX_PROGRAM && rng.gen_bool(rates.insert) {
            let at = rng.gen_range(0..=self.program.len());
            self.program.insert(at, Instruction::random(rng));
        }
        if self.program.len() > MIN_PROGRAM && rng.gen_bool(rates.delete) {
            let at = rng.gen_range(0..self.program.len());
            self.program.remove(at);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MutationRates {
    pub replace: f64,
    pub insert: f64,
    pub delete: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        MutationRates {
            replace: 0.05,
            insert: 0.1,
            delete: 0.1,
        }
    }
}

/// One-point crossover with independent cuts; the child's length is kept in
/// range by redrawing cuts, falling back to a copy of `a`.
pub fn crossover<R: Rng + ?Sized>(a: &Policy, b: &Policy, rng: &mut R) -> Policy {
    for _ in 0..16 {
        let ca = rng.gen_range(0..=a.program.len());
        let cb = rng.gen_range(0..=b.program.len());
        let len = ca + b.program.len() - cb;
        if (MIN_PROGRAM..=MAX_PROGRAM).contains(&len) {
            let program = a.program[..ca].iter().chain(&b.program[cb..]).copied().collect();
            return Policy::new(program).expect("length checked");
        }
    }
    a.offspring()
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[i32; ACTIONS]) -> Action {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Action::from_index(best).expect("eight action registers")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ins(s: &str) -> Instruction {
        s.parse().unwrap()
    }

    fn padded(mut program: Vec<Instruction>) -> Policy {
        while program.len() < MIN_PROGRAM {
            program.push(ins("cpy M7 M7 C0"));
        }
        Policy::new(program).unwrap()
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0; 8]), Action::MoveN);
        assert_eq!(argmax(&[0, 3, 3, 0, 0, 0, 0, 3]), Action::MoveE);
        assert_eq!(argmax(&[-5, -5, -5, -5, -5, -5, -5, -1]), Action::Place4);
    }

    #[test]
    fn protected_division() {
        let p = padded(vec![ins("div A5 I0 C0")]);
        let mut regs = Registers::default();
        assert_eq!(p.act(&Observation([7; 9]), &mut regs), Action::Place2);
        assert_eq!(regs.actions[5], 1);
    }

    #[test]
    fn skip_and_memory() {
        // Counts timesteps in M0 and switches from MoveE to Place3 once M0 > 2.
        let p = padded(vec![
            ins("add M0 M0 C1"),
            ins("cpy A1 C1 C0"),
            ins("skp A0 C3 M0"),
            ins("cpy A6 C4 C0"),
        ]);
        let mut regs = Registers::default();
        let obs = Observation([0; 9]);
        let acts: Vec<Action> = (0..4).map(|_| p.act(&obs, &mut regs)).collect();
        assert_eq!(acts, vec![Action::MoveE, Action::MoveE, Action::Place3, Action::Place3]);
        assert_eq!(regs.memory[0], 4);
    }

    #[test]
    fn arithmetic_wraps() {
        let p = padded(vec![
            ins("cpy M0 C4 C0"),
            ins("mul M0 M0 M0"),
            ins("mul M0 M0 M0"),
            ins("mul M0 M0 M0"),
            ins("mul M0 M0 M0"),
            ins("mul M0 M0 M0"),
        ]);
        let mut regs = Registers::default();
        p.act(&Observation([0; 9]), &mut regs);
        assert_eq!(regs.memory[0], 4i32.wrapping_pow(32));
    }

    #[test]
    fn listing_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = Policy::random(&mut rng);
            assert_eq!(Policy::parse(&p.to_text()).unwrap(), p);
        }
        assert!("add A8 I0 I0".parse::<Instruction>().is_err());
        assert!("add A0 I9 I0".parse::<Instruction>().is_err());
        assert!("add A0 C5 I0".parse::<Instruction>().is_err());
        assert!("nop A0 I0 I0".parse::<Instruction>().is_err());
        assert!(Policy::parse("add A0 I0 I0\n").is_err());
    }

    #[test]
    fn history_is_capped() {
        let mut p = Policy::random(&mut ChaCha8Rng::seed_from_u64(0));
        for i in 0..250 {
            p.record(i as f64);
        }
        assert_eq!(p.history().len(), HISTORY_CAP);
        assert_eq!(p.fitness(), (150..250).sum::<i32>() as f64 / 100.0);
    }

    #[test]
    fn variation_keeps_length_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rates = MutationRates {
            replace: 0.5,
            insert: 0.9,
            delete: 0.9,
        };
        let mut pool: Vec<Policy> = (0..6).map(|_| Policy::random(&mut rng)).collect();
        for _ in 0..2000 {
            let a = rng.gen_range(0..pool.len());
            let b = rng.gen_range(0..pool.len());
            let mut c = crossover(&pool[a], &pool[b], &mut rng);
            c.mutate(&rates, &mut rng);
            assert!((MIN_PROGRAM..=MAX_PROGRAM).contains(&c.program().len()));
            pool[a] = c;
        }
    }
}
