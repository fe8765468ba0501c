//! Plain-text matrix files.
//!
//! Line one holds `<rows> <cols>`, followed by `rows` lines of `cols`
//! space-separated signed integers. LF endings, no trailing whitespace.

use std::fmt::Write as _;

use crate::error::GridError;

use super::{Cell, ProblemMatrix, SolutionMatrix, MAX_CODE, MIN_CODE};

/// Raw row-major integer matrix, the on-disk unit for problems and solutions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i8>) -> Matrix {
        assert_eq!(data.len(), rows * cols, "matrix data does not match its shape");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[row * self.cols + col]
    }

    pub fn parse(text: &str) -> Result<Matrix, GridError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let dims: Vec<&str> = header.split(' ').collect();
        let (rows, cols) = match dims.as_slice() {
            [r, c] => match (r.parse::<usize>(), c.parse::<usize>()) {
                (Ok(r), Ok(c)) if r > 0 && c > 0 => (r, c),
                _ => return Err(GridError::BadDimensions(header.to_string())),
            },
            _ => return Err(GridError::BadDimensions(header.to_string())),
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut found = 0;
        for (i, line) in lines.enumerate() {
            if found == rows {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(GridError::RowCount {
                    expected: rows,
                    found: found + 1,
                });
            }
            let before = data.len();
            for token in line.split_whitespace() {
                let value: i64 = token.parse().map_err(|_| GridError::BadToken {
                    line: i + 2,
                    token: token.to_string(),
                })?;
                if !(MIN_CODE as i64..=MAX_CODE as i64).contains(&value) {
                    return Err(GridError::CodeOutOfRange {
                        code: value,
                        min: MIN_CODE,
                        max: MAX_CODE,
                    });
                }
                data.push(value as i8);
            }
            if data.len() - before != cols {
                return Err(GridError::RowLength {
                    line: i + 2,
                    expected: cols,
                    found: data.len() - before,
                });
            }
            found += 1;
        }
        if found != rows {
            return Err(GridError::RowCount {
                expected: rows,
                found,
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.rows, self.cols);
        for row in self.data.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyMatrix {
    Problem(ProblemMatrix),
    Solution(SolutionMatrix),
}

/// Reads a matrix file. Any negative code marks it as a problem.
pub fn read_matrix(text: &str) -> Result<AnyMatrix, GridError> {
    let m = Matrix::parse(text)?;
    if m.data().iter().any(|&c| c < 0) {
        ProblemMatrix::from_matrix(&m).map(AnyMatrix::Problem)
    } else {
        SolutionMatrix::from_matrix(&m).map(AnyMatrix::Solution)
    }
}

pub fn write_matrix(m: &AnyMatrix) -> String {
    match m {
        AnyMatrix::Problem(p) => p.to_matrix().to_text(),
        AnyMatrix::Solution(s) => s.to_matrix().to_text(),
    }
}

impl ProblemMatrix {
    pub fn to_text(&self) -> String {
        self.to_matrix().to_text()
    }

    pub fn parse(text: &str) -> Result<ProblemMatrix, GridError> {
        ProblemMatrix::from_matrix(&Matrix::parse(text)?)
    }
}

impl SolutionMatrix {
    pub fn to_text(&self) -> String {
        self.to_matrix().to_text()
    }

    pub fn parse(text: &str) -> Result<SolutionMatrix, GridError> {
        SolutionMatrix::from_matrix(&Matrix::parse(text)?)
    }
}

impl std::fmt::Display for SolutionMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for row in self.cells().chunks(self.size()) {
            let glyphs: String = row
                .iter()
                .map(|c| match c {
                    Cell::Empty => '.',
                    Cell::Belt(d) => ['^', '>', 'v', '<'][d.index()],
                    Cell::Underground(d) => ['N', 'E', 'S', 'W'][d.index()],
                    _ => '#',
                })
                .collect();
            writeln!(f, "{glyphs}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_benchmark, Pos};
    use proptest::prelude::*;

    #[test]
    fn minimal_solution() {
        let m = read_matrix("1 1\n0").unwrap();
        assert_eq!(m, AnyMatrix::Solution(SolutionMatrix::empty(1)));
        assert_eq!(write_matrix(&m), "1 1\n0\n");
    }

    #[test]
    fn out_of_range_code() {
        let err = read_matrix("3 3\n0 0 9\n0 0 0\n0 0 0\n").unwrap_err();
        assert!(matches!(err, GridError::CodeOutOfRange { code: 9, .. }));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(Matrix::parse("3\n"), Err(GridError::BadDimensions(_))));
        assert!(matches!(Matrix::parse("a b\n"), Err(GridError::BadDimensions(_))));
        assert!(matches!(Matrix::parse(""), Err(GridError::BadDimensions(_))));
        assert!(matches!(
            Matrix::parse("1 2\n0 x\n"),
            Err(GridError::BadToken { line: 2, .. })
        ));
        assert!(matches!(
            Matrix::parse("2 2\n0 0\n"),
            Err(GridError::RowCount { expected: 2, found: 1 })
        ));
        assert!(matches!(
            Matrix::parse("2 2\n0 0\n0\n"),
            Err(GridError::RowLength { line: 3, .. })
        ));
    }

    #[test]
    fn problem_file_round_trip() {
        let p = make_benchmark(6, true, 11).unwrap();
        let text = p.to_text();
        assert!(!text.contains(" \n"));
        assert_eq!(read_matrix(&text).unwrap(), AnyMatrix::Problem(p));
        assert_eq!(write_matrix(&read_matrix(&text).unwrap()), text);
    }

    #[test]
    fn display_glyphs() {
        let mut s = SolutionMatrix::empty(2);
        s.set(Pos::new(1, 0), Cell::from_code(4).unwrap()).unwrap();
        s.set(Pos::new(0, 1), Cell::from_code(7).unwrap()).unwrap();
        assert_eq!(s.to_string(), ".<\nS.\n");
    }

    proptest! {
        #[test]
        fn solution_text_round_trip(size in 1usize..8, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let codes: Vec<i8> = (0..size * size).map(|_| rng.gen_range(0..=8)).collect();
            let s = SolutionMatrix::from_codes(size, &codes).unwrap();
            let text = s.to_text();
            prop_assert_eq!(Matrix::parse(&text).unwrap().to_text(), text.clone());
            prop_assert_eq!(SolutionMatrix::parse(&text).unwrap(), s);
        }
    }
}
