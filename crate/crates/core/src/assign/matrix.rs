use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major cost matrix. `+∞` marks forbidden cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: S) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    /// Sum of the selected entries, row by row.
    pub fn cost_of(&self, row_to_col: &[usize]) -> S {
        row_to_col
            .iter()
            .enumerate()
            .map(|(r, &c)| self.get(r, c))
            .fold(S::zero(), |a, b| a + b)
    }
}

/// A row-complete, column-injective assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<S> {
    pub row_to_col: Vec<usize>,
    pub total_cost: S,
}

impl<S: Scalar> Assignment<S> {
    pub fn is_valid_for(&self, m: &Matrix<S>) -> bool {
        if self.row_to_col.len() != m.rows() {
            return false;
        }
        let mut used = vec![false; m.cols()];
        for (r, &c) in self.row_to_col.iter().enumerate() {
            if c >= m.cols() || used[c] || !m.get(r, c).is_finite() {
                return false;
            }
            used[c] = true;
        }
        true
    }
}

/// Partition of the columns into targets. Column-injective assignments
/// that send every row to the same targets are treated as one solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Targets {
    target_of_col: Vec<usize>,
    cols_of_target: Vec<Vec<usize>>,
}

impl Targets {
    pub fn new(target_of_col: Vec<usize>) -> Self {
        let n = target_of_col.iter().map(|t| t + 1).max().unwrap_or(0);
        let mut cols_of_target = vec![Vec::new(); n];
        for (c, &t) in target_of_col.iter().enumerate() {
            cols_of_target[t].push(c);
        }
        Self {
            target_of_col,
            cols_of_target,
        }
    }

    /// Every column is its own target.
    pub fn identity(cols: usize) -> Self {
        Self::new((0..cols).collect())
    }

    #[inline]
    pub fn target(&self, col: usize) -> usize {
        self.target_of_col[col]
    }

    pub fn cols(&self, target: usize) -> &[usize] {
        &self.cols_of_target[target]
    }

    pub fn n_cols(&self) -> usize {
        self.target_of_col.len()
    }

    pub fn signature(&self, row_to_col: &[usize]) -> Vec<usize> {
        row_to_col.iter().map(|&c| self.target(c)).collect()
    }
}
