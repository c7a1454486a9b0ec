//! Rectangular linear assignment by successive shortest augmenting paths
//! (Jonker–Volgenant style, as used by SciPy's `linear_sum_assignment`),
//! with forbidden cells encoded as `+∞`.

use super::matrix::{Assignment, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

/// Dual potentials and matching left behind by a solve, enough to
/// re-optimize after costs of unmatched cells rise.
#[derive(Debug, Clone)]
pub(crate) struct Solved<S> {
    u: Vec<S>,
    v: Vec<S>,
    col4row: Vec<usize>,
    row4col: Vec<usize>,
}

impl<S: Scalar> Solved<S> {
    /// Lower bound on the optimum of any problem whose costs are nowhere
    /// below the ones these duals were computed for, given that `row` must
    /// use a column of `row_costs` (that row's costs in the new problem).
    ///
    /// Every reduced cost is non-negative and `v ≤ 0`, so the new optimum is
    /// at least `Σu + Σv` plus the cheapest reduced cost `row` can take.
    pub(crate) fn bound_with_row(&self, row: usize, row_costs: &[S]) -> S {
        let base = self.u.iter().chain(&self.v).fold(S::zero(), |a, &b| a + b);
        let step = row_costs
            .iter()
            .zip(&self.v)
            .filter(|(c, _)| c.is_finite())
            .map(|(&c, &v)| c - self.u[row] - v)
            .fold(S::infinity(), |a, b| if b < a { b } else { a });
        base + step.max(S::zero())
    }

    pub(crate) fn assignment(&self, m: &Matrix<S>) -> Assignment<S> {
        Assignment {
            row_to_col: self.col4row.clone(),
            total_cost: m.cost_of(&self.col4row),
        }
    }
}

fn check<S: Scalar>(m: &Matrix<S>) -> Result<()> {
    let (nr, nc) = (m.rows(), m.cols());
    if nr > nc {
        return Err(Error::InvalidMatrix(format!(
            "{nr} rows exceed {nc} columns"
        )));
    }
    if m
        .as_slice()
        .iter()
        .any(|v| v.is_nan() || *v == S::neg_infinity())
    {
        return Err(Error::InvalidMatrix("NaN or -inf entry".into()));
    }
    Ok(())
}

/// Minimum-cost assignment of every row to a distinct column.
///
/// Rows are first reduced by their minimum and greedily given their
/// cheapest free column; remaining rows are inserted by shortest augmenting
/// paths on the reduced costs.
pub fn hungarian<S: Scalar>(m: &Matrix<S>) -> Result<Assignment<S>> {
    solve(m).map(|s| s.assignment(m))
}

pub(crate) fn solve<S: Scalar>(m: &Matrix<S>) -> Result<Solved<S>> {
    check(m)?;
    let (nr, nc) = (m.rows(), m.cols());
    let mut st = Solved {
        u: vec![S::zero(); nr],
        v: vec![S::zero(); nc],
        col4row: vec![NONE; nr],
        row4col: vec![NONE; nc],
    };
    for i in 0..nr {
        let row = m.row(i);
        let mut best = NONE;
        for (j, &c) in row.iter().enumerate() {
            if c.is_finite() && (best == NONE || c < row[best]) {
                best = j;
            }
        }
        if best == NONE {
            return Err(Error::Infeasible);
        }
        st.u[i] = row[best];
        if st.row4col[best] == NONE {
            st.row4col[best] = i;
            st.col4row[i] = best;
        }
    }
    let mut ws = Workspace::new(nr, nc);
    for cur_row in 0..nr {
        if st.col4row[cur_row] == NONE {
            augment(m, &mut st, &mut ws, cur_row)?;
        }
    }
    Ok(st)
}

/// Re-solves after `row` lost its column and some costs were raised to
/// `+∞`. `prev` must be optimal for a matrix that agrees with `m` on every
/// matched cell and is nowhere larger, which keeps its duals feasible.
///
/// The shortest-path step is only optimal while every free column has
/// `v = 0`. A freed column usually has `v < 0`, so it is reset to 0 first;
/// rows whose reduced cost on it would turn negative get their `u` lowered
/// and, when matched, are unassigned as well (freeing their column in
/// turn). Every unassigned row is then re-inserted by one augmentation.
pub(crate) fn resolve_row<S: Scalar>(m: &Matrix<S>, prev: &Solved<S>, row: usize) -> Result<Solved<S>> {
    let mut st = prev.clone();
    let mut open = vec![row];
    let mut freed = Vec::new();
    let c = st.col4row[row];
    if c != NONE {
        st.row4col[c] = NONE;
        st.col4row[row] = NONE;
        freed.push(c);
    }
    while let Some(c) = freed.pop() {
        if st.v[c] >= S::zero() {
            continue;
        }
        st.v[c] = S::zero();
        for i in 0..m.rows() {
            let cost = m.get(i, c);
            if !(cost.is_finite() && cost < st.u[i]) {
                continue;
            }
            st.u[i] = cost;
            let c2 = st.col4row[i];
            if c2 != NONE {
                st.row4col[c2] = NONE;
                st.col4row[i] = NONE;
                freed.push(c2);
                open.push(i);
            }
        }
    }
    open.sort_unstable();
    let mut ws = Workspace::new(m.rows(), m.cols());
    for r in open {
        augment(m, &mut st, &mut ws, r)?;
    }
    Ok(st)
}

struct Workspace<S> {
    shortest: Vec<S>,
    path: Vec<usize>,
    sr: Vec<bool>,
    sc: Vec<bool>,
    remaining: Vec<usize>,
}

impl<S: Scalar> Workspace<S> {
    fn new(nr: usize, nc: usize) -> Self {
        Self {
            shortest: vec![S::infinity(); nc],
            path: vec![NONE; nc],
            sr: vec![false; nr],
            sc: vec![false; nc],
            remaining: vec![0; nc],
        }
    }
}

fn augment<S: Scalar>(m: &Matrix<S>, st: &mut Solved<S>, ws: &mut Workspace<S>, cur_row: usize) -> Result<()> {
    let (nr, nc) = (m.rows(), m.cols());
    let Solved { u, v, col4row, row4col } = st;
    let Workspace { shortest, path, sr, sc, remaining } = ws;
    sr.iter_mut().for_each(|x| *x = false);
    sc.iter_mut().for_each(|x| *x = false);
    shortest.iter_mut().for_each(|x| *x = S::infinity());
    for (k, r) in remaining.iter_mut().enumerate() {
        *r = nc - k - 1;
    }
    let mut num_remaining = nc;
    let mut min_val = S::zero();
    let mut i = cur_row;
    let mut sink = NONE;

    while sink == NONE {
        let mut index = NONE;
        let mut lowest = S::infinity();
        sr[i] = true;
        let row = m.row(i);
        for (it, &j) in remaining[..num_remaining].iter().enumerate() {
            let r = min_val + row[j] - u[i] - v[j];
            if r < shortest[j] {
                path[j] = i;
                shortest[j] = r;
            }
            if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == NONE) {
                lowest = shortest[j];
                index = it;
            }
        }
        min_val = lowest;
        if index == NONE || !min_val.is_finite() {
            return Err(Error::Infeasible);
        }
        let j = remaining[index];
        if row4col[j] == NONE {
            sink = j;
        } else {
            i = row4col[j];
        }
        sc[j] = true;
        num_remaining -= 1;
        remaining[index] = remaining[num_remaining];
    }

    u[cur_row] += min_val;
    for r in 0..nr {
        if sr[r] && r != cur_row {
            u[r] += min_val - shortest[col4row[r]];
        }
    }
    for c in 0..nc {
        if sc[c] {
            v[c] -= min_val - shortest[c];
        }
    }

    let mut j = sink;
    loop {
        let r = path[j];
        row4col[j] = r;
        std::mem::swap(&mut col4row[r], &mut j);
        if r == cur_row {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(m: &Matrix<f64>) -> Option<f64> {
        fn rec(m: &Matrix<f64>, r: usize, used: &mut Vec<bool>, acc: f64, best: &mut Option<f64>) {
            if r == m.rows() {
                if best.map_or(true, |b| acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            for c in 0..m.cols() {
                let v = m.get(r, c);
                if !used[c] && v.is_finite() {
                    used[c] = true;
                    rec(m, r + 1, used, acc + v, best);
                    used[c] = false;
                }
            }
        }
        let mut best = None;
        rec(m, 0, &mut vec![false; m.cols()], 0.0, &mut best);
        best
    }

    #[test]
    fn three_by_three_example() {
        let m = Matrix::from_rows(&[vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]])
            .unwrap();
        let a = hungarian(&m).unwrap();
        assert_eq!(a.row_to_col, vec![1, 0, 2]);
        assert_eq!(a.total_cost, 5.0);
        assert_eq!(brute_force(&m), Some(5.0));
    }

    #[test]
    fn diagonal_dominant() {
        let n = 6;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let a = hungarian(&Matrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(a.row_to_col, (0..n).collect::<Vec<_>>());
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn infinite_row_is_infeasible() {
        let inf = f64::INFINITY;
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![inf, inf]]).unwrap();
        assert_eq!(hungarian(&m), Err(Error::Infeasible));
        // feasible row-wise but not jointly
        let m = Matrix::from_rows(&[vec![1.0, inf], vec![2.0, inf]]).unwrap();
        assert_eq!(hungarian(&m), Err(Error::Infeasible));
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        let m = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(hungarian(&m), Err(Error::InvalidMatrix(_))));
        let m = Matrix::from_rows(&[vec![f64::NAN, 1.0]]).unwrap();
        assert!(matches!(hungarian(&m), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn empty_matrix() {
        let m = Matrix::<f64>::new(0, 3, vec![]).unwrap();
        assert_eq!(hungarian(&m).unwrap().row_to_col, Vec::<usize>::new());
    }

    #[test]
    fn negative_costs_and_f32() {
        let m = Matrix::from_rows(&[vec![-3.0f32, -1.0, 0.0], vec![-4.0, -2.0, 5.0]]).unwrap();
        let a = hungarian(&m).unwrap();
        assert_eq!(a.total_cost, -5.0);
    }
}
