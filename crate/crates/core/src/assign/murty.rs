//! Murty's ranked assignment enumeration.
//!
//! The partitioning works on row→target signatures rather than raw
//! columns, so when several columns stand for the same target (the two
//! columns of a dividing object) each physical event is produced once, with
//! its cheapest column representative.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use super::hungarian::{resolve_row, solve, Solved};
use super::matrix::{Assignment, Matrix, Targets};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

enum State<S> {
    Solved { solution: Assignment<S>, duals: Solved<S> },
    /// Not solved yet: `row` lost its target relative to `parent`.
    Pending { parent: Rc<Solved<S>>, row: usize },
}

/// A Murty subproblem keyed by its cost, or by a lower bound on it while
/// pending. Children are only solved once they reach the top of the heap.
struct Node<S> {
    key: S,
    state: State<S>,
    fixed: Vec<(usize, usize)>,
    banned: Vec<(usize, usize)>,
    seq: u64,
}

impl<S: Scalar> PartialEq for Node<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Node<S> {}

impl<S: Scalar> PartialOrd for Node<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Node<S> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .partial_cmp(&self.key)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Row `r` of the constrained matrix.
fn constrained_row<S: Scalar>(
    m: &Matrix<S>,
    targets: &Targets,
    banned: &[(usize, usize)],
    r: usize,
) -> Vec<S> {
    let mut row = m.row(r).to_vec();
    for &(br, t) in banned.iter().filter(|(br, _)| *br == r) {
        debug_assert_eq!(br, r);
        for &c in targets.cols(t) {
            row[c] = S::infinity();
        }
    }
    row
}

fn constrained<S: Scalar>(
    m: &Matrix<S>,
    targets: &Targets,
    fixed: &[(usize, usize)],
    banned: &[(usize, usize)],
) -> Matrix<S> {
    let mut work = m.clone();
    for &(r, t) in fixed {
        for (c, v) in work.row_mut(r).iter_mut().enumerate() {
            if targets.target(c) != t {
                *v = S::infinity();
            }
        }
    }
    for &(r, t) in banned {
        for &c in targets.cols(t) {
            work.set(r, c, S::infinity());
        }
    }
    work
}

/// The `k` cheapest assignments with pairwise distinct target signatures,
/// sorted by non-decreasing cost. Returns fewer when fewer exist.
pub fn murty_kbest_grouped<S: Scalar>(
    m: &Matrix<S>,
    targets: &Targets,
    k: usize,
) -> Result<Vec<Assignment<S>>> {
    if targets.n_cols() != m.cols() {
        return Err(Error::ShapeMismatch("targets do not cover the columns".into()));
    }
    let mut out = Vec::new();
    if k == 0 {
        return Ok(out);
    }
    let root = match solve(m) {
        Ok(d) => d,
        Err(Error::Infeasible) => return Ok(out),
        Err(e) => return Err(e),
    };
    let mut seq = 0u64;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        key: root.assignment(m).total_cost,
        state: State::Solved {
            solution: root.assignment(m),
            duals: root,
        },
        fixed: Vec::new(),
        banned: Vec::new(),
        seq,
    });

    while let Some(node) = heap.pop() {
        // The duals and bounds carry rounding error, so a subproblem can
        // still beat the k-th solution by a few ulps. Pending bounds get a
        // rounding margin; solved nodes must be strictly cheaper.
        if out.len() >= k {
            let kth = &out[k - 1];
            let margin = kth.total_cost + rounding_margin(m, kth);
            if !(node.key < margin) {
                break;
            }
            if matches!(node.state, State::Solved { .. }) && !(node.key < kth.total_cost) {
                continue;
            }
        }
        let (solution, duals) = match node.state {
            State::Pending { parent, row } => {
                // Every child only raises costs of cells the parent left
                // unmatched (and the banned row's own cell), so the
                // parent's duals stay feasible and warm-start the solve.
                let work = constrained(m, targets, &node.fixed, &node.banned);
                match resolve_row(&work, &parent, row) {
                    Ok(duals) => {
                        let solution = duals.assignment(m);
                        seq += 1;
                        heap.push(Node {
                            key: solution.total_cost,
                            state: State::Solved { solution, duals },
                            fixed: node.fixed,
                            banned: node.banned,
                            seq,
                        });
                    }
                    Err(Error::Infeasible) => {}
                    Err(e) => return Err(e),
                }
                continue;
            }
            State::Solved { solution, duals } => (solution, Rc::new(duals)),
        };
        let signature = targets.signature(&solution.row_to_col);
        out.push(solution);
        let mut fixed = node.fixed.clone();
        for r in 0..m.rows() {
            if node.fixed.iter().any(|&(fr, _)| fr == r) {
                continue;
            }
            let mut banned = node.banned.clone();
            banned.push((r, signature[r]));
            let row = constrained_row(m, targets, &banned, r);
            if row.iter().all(|c| !c.is_finite()) {
                fixed.push((r, signature[r]));
                continue;
            }
            seq += 1;
            heap.push(Node {
                key: duals.bound_with_row(r, &row),
                state: State::Pending {
                    parent: duals.clone(),
                    row: r,
                },
                fixed: fixed.clone(),
                banned,
                seq,
            });
            fixed.push((r, signature[r]));
        }
        if out.len() >= k {
            sort_by_cost(&mut out);
            out.truncate(k);
        }
    }
    sort_by_cost(&mut out);
    Ok(out)
}

/// Bound on the rounding error of an assignment total or a dual bound
/// near it.
fn rounding_margin<S: Scalar>(m: &Matrix<S>, a: &Assignment<S>) -> S {
    let magnitude = a
        .row_to_col
        .iter()
        .enumerate()
        .fold(S::one(), |acc, (r, &c)| acc + m.get(r, c).abs());
    S::epsilon() * S::lit(4.0 * (m.rows() + m.cols()) as f64) * magnitude
}

fn sort_by_cost<S: Scalar>(out: &mut [Assignment<S>]) {
    out.sort_by(|a, b| {
        a.total_cost
            .partial_cmp(&b.total_cost)
            .unwrap_or(Ordering::Equal)
    });
}

/// The `k` cheapest distinct assignments of a plain cost matrix.
pub fn murty_kbest<S: Scalar>(m: &Matrix<S>, k: usize) -> Result<Vec<Assignment<S>>> {
    murty_kbest_grouped(m, &Targets::identity(m.cols()), k)
}
