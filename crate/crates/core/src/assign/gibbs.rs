//! Gibbs sampling of assignments.
//!
//! The chain lives on row-complete, column-injective assignments. One sweep
//! resamples each row's column from the columns no other row uses, with
//! probability proportional to exp(−cost). The stationary law is the
//! Boltzmann distribution exp(−total cost) over feasible assignments.

use std::collections::HashMap;

use rand::Rng;

use super::hungarian::hungarian;
use super::matrix::{Assignment, Matrix, Targets};
use crate::error::Result;
use crate::scalar::Scalar;

/// A distinct assignment visited by the chain with the fraction of sweeps
/// that ended in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<S> {
    pub assignment: Assignment<S>,
    pub frequency: f64,
}

type Visits<S> = HashMap<Vec<usize>, (Assignment<S>, usize)>;

fn record<S: Scalar>(
    m: &Matrix<S>,
    targets: &Targets,
    state: &[usize],
    count: usize,
    visited: &mut Visits<S>,
    order: &mut Vec<Vec<usize>>,
) {
    let sig = targets.signature(state);
    let cost = m.cost_of(state);
    match visited.get_mut(&sig) {
        Some((rep, n)) => {
            *n += count;
            if cost < rep.total_cost {
                *rep = Assignment {
                    row_to_col: state.to_vec(),
                    total_cost: cost,
                };
            }
        }
        None => {
            order.push(sig.clone());
            let rep = Assignment {
                row_to_col: state.to_vec(),
                total_cost: cost,
            };
            visited.insert(sig, (rep, count));
        }
    }
}

/// Runs `n_sweeps` sweeps from the optimal assignment and returns the
/// distinct visited target signatures, cheapest first, truncated to `keep`.
/// The starting state counts as visited but not toward the frequencies.
pub fn gibbs_sample<S: Scalar, R: Rng + ?Sized>(
    m: &Matrix<S>,
    targets: &Targets,
    n_sweeps: usize,
    keep: usize,
    rng: &mut R,
) -> Result<Vec<Sample<S>>> {
    let start = hungarian(m)?;
    let (nr, nc) = (m.rows(), m.cols());
    let mut state = start.row_to_col.clone();
    let mut used = vec![false; nc];
    for &c in &state {
        used[c] = true;
    }
    // signature → (cheapest representative, visit count)
    let mut visited: Visits<S> = HashMap::new();
    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut weights: Vec<f64> = Vec::with_capacity(nc);
    let mut cands: Vec<usize> = Vec::with_capacity(nc);

    record(m, targets, &state, 0, &mut visited, &mut order);

    for _ in 0..n_sweeps {
        for r in 0..nr {
            used[state[r]] = false;
            cands.clear();
            weights.clear();
            let row = m.row(r);
            let mut lowest = f64::INFINITY;
            for c in 0..nc {
                let v = row[c].to_f64_lossy();
                if !used[c] && v.is_finite() {
                    cands.push(c);
                    lowest = lowest.min(v);
                }
            }
            // the current column is always a candidate
            for &c in &cands {
                weights.push((-(row[c].to_f64_lossy() - lowest)).exp());
            }
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = cands[cands.len() - 1];
            for (k, &w) in weights.iter().enumerate() {
                if u < w {
                    pick = cands[k];
                    break;
                }
                u -= w;
            }
            state[r] = pick;
            used[pick] = true;
        }
        record(m, targets, &state, 1, &mut visited, &mut order);
    }

    let denom = n_sweeps.max(1) as f64;
    let mut out: Vec<Sample<S>> = order
        .into_iter()
        .map(|sig| {
            let (a, count) = visited.remove(&sig).expect("recorded");
            Sample {
                assignment: a,
                frequency: count as f64 / denom,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.assignment
            .total_cost
            .partial_cmp(&b.assignment.total_cost)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out.truncate(keep);
    Ok(out)
}
