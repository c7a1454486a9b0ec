//! Exact decomposition of an extended cost matrix into independent blocks.
//!
//! Detections and objects connected through finite association costs form a
//! cluster; gating makes clusters small. Costs add across clusters, so the
//! k best joint assignments are the k best sums of per-cluster solutions.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Mutex;

use rand::Rng;

use super::cost::CostMatrix;
use super::gibbs::gibbs_sample;
use super::matrix::{Assignment, Matrix, Targets};
use super::murty::murty_kbest_grouped;
use crate::config::Sampler;
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub rows: Vec<usize>,
    pub objects: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components over detection rows. Objects without any finite
/// association are left out: they are missed in every assignment.
pub fn clusters<S: Scalar>(cm: &CostMatrix<S>) -> Vec<Cluster> {
    let (d, o) = (cm.n_det(), cm.n_obj());
    // nodes: rows 0..d, objects d..d+o
    let mut parent: Vec<usize> = (0..d + o).collect();
    for j in 0..d {
        for i in 0..o {
            if cm.association(j, i).is_finite() {
                let (a, b) = (find(&mut parent, j), find(&mut parent, d + i));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut out: Vec<Cluster> = Vec::new();
    let mut index_of_root = vec![usize::MAX; d + o];
    for j in 0..d {
        let r = find(&mut parent, j);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = out.len();
            out.push(Cluster {
                rows: Vec::new(),
                objects: Vec::new(),
            });
        }
        out[index_of_root[r]].rows.push(j);
    }
    for i in 0..o {
        let r = find(&mut parent, d + i);
        if index_of_root[r] != usize::MAX {
            out[index_of_root[r]].objects.push(i);
        }
    }
    out
}

fn sub_matrix<S: Scalar>(cm: &CostMatrix<S>, cl: &Cluster) -> Result<CostMatrix<S>> {
    let mut left = Matrix::filled(cl.rows.len(), cl.objects.len(), S::infinity());
    for (a, &j) in cl.rows.iter().enumerate() {
        for (b, &i) in cl.objects.iter().enumerate() {
            left.set(a, b, cm.association(j, i));
        }
    }
    let unassigned = cl.rows.iter().map(|&j| cm.unassigned_costs()[j]).collect();
    let mitosis = cl.objects.iter().map(|&i| cm.mitosis_costs()[i]).collect();
    CostMatrix::from_blocks(&left, unassigned, mitosis)
}

/// Maps a cluster-local column back to the full matrix.
fn lift_col(cm_n_obj: usize, cm_n_det: usize, cl: &Cluster, col: usize) -> usize {
    let (o, d) = (cl.objects.len(), cl.rows.len());
    if col < o {
        cl.objects[col]
    } else if col < o + d {
        cm_n_obj + cl.rows[col - o]
    } else {
        cm_n_obj + cm_n_det + cl.objects[col - o - d]
    }
}

#[derive(PartialEq)]
struct Combo<S> {
    cost: S,
    idx: Vec<usize>,
}

impl<S: Scalar> Eq for Combo<S> {}

impl<S: Scalar> PartialOrd for Combo<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Combo<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// The `k` cheapest index combinations of per-list costs (each list sorted
/// ascending), by lazy best-first expansion.
fn k_best_sums<S: Scalar>(lists: &[Vec<S>], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if lists.iter().any(|l| l.is_empty()) || k == 0 {
        return out;
    }
    let start = vec![0; lists.len()];
    let cost_of = |idx: &[usize]| {
        idx.iter()
            .enumerate()
            .map(|(l, &i)| lists[l][i])
            .fold(S::zero(), |a, b| a + b)
    };
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    heap.push(Combo {
        cost: cost_of(&start),
        idx: start,
    });
    while let Some(Combo { idx, .. }) = heap.pop() {
        for l in 0..lists.len() {
            if idx[l] + 1 < lists[l].len() {
                let mut next = idx.clone();
                next[l] += 1;
                if seen.insert(next.clone()) {
                    heap.push(Combo {
                        cost: cost_of(&next),
                        idx: next,
                    });
                }
            }
        }
        out.push(idx);
        if out.len() >= k {
            break;
        }
    }
    out
}

type ClusterKey = (usize, usize, Vec<u64>);

/// Ranked solutions of cluster sub-matrices, keyed by their exact values.
/// Hypotheses that share most of their objects produce identical clusters,
/// so one cache per frame avoids re-solving them.
#[derive(Default)]
pub struct ClusterCache<S> {
    solved: Mutex<HashMap<ClusterKey, (usize, Vec<Assignment<S>>)>>,
}

impl<S: Scalar> ClusterCache<S> {
    pub fn new() -> Self {
        Self {
            solved: Mutex::new(HashMap::new()),
        }
    }

    fn key(m: &Matrix<S>) -> ClusterKey {
        let bits = m.as_slice().iter().map(|v| v.to_f64_lossy().to_bits()).collect();
        (m.rows(), m.cols(), bits)
    }

    fn murty(&self, m: &Matrix<S>, targets: &Targets, k: usize) -> Result<Vec<Assignment<S>>> {
        let key = Self::key(m);
        if let Some((asked, sols)) = self.solved.lock().expect("cache lock").get(&key) {
            // a list shorter than what was asked for is exhaustive
            if sols.len() >= k || sols.len() < *asked {
                return Ok(sols[..k.min(sols.len())].to_vec());
            }
        }
        let sols = murty_kbest_grouped(m, targets, k)?;
        self.solved
            .lock()
            .expect("cache lock")
            .insert(key, (k, sols.clone()));
        Ok(sols)
    }
}

/// Samples up to `k` joint assignments, cheapest first, by solving each
/// cluster independently. Returned assignments are in canonical column form.
pub fn sample_assignments<S: Scalar, R: Rng + ?Sized>(
    cm: &CostMatrix<S>,
    k: usize,
    sampler: Sampler,
    gibbs_sweeps: usize,
    rng: &mut R,
) -> Result<Vec<Assignment<S>>> {
    sample_assignments_cached(cm, k, sampler, gibbs_sweeps, rng, &ClusterCache::new())
}

/// As [`sample_assignments`], reusing Murty solutions of clusters already
/// seen in `cache`. Gibbs sampling is never cached.
pub fn sample_assignments_cached<S: Scalar, R: Rng + ?Sized>(
    cm: &CostMatrix<S>,
    k: usize,
    sampler: Sampler,
    gibbs_sweeps: usize,
    rng: &mut R,
    cache: &ClusterCache<S>,
) -> Result<Vec<Assignment<S>>> {
    let cls = clusters(cm);
    let mut per_cluster: Vec<Vec<Assignment<S>>> = Vec::with_capacity(cls.len());
    for cl in &cls {
        let sub = sub_matrix(cm, cl)?;
        let sols = match sampler {
            Sampler::Murty => cache.murty(sub.values(), &sub.targets(), k)?,
            Sampler::Gibbs => gibbs_sample(sub.values(), &sub.targets(), gibbs_sweeps, k, rng)?
                .into_iter()
                .map(|s| s.assignment)
                .collect(),
        };
        let mut sols: Vec<Assignment<S>> = sols.iter().map(|a| sub.canonicalize(a)).collect();
        sols.sort_by(|a, b| {
            a.total_cost
                .partial_cmp(&b.total_cost)
                .unwrap_or(Ordering::Equal)
        });
        per_cluster.push(sols);
    }
    let costs: Vec<Vec<S>> = per_cluster
        .iter()
        .map(|l| l.iter().map(|a| a.total_cost).collect())
        .collect();
    let mut out = Vec::new();
    for combo in k_best_sums(&costs, k) {
        let mut row_to_col = vec![usize::MAX; cm.n_det()];
        for (ci, &si) in combo.iter().enumerate() {
            let cl = &cls[ci];
            for (local_row, &c) in per_cluster[ci][si].row_to_col.iter().enumerate() {
                row_to_col[cl.rows[local_row]] = lift_col(cm.n_obj(), cm.n_det(), cl, c);
            }
        }
        let total_cost = cm.values().cost_of(&row_to_col);
        out.push(Assignment {
            row_to_col,
            total_cost,
        });
    }
    out.sort_by(|a, b| {
        a.total_cost
            .partial_cmp(&b.total_cost)
            .unwrap_or(Ordering::Equal)
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_best_sums_small() {
        let lists = vec![vec![0.0, 1.0, 5.0], vec![0.0, 2.0]];
        let combos = k_best_sums(&lists, 4);
        let costs: Vec<f64> = combos
            .iter()
            .map(|c| lists[0][c[0]] + lists[1][c[1]])
            .collect();
        assert_eq!(costs, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn separate_blocks_found() {
        let inf = f64::INFINITY;
        let left = Matrix::from_rows(&[vec![1.0, inf], vec![inf, 1.0], vec![2.0, inf]]).unwrap();
        let cm = CostMatrix::from_blocks(&left, vec![3.0; 3], vec![0.0; 2]).unwrap();
        let cls = clusters(&cm);
        assert_eq!(cls.len(), 2);
        assert_eq!(cls[0], Cluster { rows: vec![0, 2], objects: vec![0] });
        assert_eq!(cls[1], Cluster { rows: vec![1], objects: vec![1] });
    }
}
