//! Cost matrices and assignment solvers.

mod cluster;
mod cost;
mod gibbs;
mod hungarian;
mod matrix;
mod murty;

pub use cluster::{clusters, sample_assignments, sample_assignments_cached, Cluster, ClusterCache};
pub use cost::{
    association_cost, build_extended_matrix, extended_from_scores, mitosis_cost, object_scores,
    spatial_score, CostMatrix, CostModel, DetectionEvent, Events, ObjectEvent,
};
pub use gibbs::{gibbs_sample, Sample};
pub use hungarian::hungarian;
pub use matrix::{Assignment, Matrix, Targets};
pub use murty::{murty_kbest, murty_kbest_grouped};

use crate::error::Result;
use crate::scalar::Scalar;

impl<S: Scalar> CostMatrix<S> {
    /// Optimal assignment of the extended matrix in canonical form.
    pub fn hungarian(&self) -> Result<Assignment<S>> {
        Ok(self.canonicalize(&hungarian(self.values())?))
    }

    /// The `k` cheapest physically distinct assignments (mitosis column
    /// swaps collapsed), canonical form, non-decreasing cost.
    pub fn murty_kbest(&self, k: usize) -> Result<Vec<Assignment<S>>> {
        let mut out: Vec<Assignment<S>> = murty_kbest_grouped(self.values(), &self.targets(), k)?
            .iter()
            .map(|a| self.canonicalize(a))
            .collect();
        out.sort_by(|a, b| {
            a.total_cost
                .partial_cmp(&b.total_cost)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(out)
    }
}
