//! Association, unassignment and mitosis costs, and the extended cost matrix
//! `[ C | Diag∞(c_u) | C + c_M ]` with one row per detection.

use super::matrix::{Assignment, Matrix, Targets};
use crate::config::{MitosisCosts, MotionModel, TrackerConfig};
use crate::erlang::erlang_cdf;
use crate::error::{Error, Result};
use crate::gaussian::{add2, is_symmetric_psd, normal_pdf_with_mahalanobis, regularize, SpatialGaussian};
use crate::model::{BernoulliComponent, Detection};
use crate::scalar::Scalar;

const RIDGE: f64 = 1e-6;
const MAX_CONDITION: f64 = 1e12;

/// Density of the object mean under the detection density with summed
/// covariances, or 0 when the squared Mahalanobis distance exceeds `gate`.
pub fn spatial_score<S: Scalar>(
    object: &SpatialGaussian<S>,
    detection: &SpatialGaussian<S>,
    gate: S,
) -> Result<S> {
    let cov = regularize(
        &add2(&object.cov, &detection.cov),
        S::lit(RIDGE),
        S::lit(MAX_CONDITION),
    );
    if !is_symmetric_psd(&cov) {
        return Err(Error::DegenerateCovariance);
    }
    let (pdf, m2) = normal_pdf_with_mahalanobis(&object.mean, &detection.mean, &cov)
        .ok_or(Error::DegenerateCovariance)?;
    Ok(if m2 > gate { S::zero() } else { pdf })
}

/// Costs of explaining one detection by each object and of leaving it
/// unassigned. `objects` holds (existence, spatial score) pairs; a zero
/// score (gated out) yields an infinite cost. Log arguments are clamped
/// below at `clamp_eps`.
pub fn association_cost<S: Scalar>(
    clutter_prob: S,
    objects: &[(S, S)],
    p_detect: S,
    p_birth: S,
    clamp_eps: S,
) -> (Vec<S>, S) {
    let not_clutter = S::one() - clutter_prob;
    let denom = p_birth
        + objects
            .iter()
            .map(|&(r, n)| p_detect * r * n)
            .fold(S::zero(), |a, b| a + b);
    let costs: Vec<S> = objects
        .iter()
        .map(|&(r, n)| {
            let mass = p_detect * r * n;
            if mass > S::zero() {
                -(not_clutter * mass / denom).max(clamp_eps).ln()
            } else {
                S::infinity()
            }
        })
        .collect();
    let explained = costs
        .iter()
        .map(|&c| (-c).exp())
        .fold(S::zero(), |a, b| a + b);
    let unassigned = -(not_clutter - explained).max(clamp_eps).ln();
    (costs, unassigned)
}

/// Extra cost of letting an object of the given age divide now. Objects of
/// unknown age divide for free.
pub fn mitosis_cost<S: Scalar>(age: Option<u32>, alpha: u32, rate: S, clamp_eps: S) -> S {
    match age {
        None => S::zero(),
        Some(a) => {
            let cdf = erlang_cdf(S::lit(a as f64), alpha, rate).unwrap_or(S::zero());
            -cdf.max(clamp_eps).ln()
        }
    }
}

/// Cost-model parameters resolved from a [`TrackerConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel<S> {
    pub p_detect: S,
    pub p_birth: S,
    pub gate_mahalanobis_sq: S,
    pub clamp_eps: S,
    pub erlang_alpha: u32,
    pub erlang_rate: S,
    pub mitosis: MitosisCosts,
    pub motion: MotionModel,
}

impl<S: Scalar> CostModel<S> {
    /// Requires a resolved config (no `auto` Erlang settings).
    pub fn from_config(cfg: &TrackerConfig) -> Result<Self> {
        let alpha = *cfg
            .erlang_alpha
            .fixed()
            .ok_or_else(|| Error::DomainError("erlang_alpha unresolved".into()))?;
        let rate = *cfg
            .erlang_rate
            .fixed()
            .ok_or_else(|| Error::DomainError("erlang_rate unresolved".into()))?;
        Ok(Self {
            p_detect: S::lit(cfg.p_detect),
            p_birth: S::lit(cfg.p_birth),
            gate_mahalanobis_sq: S::lit(cfg.gate_mahalanobis_sq),
            clamp_eps: S::lit(cfg.clamp_eps),
            erlang_alpha: alpha,
            erlang_rate: S::lit(rate),
            mitosis: cfg.mitosis_costs,
            motion: cfg.motion_model,
        })
    }

    pub fn object_mitosis_cost(&self, age: Option<u32>) -> S {
        match self.mitosis {
            MitosisCosts::Erlang => {
                mitosis_cost(age, self.erlang_alpha, self.erlang_rate, self.clamp_eps)
            }
            MitosisCosts::Zero => S::zero(),
            MitosisCosts::Forbidden => S::infinity(),
        }
    }
}

/// What an assignment implies for one object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectEvent {
    Matched(usize),
    /// Divided into the two detection rows, ascending.
    Mitosis(usize, usize),
    Missed,
}

/// What an assignment implies for one detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionEvent {
    Matched(usize),
    /// Birth of a new object or clutter.
    Unassigned,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Events {
    pub objects: Vec<ObjectEvent>,
    pub detections: Vec<DetectionEvent>,
}

/// Extended cost matrix for one hypothesis and one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<S> {
    n_det: usize,
    n_obj: usize,
    values: Matrix<S>,
    mitosis_cost: Vec<S>,
    unassigned: Vec<S>,
}

impl<S: Scalar> CostMatrix<S> {
    /// Assembles the three blocks from the association costs (`left`,
    /// n_det × n_obj row-major), the unassignment costs and the per-object
    /// mitosis costs.
    pub fn from_blocks(left: &Matrix<S>, unassigned: Vec<S>, mitosis_cost: Vec<S>) -> Result<Self> {
        let (n_det, n_obj) = (left.rows(), left.cols());
        if unassigned.len() != n_det || mitosis_cost.len() != n_obj {
            return Err(Error::ShapeMismatch("block sizes disagree".into()));
        }
        let width = 2 * n_obj + n_det;
        let mut values = Matrix::filled(n_det, width, S::infinity());
        for j in 0..n_det {
            let row = values.row_mut(j);
            for i in 0..n_obj {
                let c = left.get(j, i);
                row[i] = c;
                row[n_obj + n_det + i] = c + mitosis_cost[i];
            }
            row[n_obj + j] = unassigned[j];
        }
        Ok(Self {
            n_det,
            n_obj,
            values,
            mitosis_cost,
            unassigned,
        })
    }

    pub fn n_det(&self) -> usize {
        self.n_det
    }

    pub fn n_obj(&self) -> usize {
        self.n_obj
    }

    pub fn values(&self) -> &Matrix<S> {
        &self.values
    }

    pub fn mitosis_costs(&self) -> &[S] {
        &self.mitosis_cost
    }

    pub fn unassigned_costs(&self) -> &[S] {
        &self.unassigned
    }

    pub fn association(&self, det: usize, obj: usize) -> S {
        self.values.get(det, obj)
    }

    /// Target of each column: objects are `0..n_obj`, "unassigned" for
    /// detection j is `n_obj + j`.
    pub fn targets(&self) -> Targets {
        let (o, d) = (self.n_obj, self.n_det);
        Targets::new(
            (0..2 * o + d)
                .map(|c| if c < o + d { c } else { c - o - d })
                .collect(),
        )
    }

    /// The standard formulation `[ C | Diag∞(c_u) ]` without mitosis columns.
    pub fn standard(&self) -> Matrix<S> {
        let width = self.n_obj + self.n_det;
        let mut m = Matrix::filled(self.n_det, width, S::infinity());
        for j in 0..self.n_det {
            m.row_mut(j).copy_from_slice(&self.values.row(j)[..width]);
        }
        m
    }

    pub fn events(&self, a: &Assignment<S>) -> Events {
        let (o, d) = (self.n_obj, self.n_det);
        let mut per_obj: Vec<Vec<usize>> = vec![Vec::new(); o];
        let mut detections = vec![DetectionEvent::Unassigned; d];
        for (row, &col) in a.row_to_col.iter().enumerate() {
            let obj = if col < o {
                Some(col)
            } else if col >= o + d {
                Some(col - o - d)
            } else {
                None
            };
            if let Some(i) = obj {
                per_obj[i].push(row);
                detections[row] = DetectionEvent::Matched(i);
            }
        }
        let objects = per_obj
            .into_iter()
            .map(|rows| match rows.as_slice() {
                [] => ObjectEvent::Missed,
                [r] => ObjectEvent::Matched(*r),
                [a, b] => ObjectEvent::Mitosis(*a.min(b), *a.max(b)),
                _ => unreachable!("an object has exactly two columns"),
            })
            .collect();
        Events {
            objects,
            detections,
        }
    }

    /// The same events priced with per-object missed-detection costs
    /// folded in: for any canonical assignment, its total on the result plus
    /// `Σ missed` equals its total on `self` plus the missed costs of the
    /// objects it leaves unassigned. Solving the result therefore ranks
    /// assignments by their full cost increment.
    pub fn with_missed_costs(&self, missed: &[S]) -> Result<CostMatrix<S>> {
        if missed.len() != self.n_obj {
            return Err(Error::ShapeMismatch("one missed cost per object".into()));
        }
        let mut left = Matrix::filled(self.n_det, self.n_obj, S::infinity());
        for j in 0..self.n_det {
            for (i, w) in missed.iter().enumerate() {
                left.set(j, i, self.association(j, i) - *w);
            }
        }
        let mitosis = self
            .mitosis_cost
            .iter()
            .zip(missed)
            .map(|(&c, &w)| c + w)
            .collect();
        CostMatrix::from_blocks(&left, self.unassigned_costs().to_vec(), mitosis)
    }

    /// Rewrites an assignment into its canonical column representative:
    /// a lone detection uses the left column of its object, and a division
    /// puts the lower detection row in the left column.
    pub fn canonicalize(&self, a: &Assignment<S>) -> Assignment<S> {
        let (o, d) = (self.n_obj, self.n_det);
        let events = self.events(a);
        let mut row_to_col = a.row_to_col.clone();
        for (i, ev) in events.objects.iter().enumerate() {
            match *ev {
                ObjectEvent::Matched(r) => row_to_col[r] = i,
                ObjectEvent::Mitosis(r1, r2) => {
                    row_to_col[r1] = i;
                    row_to_col[r2] = o + d + i;
                }
                ObjectEvent::Missed => {}
            }
        }
        let total_cost = self.values.cost_of(&row_to_col);
        Assignment {
            row_to_col,
            total_cost,
        }
    }
}

/// Spatial scores of every object against every detection, one row per
/// object.
pub fn object_scores<S: Scalar>(
    dets: &[Detection<S>],
    object: &BernoulliComponent<S>,
    model: &CostModel<S>,
) -> Result<Vec<S>> {
    dets.iter()
        .map(|det| {
            let target = match model.motion {
                MotionModel::Implicit => &det.motion_warped,
                MotionModel::Kalman => &det.centroid,
            };
            spatial_score(&object.position, target, model.gate_mahalanobis_sq)
        })
        .collect()
}

/// Extended matrix from precomputed spatial scores: `scores[i][j]` is the
/// score of object `i` for detection `j`.
pub fn extended_from_scores<S: Scalar>(
    dets: &[Detection<S>],
    objects: &[BernoulliComponent<S>],
    scores: &[&[S]],
    model: &CostModel<S>,
) -> Result<CostMatrix<S>> {
    let (n_det, n_obj) = (dets.len(), objects.len());
    if scores.len() != n_obj || scores.iter().any(|r| r.len() != n_det) {
        return Err(Error::ShapeMismatch("score rows do not match".into()));
    }
    let mut left = Matrix::filled(n_det, n_obj, S::infinity());
    let mut unassigned = Vec::with_capacity(n_det);
    let mut pairs = Vec::with_capacity(n_obj);
    for (j, det) in dets.iter().enumerate() {
        pairs.clear();
        pairs.extend(objects.iter().zip(scores).map(|(o, row)| (o.existence, row[j])));
        let (costs, cu) = association_cost(
            det.clutter_prob,
            &pairs,
            model.p_detect,
            model.p_birth,
            model.clamp_eps,
        );
        left.row_mut(j).copy_from_slice(&costs);
        unassigned.push(cu);
    }
    let mitosis = objects
        .iter()
        .map(|o| model.object_mitosis_cost(o.age))
        .collect();
    CostMatrix::from_blocks(&left, unassigned, mitosis)
}

/// Builds the extended cost matrix of one hypothesis against the
/// detections of the next frame.
pub fn build_extended_matrix<S: Scalar>(
    dets: &[Detection<S>],
    objects: &[BernoulliComponent<S>],
    model: &CostModel<S>,
) -> Result<CostMatrix<S>> {
    let rows = objects
        .iter()
        .map(|o| object_scores(dets, o, model))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[S]> = rows.iter().map(|r| r.as_slice()).collect();
    extended_from_scores(dets, objects, &refs, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{diag2, identity2};

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn score_at_mode() {
        let a = SpatialGaussian::new([1.0, 1.0], diag2(0.5, 0.5)).unwrap();
        let b = SpatialGaussian::new([1.0, 1.0], diag2(0.5, 0.5)).unwrap();
        let s = spatial_score(&a, &b, 25.0).unwrap();
        assert!((s - 1.0 / TWO_PI).abs() < 1e-15);
        assert!((s - 0.159155).abs() < 1e-6);
    }

    #[test]
    fn score_gated_far_apart() {
        let a = SpatialGaussian::new([0.0, 0.0], diag2(0.5, 0.5)).unwrap();
        let b = SpatialGaussian::new([10.0, 0.0], diag2(0.5, 0.5)).unwrap();
        assert_eq!(spatial_score(&a, &b, 25.0).unwrap(), 0.0);
    }

    #[test]
    fn score_regularizes_zero_covariance() {
        let a = SpatialGaussian::new([0.0, 0.0], diag2(0.0, 0.0)).unwrap();
        let s = spatial_score(&a, &a, 25.0).unwrap();
        assert!((s - 1.0 / (TWO_PI * 1e-6)).abs() / s < 1e-12);
    }

    #[test]
    fn costs_worked_example() {
        let (c, cu) = association_cost(0.0, &[(1.0, 1.0 / TWO_PI)], 0.9, 0.1, 1e-12);
        assert!((c[0] - 0.5296).abs() < 1e-4, "{}", c[0]);
        assert!((cu - 0.8889).abs() < 1e-4, "{cu}");
    }

    #[test]
    fn unassigned_without_objects() {
        let (c, cu) = association_cost(0.25, &[], 0.9, 0.1, 1e-12);
        assert!(c.is_empty());
        assert!((cu - (-(0.75f64).ln())).abs() < 1e-15);
        assert!((cu - 0.2877).abs() < 1e-4);
    }

    #[test]
    fn gated_object_costs_infinity() {
        let (c, _) = association_cost(0.0f64, &[(1.0, 0.0), (1.0, 0.1)], 0.9, 0.1, 1e-12);
        assert!(c[0].is_infinite());
        assert!(c[1].is_finite());
    }

    #[test]
    fn clutter_monotonicity() {
        let pairs = [(0.8, 0.05), (1.0, 0.2)];
        let mut prev = association_cost(0.0, &pairs, 0.9, 0.1, 1e-12).0;
        for k in 1..10 {
            let lambda = k as f64 * 0.1;
            let cur = association_cost(lambda, &pairs, 0.9, 0.1, 1e-12).0;
            assert!(cur.iter().zip(&prev).all(|(a, b)| a > b));
            prev = cur;
        }
    }

    #[test]
    fn mitosis_cost_cases() {
        assert_eq!(mitosis_cost::<f64>(None, 2, 1.0, 1e-12), 0.0);
        let c = mitosis_cost(Some(2), 2, 1.0, 1e-12);
        assert!((c + (1.0 - 3.0 * (-2.0f64).exp()).ln()).abs() < 1e-14);
        assert!((c - 0.5209).abs() < 1e-4);
        let c0 = mitosis_cost(Some(0), 5, 0.3, 1e-12);
        assert!((c0 + (1e-12f64).ln()).abs() < 1e-12);
        assert!((c0 - 27.631).abs() < 1e-3);
    }

    fn det(frame: usize, id: u32, x: f64, y: f64) -> Detection<f64> {
        let g = SpatialGaussian::new([x, y], identity2()).unwrap();
        Detection::new(frame, id, g, g, 0.1, 0.0).unwrap()
    }

    fn obj(id: u64, x: f64, y: f64, age: Option<u32>) -> BernoulliComponent<f64> {
        BernoulliComponent {
            object_id: id,
            existence: 1.0,
            position: SpatialGaussian::new([x, y], identity2()).unwrap(),
            age,
            birth_frame: 0,
            parent_id: None,
            history: crate::model::History::born(0, id as u32),
            velocity: [0.0, 0.0],
        }
    }

    fn model() -> CostModel<f64> {
        CostModel::from_config(&TrackerConfig::default().resolve(10, identity2())).unwrap()
    }

    #[test]
    fn extended_shape_and_blocks() {
        let dets = [det(1, 0, 0.0, 0.0), det(1, 1, 1.0, 0.0), det(1, 2, 50.0, 0.0)];
        let objs = [obj(1, 0.5, 0.0, Some(3)), obj(2, 49.0, 0.0, None)];
        let cm = build_extended_matrix(&dets, &objs, &model()).unwrap();
        assert_eq!((cm.values().rows(), cm.values().cols()), (3, 7));
        for j in 0..3 {
            for k in 0..3 {
                let v = cm.values().get(j, 2 + k);
                assert_eq!(v.is_finite(), j == k, "diag block at ({j},{k})");
            }
            for i in 0..2 {
                let l = cm.values().get(j, i);
                let r = cm.values().get(j, 5 + i);
                if l.is_finite() {
                    assert_eq!(r, l + cm.mitosis_costs()[i]);
                } else {
                    assert!(r.is_infinite());
                }
            }
        }
        assert!(cm.values().get(2, 0).is_infinite());
        assert_eq!(cm.mitosis_costs()[1], 0.0);
    }

    #[test]
    fn no_objects_gives_diagonal_only() {
        let dets = [det(0, 0, 0.0, 0.0), det(0, 1, 5.0, 5.0)];
        let cm = build_extended_matrix(&dets, &[], &model()).unwrap();
        assert_eq!((cm.values().rows(), cm.values().cols()), (2, 2));
    }

    #[test]
    fn zero_mitosis_cost_duplicates_left_block() {
        let dets = [det(1, 0, 0.0, 0.0), det(1, 1, 1.0, 0.0)];
        let objs = [obj(1, 0.5, 0.0, None), obj(2, 0.0, 1.0, None)];
        let cm = build_extended_matrix(&dets, &objs, &model()).unwrap();
        for j in 0..2 {
            assert_eq!(&cm.values().row(j)[..2], &cm.values().row(j)[4..]);
        }
    }

    #[test]
    fn events_and_canonical_form() {
        let dets = [det(1, 0, 0.0, 0.0), det(1, 1, 1.0, 0.0)];
        let objs = [obj(1, 0.5, 0.0, None)];
        let cm = build_extended_matrix(&dets, &objs, &model()).unwrap();
        // det 0 → right column, det 1 → left column of the same object
        let swapped = Assignment {
            row_to_col: vec![3, 0],
            total_cost: cm.values().cost_of(&[3, 0]),
        };
        let ev = cm.events(&swapped);
        assert_eq!(ev.objects, vec![ObjectEvent::Mitosis(0, 1)]);
        let canon = cm.canonicalize(&swapped);
        assert_eq!(canon.row_to_col, vec![0, 3]);
        let lone_right = Assignment {
            row_to_col: vec![3, 2],
            total_cost: cm.values().cost_of(&[3, 2]),
        };
        assert_eq!(cm.canonicalize(&lone_right).row_to_col, vec![0, 2]);
        assert_eq!(cm.events(&lone_right).objects, vec![ObjectEvent::Matched(0)]);
    }
}
