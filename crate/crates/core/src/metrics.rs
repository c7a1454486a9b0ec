//! Lineage evaluation against ground truth: complete tracks (CT), track
//! fractions (TF), branching correctness BC(i) and cell-cycle accuracy
//! (CCA).
//!
//! Detections are matched per frame by centroid distance: pairs closer than
//! `match_radius` are candidates and an optimal one-to-one matching
//! minimizing total distance is taken.

use std::collections::HashMap;

use serde::{Deserialize, Serialize, Serializer};

use crate::assign::{hungarian, Matrix};
use crate::mht::LineageTree;

/// A metric value, or not applicable (no divisions, no complete cycles).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricValue {
    Value(f64),
    NotApplicable,
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(MetricValue::Value(v)),
            Raw::Text(s) if s == "N/A" => Ok(MetricValue::NotApplicable),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("unexpected metric {s:?}"))),
        }
    }
}

impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MetricValue::Value(v) => s.serialize_f64(*v),
            MetricValue::NotApplicable => s.serialize_str("N/A"),
        }
    }
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::NotApplicable => None,
        }
    }

    pub fn is_na(&self) -> bool {
        matches!(self, MetricValue::NotApplicable)
    }
}

impl std::fmt::Display for MetricValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricValue::Value(v) => write!(f, "{v:.4}"),
            MetricValue::NotApplicable => f.write_str("N/A"),
        }
    }
}

/// Per-frame mapping from reference track ids to computed track ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackMatch {
    gt_to_pred: HashMap<(usize, u32), u32>,
}

impl TrackMatch {
    pub fn new(pred: &LineageTree, gt: &LineageTree, match_radius: f64) -> Self {
        let n_frames = pred.n_frames().max(gt.n_frames());
        let mut pred_by_frame: Vec<Vec<(u32, [f64; 2])>> = vec![Vec::new(); n_frames];
        let mut gt_by_frame: Vec<Vec<(u32, [f64; 2])>> = vec![Vec::new(); n_frames];
        for (tree, out) in [(pred, &mut pred_by_frame), (gt, &mut gt_by_frame)] {
            for t in &tree.tracks {
                for p in &t.points {
                    out[p.frame].push((t.id, p.pos));
                }
            }
        }
        let mut gt_to_pred = HashMap::new();
        for (f, (g, p)) in gt_by_frame.iter().zip(&pred_by_frame).enumerate() {
            for (gi, pi) in match_frame(g, p, match_radius) {
                gt_to_pred.insert((f, g[gi].0), p[pi].0);
            }
        }
        Self { gt_to_pred }
    }

    /// The computed track matched to reference track `gt` at `frame`.
    pub fn pred_of(&self, frame: usize, gt: u32) -> Option<u32> {
        self.gt_to_pred.get(&(frame, gt)).copied()
    }

    pub fn len(&self) -> usize {
        self.gt_to_pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gt_to_pred.is_empty()
    }
}

/// Minimum-distance one-to-one matching of points closer than `radius`.
/// Unmatched reference points take a dummy column of cost `radius`, so any
/// admissible pair beats leaving both sides unmatched.
fn match_frame(gt: &[(u32, [f64; 2])], pred: &[(u32, [f64; 2])], radius: f64) -> Vec<(usize, usize)> {
    if gt.is_empty() || pred.is_empty() {
        return Vec::new();
    }
    let (n, m) = (gt.len(), pred.len());
    let mut cost = Matrix::filled(n, m + n, f64::INFINITY);
    let mut any = false;
    for (i, (_, a)) in gt.iter().enumerate() {
        for (j, (_, b)) in pred.iter().enumerate() {
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            if d < radius {
                cost.set(i, j, d);
                any = true;
            }
        }
        cost.set(i, m + i, radius);
    }
    if !any {
        return Vec::new();
    }
    let a = hungarian(&cost).expect("dummy columns keep the problem feasible");
    a.row_to_col
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c < m)
        .map(|(i, &c)| (i, c))
        .collect()
}

/// Fraction of reference tracks reproduced over their whole extent by a
/// single computed track with the same first and last frame.
pub fn complete_tracks(pred: &LineageTree, gt: &LineageTree, match_radius: f64) -> MetricValue {
    complete_tracks_with(pred, gt, &TrackMatch::new(pred, gt, match_radius))
}

pub fn complete_tracks_with(pred: &LineageTree, gt: &LineageTree, m: &TrackMatch) -> MetricValue {
    if gt.tracks.is_empty() {
        return MetricValue::NotApplicable;
    }
    let complete = gt
        .tracks
        .iter()
        .filter(|g| {
            let Some(p) = m.pred_of(g.begin(), g.id) else {
                return false;
            };
            let Some(pt) = pred.get(p) else {
                return false;
            };
            pt.begin() == g.begin()
                && pt.end() == g.end()
                && (g.begin()..=g.end()).all(|f| m.pred_of(f, g.id) == Some(p))
        })
        .count();
    MetricValue::Value(complete as f64 / gt.tracks.len() as f64)
}

/// Mean over reference tracks of the longest run of consecutive frames
/// matched to one computed track, relative to the track length.
pub fn track_fractions(pred: &LineageTree, gt: &LineageTree, match_radius: f64) -> MetricValue {
    track_fractions_with(gt, &TrackMatch::new(pred, gt, match_radius))
}

pub fn track_fractions_with(gt: &LineageTree, m: &TrackMatch) -> MetricValue {
    if gt.tracks.is_empty() {
        return MetricValue::NotApplicable;
    }
    let total: f64 = gt
        .tracks
        .iter()
        .map(|g| {
            let (mut best, mut run, mut current) = (0usize, 0usize, None);
            for f in g.begin()..=g.end() {
                match m.pred_of(f, g.id) {
                    Some(p) if current == Some(p) => run += 1,
                    Some(p) => {
                        current = Some(p);
                        run = 1;
                    }
                    None => {
                        current = None;
                        run = 0;
                    }
                }
                best = best.max(run);
            }
            best as f64 / g.len() as f64
        })
        .sum();
    MetricValue::Value(total / gt.tracks.len() as f64)
}

/// F1 score of detected divisions. A computed division at frame t' matches
/// a reference division at t when |t − t'| ≤ `tolerance`, the parents are
/// matched at frame min(t, t') − 1 and the daughter pairs are matched as
/// sets at frame max(t, t'). Matching is greedy one-to-one, closest in time
/// first.
pub fn branching_correctness(
    pred: &LineageTree,
    gt: &LineageTree,
    match_radius: f64,
    tolerance: usize,
) -> MetricValue {
    branching_correctness_with(pred, gt, &TrackMatch::new(pred, gt, match_radius), tolerance)
}

pub fn branching_correctness_with(
    pred: &LineageTree,
    gt: &LineageTree,
    m: &TrackMatch,
    tolerance: usize,
) -> MetricValue {
    let gt_div = gt.divisions();
    if gt_div.is_empty() {
        return MetricValue::NotApplicable;
    }
    let pred_div = pred.divisions();
    let begin = |tree: &LineageTree, id: u32| tree.get(id).map(|t| t.begin()).unwrap_or(0);
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for (gi, &(gp, gd)) in gt_div.iter().enumerate() {
        let t = begin(gt, gd[0]);
        for (pi, &(pp, pd)) in pred_div.iter().enumerate() {
            let tp = begin(pred, pd[0]);
            let dt = t.abs_diff(tp);
            if dt > tolerance || t.min(tp) == 0 {
                continue;
            }
            let before = t.min(tp) - 1;
            let after = t.max(tp);
            if m.pred_of(before, gp) != Some(pp) {
                continue;
            }
            let mut got = [m.pred_of(after, gd[0]), m.pred_of(after, gd[1])];
            got.sort_unstable();
            if got == [Some(pd[0]), Some(pd[1])] {
                candidates.push((dt, gi, pi));
            }
        }
    }
    candidates.sort_unstable();
    let (mut used_g, mut used_p) = (vec![false; gt_div.len()], vec![false; pred_div.len()]);
    let mut tp = 0usize;
    for (_, gi, pi) in candidates {
        if !used_g[gi] && !used_p[pi] {
            used_g[gi] = true;
            used_p[pi] = true;
            tp += 1;
        }
    }
    MetricValue::Value(2.0 * tp as f64 / (gt_div.len() + pred_div.len()) as f64)
}

/// Lengths of complete cell cycles: tracks born by division that divide
/// themselves.
pub fn cycle_lengths(tree: &LineageTree) -> Vec<usize> {
    let parents: std::collections::HashSet<u32> =
        tree.divisions().into_iter().map(|(p, _)| p).collect();
    let mut out: Vec<usize> = tree
        .tracks
        .iter()
        .filter(|t| t.parent != 0 && parents.contains(&t.id))
        .map(|t| t.len())
        .collect();
    out.sort_unstable();
    out
}

/// One minus the largest distance between the empirical distribution
/// functions of computed and reference cycle lengths.
pub fn cell_cycle_accuracy(pred: &LineageTree, gt: &LineageTree) -> MetricValue {
    let (a, b) = (cycle_lengths(pred), cycle_lengths(gt));
    if a.is_empty() || b.is_empty() {
        return MetricValue::NotApplicable;
    }
    let cdf = |v: &[usize], t: usize| v.partition_point(|&x| x <= t) as f64 / v.len() as f64;
    let sup = a
        .iter()
        .chain(&b)
        .map(|&t| (cdf(&a, t) - cdf(&b, t)).abs())
        .fold(0.0, f64::max);
    MetricValue::Value(1.0 - sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(rename = "CT")]
    pub ct: MetricValue,
    #[serde(rename = "TF")]
    pub tf: MetricValue,
    #[serde(rename = "BC(1)")]
    pub bc1: MetricValue,
    #[serde(rename = "BC(2)")]
    pub bc2: MetricValue,
    #[serde(rename = "CCA")]
    pub cca: MetricValue,
}

pub fn evaluate(pred: &LineageTree, gt: &LineageTree, match_radius: f64) -> Report {
    let m = TrackMatch::new(pred, gt, match_radius);
    Report {
        ct: complete_tracks_with(pred, gt, &m),
        tf: track_fractions_with(gt, &m),
        bc1: branching_correctness_with(pred, gt, &m, 1),
        bc2: branching_correctness_with(pred, gt, &m, 2),
        cca: cell_cycle_accuracy(pred, gt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mht::{Track, TrackPoint};

    fn track(id: u32, parent: u32, begin: usize, end: usize, x: f64) -> Track {
        Track {
            id,
            parent,
            points: (begin..=end)
                .map(|f| TrackPoint {
                    frame: f,
                    det_id: Some(id),
                    pos: [x, f as f64 * 0.1],
                })
                .collect(),
        }
    }

    /// Parent 1 on frames 0..=4 dividing into 2 and 3 on 5..=9.
    fn family(split: usize) -> LineageTree {
        LineageTree {
            tracks: vec![
                track(1, 0, 0, split - 1, 50.0),
                track(2, 1, split, 9, 40.0),
                track(3, 1, split, 9, 60.0),
                track(4, 0, 0, 9, 100.0),
            ],
        }
    }

    #[test]
    fn identity_is_perfect() {
        let gt = family(5);
        let r = evaluate(&gt, &gt, 5.0);
        assert_eq!(r.ct, MetricValue::Value(1.0));
        assert_eq!(r.tf, MetricValue::Value(1.0));
        assert_eq!(r.bc1, MetricValue::Value(1.0));
        assert_eq!(r.bc2, MetricValue::Value(1.0));
        assert_eq!(r.cca, MetricValue::NotApplicable);
    }

    #[test]
    fn truncated_track_costs_one_complete() {
        let gt = family(5);
        let mut pred = gt.clone();
        pred.tracks[3].points.pop();
        assert_eq!(complete_tracks(&pred, &gt, 5.0), MetricValue::Value(0.75));
    }

    #[test]
    fn identity_switch_halves_fraction() {
        let gt = LineageTree {
            tracks: vec![track(1, 0, 0, 9, 0.0)],
        };
        let mut a = track(7, 0, 0, 4, 0.0);
        let b = track(8, 0, 5, 9, 0.0);
        a.points.truncate(5);
        let pred = LineageTree { tracks: vec![a, b] };
        assert_eq!(track_fractions(&pred, &gt, 5.0), MetricValue::Value(0.5));
        assert_eq!(complete_tracks(&pred, &gt, 5.0), MetricValue::Value(0.0));
    }

    #[test]
    fn division_tolerance() {
        let gt = family(5);
        let shifted = family(6);
        assert_eq!(branching_correctness(&shifted, &gt, 15.0, 1), MetricValue::Value(1.0));
        assert_eq!(branching_correctness(&shifted, &gt, 15.0, 0), MetricValue::Value(0.0));
        let none = LineageTree {
            tracks: vec![track(1, 0, 0, 9, 50.0), track(4, 0, 0, 9, 100.0)],
        };
        assert_eq!(branching_correctness(&none, &gt, 5.0, 1), MetricValue::Value(0.0));
        assert_eq!(branching_correctness(&gt, &none, 5.0, 1), MetricValue::NotApplicable);
    }

    #[test]
    fn cca_two_point_example() {
        // daughters of 1 that divide themselves after 10 and 20 (or 30) frames
        let tree = |second: usize| {
            let mut t = vec![
                track(1, 0, 0, 0, 0.0),
                track(2, 1, 1, 10, 10.0),
                track(3, 1, 1, second, 20.0),
            ];
            let mut next = 4;
            for (p, end) in [(2u32, 10usize), (3, second)] {
                for x in [0.0, 1.0] {
                    t.push(track(next, p, end + 1, end + 1, 30.0 + x));
                    next += 1;
                }
            }
            LineageTree { tracks: t }
        };
        let (a, b) = (tree(20), tree(30));
        a.validate().unwrap();
        assert_eq!(cycle_lengths(&a), vec![10, 20]);
        assert_eq!(cell_cycle_accuracy(&a, &b), MetricValue::Value(0.5));
        assert_eq!(cell_cycle_accuracy(&a, &a), MetricValue::Value(1.0));
    }

    #[test]
    fn na_serializes_as_string() {
        let s = serde_json::to_string(&MetricValue::NotApplicable).unwrap();
        assert_eq!(s, "\"N/A\"");
        let back: MetricValue = serde_json::from_str(&s).unwrap();
        assert_eq!(back, MetricValue::NotApplicable);
        let v: MetricValue = serde_json::from_str("0.25").unwrap();
        assert_eq!(v, MetricValue::Value(0.25));
    }
}
