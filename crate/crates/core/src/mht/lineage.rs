//! Track extraction from the best hypothesis and lineage post-processing.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::HypothesisStore;
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::model::{Detection, Observation};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame: usize,
    /// `None` for interpolated or held positions.
    pub det_id: Option<u32>,
    pub pos: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u32,
    /// 0 when the track has no parent.
    pub parent: u32,
    /// One point per frame from begin to end.
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn begin(&self) -> usize {
        self.points[0].frame
    }

    pub fn end(&self) -> usize {
        self.points[self.points.len() - 1].frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_detections(&self) -> usize {
        self.points.iter().filter(|p| p.det_id.is_some()).count()
    }

    pub fn at(&self, frame: usize) -> Option<&TrackPoint> {
        frame
            .checked_sub(self.begin())
            .and_then(|i| self.points.get(i))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LineageTree {
    pub tracks: Vec<Track>,
}

impl LineageTree {
    pub fn get(&self, id: u32) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn children(&self, id: u32) -> Vec<&Track> {
        self.tracks.iter().filter(|t| t.parent == id).collect()
    }

    /// Every division as (parent id, [daughter ids ascending]).
    pub fn divisions(&self) -> Vec<(u32, [u32; 2])> {
        let mut by_parent: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for t in self.tracks.iter().filter(|t| t.parent != 0) {
            by_parent.entry(t.parent).or_default().push(t.id);
        }
        by_parent
            .into_iter()
            .filter(|(_, c)| c.len() == 2)
            .map(|(p, mut c)| {
                c.sort_unstable();
                (p, [c[0], c[1]])
            })
            .collect()
    }

    pub fn n_frames(&self) -> usize {
        self.tracks.iter().map(|t| t.end() + 1).max().unwrap_or(0)
    }

    /// Checks the structural invariants: unique non-zero ids, contiguous
    /// points, parents ending one frame before their children begin, and
    /// exactly two children per parent.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidLineage(m));
        let mut ids: HashMap<u32, &Track> = HashMap::new();
        for t in &self.tracks {
            if t.id == 0 {
                return bad("track id 0 is reserved".into());
            }
            if ids.insert(t.id, t).is_some() {
                return bad(format!("duplicate track id {}", t.id));
            }
            if t.points.is_empty() {
                return bad(format!("track {} has no points", t.id));
            }
            for (i, p) in t.points.iter().enumerate() {
                if p.frame != t.begin() + i {
                    return bad(format!("track {} skips frames", t.id));
                }
                if !(p.pos[0].is_finite() && p.pos[1].is_finite()) {
                    return bad(format!("track {} has a non-finite position", t.id));
                }
            }
        }
        let mut n_children: HashMap<u32, usize> = HashMap::new();
        for t in self.tracks.iter().filter(|t| t.parent != 0) {
            let Some(p) = ids.get(&t.parent) else {
                return bad(format!("track {} has unknown parent {}", t.id, t.parent));
            };
            if p.end() + 1 != t.begin() {
                return bad(format!(
                    "parent {} ends at {} but child {} begins at {}",
                    p.id,
                    p.end(),
                    t.id,
                    t.begin()
                ));
            }
            *n_children.entry(t.parent).or_default() += 1;
        }
        if let Some((p, n)) = n_children.iter().find(|(_, &n)| n != 2) {
            return bad(format!("track {p} has {n} children"));
        }
        Ok(())
    }
}

#[derive(Debug)]
struct Raw {
    object_id: u64,
    parent: Option<u64>,
    points: Vec<TrackPoint>,
    children: Vec<u64>,
}

impl Raw {
    fn begin(&self) -> usize {
        self.points[0].frame
    }

    fn end(&self) -> usize {
        self.points[self.points.len() - 1].frame
    }

    fn n_det(&self) -> usize {
        self.points.iter().filter(|p| p.det_id.is_some()).count()
    }

    /// Repeats the last position up to and including `frame`.
    fn hold_until(&mut self, frame: usize) {
        let last = self.points[self.points.len() - 1];
        for f in last.frame + 1..=frame {
            self.points.push(TrackPoint {
                frame: f,
                det_id: None,
                pos: last.pos,
            });
        }
    }
}

/// Points of one history, trailing misses removed and inner gaps
/// interpolated linearly.
fn history_points<S: Scalar>(
    entries: &[(usize, Observation)],
    lookup: &HashMap<(usize, u32), [f64; 2]>,
) -> Result<Vec<TrackPoint>> {
    let last_det = entries
        .iter()
        .rposition(|(_, o)| matches!(o, Observation::Detected(_)))
        .ok_or_else(|| Error::InvalidLineage("history without detections".into()))?;
    let mut anchors: Vec<(usize, u32, [f64; 2])> = Vec::new();
    for &(frame, obs) in &entries[..=last_det] {
        if let Observation::Detected(id) = obs {
            let pos = *lookup.get(&(frame, id)).ok_or_else(|| {
                Error::InvalidLineage(format!("detection {id} of frame {frame} not found"))
            })?;
            anchors.push((frame, id, pos));
        }
    }
    let mut points = Vec::new();
    for (w, &(frame, id, pos)) in anchors.iter().enumerate() {
        if w > 0 {
            let (f0, _, p0) = anchors[w - 1];
            let span = (frame - f0) as f64;
            for f in f0 + 1..frame {
                let t = (f - f0) as f64 / span;
                points.push(TrackPoint {
                    frame: f,
                    det_id: None,
                    pos: [p0[0] + t * (pos[0] - p0[0]), p0[1] + t * (pos[1] - p0[1])],
                });
            }
        }
        points.push(TrackPoint {
            frame,
            det_id: Some(id),
            pos,
        });
    }
    Ok(points)
}

/// Lineage of the lowest-weight hypothesis. `frames[k]` must hold the
/// detections the store saw at frame `k`.
///
/// Post-processing drops leaf tracks with fewer than `min_track_len`
/// detections; when that leaves a parent with a single daughter, the
/// daughter is merged back into the parent. Parents are held at their last
/// position up to the frame before their daughters appear.
pub fn extract_lineage<S: Scalar>(
    store: &HypothesisStore<S>,
    frames: &[Vec<Detection<S>>],
    cfg: &TrackerConfig,
) -> Result<LineageTree> {
    let best = store
        .best()
        .ok_or_else(|| Error::InvalidLineage("empty hypothesis store".into()))?;
    let lookup: HashMap<(usize, u32), [f64; 2]> = frames
        .iter()
        .flatten()
        .map(|d| {
            (
                (d.frame, d.det_id),
                [d.centroid.mean[0].to_f64_lossy(), d.centroid.mean[1].to_f64_lossy()],
            )
        })
        .collect();

    let mut raws: HashMap<u64, Raw> = HashMap::new();
    for c in best.all_components() {
        let points = history_points::<S>(&c.history.entries(), &lookup)?;
        raws.insert(
            c.object_id,
            Raw {
                object_id: c.object_id,
                parent: c.parent_id,
                points,
                children: Vec::new(),
            },
        );
    }
    let links: Vec<(u64, u64)> = raws
        .values()
        .filter_map(|r| r.parent.map(|p| (p, r.object_id)))
        .collect();
    for (p, c) in links {
        raws.get_mut(&p)
            .ok_or_else(|| Error::InvalidLineage(format!("missing parent object {p}")))?
            .children
            .push(c);
    }

    let mut order: Vec<u64> = raws.keys().copied().collect();
    order.sort_by_key(|id| (std::cmp::Reverse(raws[id].begin()), *id));
    for id in order {
        let mut raw = raws.remove(&id).expect("present");
        raw.children.retain(|c| raws.contains_key(c));
        raw.children.sort_unstable();
        if raw.children.len() == 1 {
            let child = raws.remove(&raw.children[0]).expect("kept child");
            raw.hold_until(child.begin() - 1);
            raw.points.extend(child.points);
            for g in &child.children {
                raws.get_mut(g).expect("kept grandchild").parent = Some(id);
            }
            raw.children = child.children;
        }
        if let Some(&c) = raw.children.first() {
            let begin = raws[&c].begin();
            raw.hold_until(begin - 1);
        } else if raw.n_det() < cfg.min_track_len {
            continue;
        }
        raws.insert(id, raw);
    }

    let mut kept: Vec<&Raw> = raws.values().collect();
    kept.sort_by_key(|r| (r.begin(), r.points[0].det_id, r.object_id));
    let label: HashMap<u64, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, r)| (r.object_id, i as u32 + 1))
        .collect();
    let tree = LineageTree {
        tracks: kept
            .iter()
            .map(|r| Track {
                id: label[&r.object_id],
                parent: r.parent.map(|p| label[&p]).unwrap_or(0),
                points: r.points.clone(),
            })
            .collect(),
    };
    debug_assert!(kept.iter().all(|r| r.end() >= r.begin()));
    tree.validate()?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(frame: usize, x: f64) -> TrackPoint {
        TrackPoint {
            frame,
            det_id: Some(0),
            pos: [x, 0.0],
        }
    }

    #[test]
    fn validation_catches_broken_trees() {
        let parent = Track {
            id: 1,
            parent: 0,
            points: vec![pt(0, 0.0), pt(1, 0.0)],
        };
        let child = |id, begin| Track {
            id,
            parent: 1,
            points: vec![pt(begin, 0.0)],
        };
        let ok = LineageTree {
            tracks: vec![parent.clone(), child(2, 2), child(3, 2)],
        };
        ok.validate().unwrap();
        assert_eq!(ok.divisions(), vec![(1, [2, 3])]);
        let one_child = LineageTree {
            tracks: vec![parent.clone(), child(2, 2)],
        };
        assert!(one_child.validate().is_err());
        let gap = LineageTree {
            tracks: vec![parent, child(2, 3), child(3, 3)],
        };
        assert!(gap.validate().is_err());
    }

    #[test]
    fn gaps_are_interpolated() {
        let lookup: HashMap<(usize, u32), [f64; 2]> =
            [((4, 1), [0.0, 0.0]), ((6, 2), [2.0, 4.0])].into_iter().collect();
        let entries = [
            (4, Observation::Detected(1)),
            (5, Observation::Missed),
            (6, Observation::Detected(2)),
            (7, Observation::Missed),
        ];
        let p = history_points::<f64>(&entries, &lookup).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[1].pos, [1.0, 2.0]);
        assert_eq!(p[1].det_id, None);
    }
}
