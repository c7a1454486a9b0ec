//! Detections, Bernoulli components and hypotheses.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gaussian::{SpatialGaussian, Vec2};
use crate::rng::mix64;
use crate::scalar::Scalar;

/// One measurement of frame `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection<S> {
    pub frame: usize,
    pub det_id: u32,
    pub centroid: SpatialGaussian<S>,
    /// Where the detected cell was in the previous frame, in absolute
    /// coordinates of that frame.
    pub motion_warped: SpatialGaussian<S>,
    pub clutter_prob: S,
    /// Pixel area, 0 when unknown.
    pub area: S,
}

impl<S: Scalar> Detection<S> {
    pub fn new(
        frame: usize,
        det_id: u32,
        centroid: SpatialGaussian<S>,
        motion_warped: SpatialGaussian<S>,
        clutter_prob: S,
        area: S,
    ) -> Result<Self> {
        if !(clutter_prob >= S::zero() && clutter_prob < S::one()) {
            return Err(Error::DomainError(format!("clutter_prob = {clutter_prob}")));
        }
        if !(area >= S::zero()) {
            return Err(Error::DomainError(format!("area = {area}")));
        }
        Ok(Self {
            frame,
            det_id,
            centroid,
            motion_warped,
            clutter_prob,
            area,
        })
    }
}

/// What happened to an object in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observation {
    Detected(u32),
    Missed,
}

#[derive(Debug)]
struct HistoryNode {
    frame: usize,
    obs: Observation,
    prev: Option<Arc<HistoryNode>>,
    /// Full history of the mother cell, set on the first node of a daughter.
    parent: Option<Arc<HistoryNode>>,
    hash: u64,
    len: usize,
}

const BIRTH_TAG: u64 = 0x6269_7274_6800_0001;
const DAUGHTER_TAG: u64 = 0x6461_7567_6874_0002;

fn entry_hash(prev: u64, frame: usize, obs: Observation) -> u64 {
    let code = match obs {
        Observation::Detected(id) => id as u64,
        Observation::Missed => u64::MAX,
    };
    mix64(mix64(prev ^ frame as u64).wrapping_add(code))
}

/// Append-only, structurally shared assignment history of one object.
///
/// Cloning is O(1). Two histories compare equal when they record the same
/// (frame, observation) sequence and descend from equal mother histories.
#[derive(Debug, Clone)]
pub struct History {
    head: Arc<HistoryNode>,
}

impl History {
    /// History of an object born from detection `det_id` in `frame`.
    pub fn born(frame: usize, det_id: u32) -> Self {
        let obs = Observation::Detected(det_id);
        Self {
            head: Arc::new(HistoryNode {
                frame,
                obs,
                prev: None,
                parent: None,
                hash: entry_hash(BIRTH_TAG, frame, obs),
                len: 1,
            }),
        }
    }

    /// History of a daughter of `mother` first seen as `det_id` in `frame`.
    pub fn daughter(mother: &History, frame: usize, det_id: u32) -> Self {
        let obs = Observation::Detected(det_id);
        Self {
            head: Arc::new(HistoryNode {
                frame,
                obs,
                prev: None,
                parent: Some(mother.head.clone()),
                hash: entry_hash(mix64(mother.head.hash ^ DAUGHTER_TAG), frame, obs),
                len: 1,
            }),
        }
    }

    pub fn push(&self, frame: usize, obs: Observation) -> Self {
        Self {
            head: Arc::new(HistoryNode {
                frame,
                obs,
                prev: Some(self.head.clone()),
                parent: None,
                hash: entry_hash(self.head.hash, frame, obs),
                len: self.head.len + 1,
            }),
        }
    }

    /// Hash of the full history including the mother lineage.
    pub fn key(&self) -> u64 {
        self.head.hash
    }

    pub fn len(&self) -> usize {
        self.head.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> (usize, Observation) {
        (self.head.frame, self.head.obs)
    }

    /// Entries oldest first.
    pub fn entries(&self) -> Vec<(usize, Observation)> {
        let mut out = Vec::with_capacity(self.head.len);
        let mut node = Some(&self.head);
        while let Some(n) = node {
            out.push((n.frame, n.obs));
            node = n.prev.as_ref();
        }
        out.reverse();
        out
    }

    pub fn first_frame(&self) -> usize {
        let mut node = &self.head;
        while let Some(p) = node.prev.as_ref() {
            node = p;
        }
        node.frame
    }
}

fn nodes_equal(a: &Arc<HistoryNode>, b: &Arc<HistoryNode>) -> bool {
    let (mut a, mut b) = (a, b);
    loop {
        if Arc::ptr_eq(a, b) {
            return true;
        }
        if a.hash != b.hash || a.len != b.len || a.frame != b.frame || a.obs != b.obs {
            return false;
        }
        match (&a.parent, &b.parent) {
            (None, None) => {}
            (Some(pa), Some(pb)) => {
                if !nodes_equal(pa, pb) {
                    return false;
                }
            }
            _ => return false,
        }
        match (&a.prev, &b.prev) {
            (None, None) => return true,
            (Some(pa), Some(pb)) => {
                a = pa;
                b = pb;
            }
            _ => return false,
        }
    }
}

impl PartialEq for History {
    fn eq(&self, other: &Self) -> bool {
        nodes_equal(&self.head, &other.head)
    }
}

impl Eq for History {}

/// One potential object of a hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliComponent<S> {
    pub object_id: u64,
    pub existence: S,
    pub position: SpatialGaussian<S>,
    /// Frames since birth; known only for daughters of an observed division.
    pub age: Option<u32>,
    pub birth_frame: usize,
    pub parent_id: Option<u64>,
    pub history: History,
    /// Only used by the Kalman motion model.
    pub velocity: Vec2<S>,
}

impl<S: Scalar> BernoulliComponent<S> {
    pub fn is_daughter(&self) -> bool {
        self.parent_id.is_some()
    }
}

/// A weighted explanation of all detections seen so far.
///
/// `weight` is an accumulated cost in nats; lower is more likely.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis<S> {
    pub weight: S,
    pub components: Vec<BernoulliComponent<S>>,
    pub archive: Vec<Arc<BernoulliComponent<S>>>,
    pub next_object_id: u64,
}

impl<S: Scalar> Hypothesis<S> {
    pub fn empty() -> Self {
        Self {
            weight: S::zero(),
            components: Vec::new(),
            archive: Vec::new(),
            next_object_id: 1,
        }
    }

    pub fn all_components(&self) -> impl Iterator<Item = &BernoulliComponent<S>> {
        self.components
            .iter()
            .chain(self.archive.iter().map(|c| c.as_ref()))
    }

    /// Adds a retired object, keeping the archive ordered by history key.
    pub fn archive_insert(archive: &mut Vec<Arc<BernoulliComponent<S>>>, c: Arc<BernoulliComponent<S>>) {
        let key = c.history.key();
        let at = archive.partition_point(|a| a.history.key() <= key);
        archive.insert(at, c);
    }

    /// Sorted history keys of the alive objects, then the archive size and
    /// an order-independent digest of the archived keys. Two hypotheses
    /// describing the same state have equal signatures.
    pub fn signature(&self) -> Vec<u64> {
        let mut sig: Vec<u64> = self.components.iter().map(|c| c.history.key()).collect();
        sig.sort_unstable();
        let digest = self
            .archive
            .iter()
            .fold(0u64, |acc, c| acc.wrapping_add(mix64(c.history.key())));
        sig.push(self.archive.len() as u64);
        sig.push(digest);
        sig
    }

    /// Exact state comparison backing [`Hypothesis::signature`].
    pub fn same_state(&self, other: &Self) -> bool {
        if self.components.len() != other.components.len()
            || self.archive.len() != other.archive.len()
        {
            return false;
        }
        fn sorted<'a, I: Iterator<Item = &'a History>>(it: I) -> Vec<&'a History> {
            let mut v: Vec<&History> = it.collect();
            if !v.is_sorted_by_key(|h| h.key()) {
                v.sort_by_key(|h| h.key());
            }
            v
        }
        let a = sorted(self.components.iter().map(|c| &c.history));
        let b = sorted(other.components.iter().map(|c| &c.history));
        a == b
            && sorted(self.archive.iter().map(|c| &c.history))
                == sorted(other.archive.iter().map(|c| &c.history))
    }
}
