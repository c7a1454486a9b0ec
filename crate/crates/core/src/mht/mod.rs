//! The multi-hypothesis filter recursion: predict, sample, update, reduce.

mod lineage;
mod motion;

pub use lineage::{extract_lineage, LineageTree, Track, TrackPoint};
pub use motion::estimate_mean_motion_cov;

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::assign::{
    extended_from_scores, object_scores, sample_assignments_cached, ClusterCache, CostMatrix, CostModel, DetectionEvent, ObjectEvent,
};
use crate::config::{MotionModel, TrackerConfig};
use crate::error::{Error, Result};
use crate::gaussian::{add2, identity2, inv2, mat_vec2, mul2, scale2, Mat2, SpatialGaussian};
use crate::model::{BernoulliComponent, Detection, History, Hypothesis, Observation};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// The hypothesis mixture after processing `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisStore<S> {
    /// Last processed frame, `None` before the first step.
    pub frame: Option<usize>,
    /// Sorted by weight, best first.
    pub hypotheses: Vec<Hypothesis<S>>,
}

impl<S: Scalar> Default for HypothesisStore<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> HypothesisStore<S> {
    /// A single empty hypothesis of weight 0.
    pub fn new() -> Self {
        Self {
            frame: None,
            hypotheses: vec![Hypothesis::empty()],
        }
    }

    pub fn best(&self) -> Option<&Hypothesis<S>> {
        self.hypotheses.first()
    }
}

/// How one child hypothesis' weight was composed.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry<S> {
    pub parent: usize,
    pub parent_weight: S,
    /// The sampled assignment's row-to-column map on the parent's matrix.
    pub row_to_col: Vec<usize>,
    pub assignment_cost: S,
    pub missed_penalty: S,
    pub weight: S,
}

fn mean_motion_cov<S: Scalar>(cfg: &TrackerConfig) -> Result<Mat2<S>> {
    let m = cfg
        .mean_motion_cov
        .fixed()
        .ok_or_else(|| Error::DomainError("mean_motion_cov unresolved".into()))?;
    Ok([
        [S::lit(m[0][0]), S::lit(m[0][1])],
        [S::lit(m[1][0]), S::lit(m[1][1])],
    ])
}

/// Inflates every component covariance by the mean-motion covariance and,
/// in Kalman mode, moves each mean by its velocity.
pub fn predict<S: Scalar>(store: &HypothesisStore<S>, cfg: &TrackerConfig) -> Result<HypothesisStore<S>> {
    let q = mean_motion_cov::<S>(cfg)?;
    let kalman = cfg.motion_model == MotionModel::Kalman;
    let mut out = store.clone();
    for h in &mut out.hypotheses {
        for c in &mut h.components {
            predict_component(c, &q, kalman);
        }
    }
    Ok(out)
}

fn predict_component<S: Scalar>(c: &mut BernoulliComponent<S>, q: &Mat2<S>, kalman: bool) {
    c.position = c.position.inflated(q);
    if kalman {
        c.position.mean[0] += c.velocity[0];
        c.position.mean[1] += c.velocity[1];
    }
}

fn missed_penalty<S: Scalar>(existence: S, p_detect: S) -> S {
    -(S::one() - existence * p_detect).ln()
}

fn kalman_update<S: Scalar>(prior: &SpatialGaussian<S>, z: &SpatialGaussian<S>) -> SpatialGaussian<S> {
    let ridge = scale2(&identity2(), S::lit(1e-6));
    let s = add2(&add2(&prior.cov, &z.cov), &ridge);
    let Some(s_inv) = inv2(&s) else {
        return *z;
    };
    let gain = mul2(&prior.cov, &s_inv);
    let innov = [z.mean[0] - prior.mean[0], z.mean[1] - prior.mean[1]];
    let corr = mat_vec2(&gain, &innov);
    let mean = [prior.mean[0] + corr[0], prior.mean[1] + corr[1]];
    let i_k = add2(&identity2(), &scale2(&gain, -S::one()));
    let cov = mul2(&i_k, &prior.cov);
    SpatialGaussian::new(mean, cov).unwrap_or(*z)
}

struct Ctx<'a, S> {
    frame: usize,
    dets: &'a [Detection<S>],
    cfg: &'a TrackerConfig,
    q: Mat2<S>,
    p_detect: S,
    existence_floor: S,
    kalman: bool,
}

/// Builds the child of `parent` for one sampled assignment. `objects` are
/// the parent's components as they entered the matrix.
fn spawn_child<S: Scalar>(
    ctx: &Ctx<'_, S>,
    parent: &Hypothesis<S>,
    objects: &[BernoulliComponent<S>],
    cm: &CostMatrix<S>,
    row_to_col: &[usize],
    assignment_cost: S,
) -> (Hypothesis<S>, S) {
    let events = cm.events(&crate::assign::Assignment {
        row_to_col: row_to_col.to_vec(),
        total_cost: assignment_cost,
    });
    let frame = ctx.frame;
    let mut next_id = parent.next_object_id;
    let mut components = Vec::with_capacity(objects.len() + ctx.dets.len());
    let mut archive = parent.archive.clone();
    let mut penalty = S::zero();
    let age_now = |c: &BernoulliComponent<S>| c.age.map(|_| (frame - c.birth_frame) as u32);

    for (obj, ev) in objects.iter().zip(&events.objects) {
        match *ev {
            ObjectEvent::Matched(row) => {
                let det = &ctx.dets[row];
                let mut c = obj.clone();
                if ctx.kalman {
                    let updated = kalman_update(&obj.position, &det.centroid);
                    let before = [
                        obj.position.mean[0] - obj.velocity[0],
                        obj.position.mean[1] - obj.velocity[1],
                    ];
                    c.velocity = [updated.mean[0] - before[0], updated.mean[1] - before[1]];
                    c.position = updated;
                } else {
                    c.position = det.centroid;
                }
                c.existence = S::one();
                c.age = age_now(obj);
                c.history = obj.history.push(frame, Observation::Detected(det.det_id));
                components.push(c);
            }
            ObjectEvent::Mitosis(r1, r2) => {
                Hypothesis::archive_insert(&mut archive, Arc::new(obj.clone()));
                for row in [r1, r2] {
                    let det = &ctx.dets[row];
                    components.push(BernoulliComponent {
                        object_id: next_id,
                        existence: S::one(),
                        position: det.centroid,
                        age: Some(0),
                        birth_frame: frame,
                        parent_id: Some(obj.object_id),
                        history: History::daughter(&obj.history, frame, det.det_id),
                        velocity: [S::zero(); 2],
                    });
                    next_id += 1;
                }
            }
            ObjectEvent::Missed => {
                penalty += missed_penalty(obj.existence, ctx.p_detect);
                let r = obj.existence;
                let existence = r * (S::one() - ctx.p_detect) / (S::one() - r * ctx.p_detect);
                if existence < ctx.existence_floor {
                    Hypothesis::archive_insert(&mut archive, Arc::new(obj.clone()));
                    continue;
                }
                let mut c = obj.clone();
                if !ctx.kalman {
                    c.position = obj.position.inflated(&ctx.q);
                }
                c.existence = existence;
                c.age = age_now(obj);
                c.history = obj.history.push(frame, Observation::Missed);
                components.push(c);
            }
        }
    }
    for (row, ev) in events.detections.iter().enumerate() {
        if *ev == DetectionEvent::Unassigned {
            let det = &ctx.dets[row];
            components.push(BernoulliComponent {
                object_id: next_id,
                existence: S::one() - det.clutter_prob,
                position: det.centroid,
                age: None,
                birth_frame: frame,
                parent_id: None,
                history: History::born(frame, det.det_id),
                velocity: [S::zero(); 2],
            });
            next_id += 1;
        }
    }
    let weight = parent.weight + assignment_cost + penalty;
    (
        Hypothesis {
            weight,
            components,
            archive,
            next_object_id: next_id,
        },
        penalty,
    )
}

/// One full recursion over the detections of `frame`, returning the
/// reduced store together with the weight ledger of every child spawned.
pub fn step_detailed<S: Scalar>(
    store: &HypothesisStore<S>,
    frame: usize,
    dets: &[Detection<S>],
    cfg: &TrackerConfig,
    stream: &RngStream,
) -> Result<(HypothesisStore<S>, Vec<LedgerEntry<S>>)> {
    if let Some(k) = store.frame {
        if frame != k + 1 {
            return Err(Error::FrameOrder {
                expected: k + 1,
                got: frame,
            });
        }
    }
    if let Some(d) = dets.iter().find(|d| d.frame != frame) {
        return Err(Error::FrameOrder {
            expected: frame,
            got: d.frame,
        });
    }
    let model = CostModel::<S>::from_config(cfg)?;
    let ctx = Ctx {
        frame,
        dets,
        cfg,
        q: mean_motion_cov(cfg)?,
        p_detect: S::lit(cfg.p_detect),
        existence_floor: S::lit(cfg.existence_floor),
        kalman: cfg.motion_model == MotionModel::Kalman,
    };
    let frame_stream = stream.split(frame as u64);

    // A component's state is a function of its history, so spatial scores
    // are computed once per distinct history and shared across hypotheses.
    let mut slots: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut distinct: Vec<&BernoulliComponent<S>> = Vec::new();
    for c in store.hypotheses.iter().flat_map(|h| &h.components) {
        let bucket = slots.entry(c.history.key()).or_default();
        if !bucket.iter().any(|&i| distinct[i].history == c.history) {
            bucket.push(distinct.len());
            distinct.push(c);
        }
    }
    let score_rows: Vec<Vec<S>> = distinct
        .par_iter()
        .map(|&c| {
            if ctx.kalman {
                let mut c = c.clone();
                predict_component(&mut c, &ctx.q, true);
                object_scores(dets, &c, &model)
            } else {
                object_scores(dets, c, &model)
            }
        })
        .collect::<Result<_>>()?;
    let cache = ClusterCache::new();
    let row_of = |c: &BernoulliComponent<S>| -> &[S] {
        let i = slots[&c.history.key()]
            .iter()
            .copied()
            .find(|&i| distinct[i].history == c.history)
            .expect("every component has a score row");
        &score_rows[i]
    };

    let per_parent: Vec<Result<Vec<(Hypothesis<S>, LedgerEntry<S>)>>> = store
        .hypotheses
        .par_iter()
        .enumerate()
        .map(|(h, parent)| {
            let objects: Vec<BernoulliComponent<S>> = if ctx.kalman {
                let mut v = parent.components.clone();
                v.iter_mut().for_each(|c| predict_component(c, &ctx.q, true));
                v
            } else {
                parent.components.clone()
            };
            let rows: Vec<&[S]> = parent.components.iter().map(row_of).collect();
            let cm = extended_from_scores(dets, &objects, &rows, &model)?;
            let missed: Vec<S> = objects
                .iter()
                .map(|o| missed_penalty(o.existence, ctx.p_detect))
                .collect();
            let ranked = cm.with_missed_costs(&missed)?;
            let mut rng = frame_stream.split(h as u64).rng();
            let samples = sample_assignments_cached(
                &ranked,
                ctx.cfg.a_max,
                ctx.cfg.sampler,
                ctx.cfg.gibbs_samples,
                &mut rng,
                &cache,
            )?;
            Ok(samples
                .into_iter()
                .map(|a| {
                    let cost = cm.values().cost_of(&a.row_to_col);
                    let (child, penalty) =
                        spawn_child(&ctx, parent, &objects, &cm, &a.row_to_col, cost);
                    let entry = LedgerEntry {
                        parent: h,
                        parent_weight: parent.weight,
                        row_to_col: a.row_to_col,
                        assignment_cost: cost,
                        missed_penalty: penalty,
                        weight: child.weight,
                    };
                    (child, entry)
                })
                .collect())
        })
        .collect();

    let mut children = Vec::new();
    let mut ledger = Vec::new();
    for r in per_parent {
        for (child, entry) in r? {
            log::trace!(
                "frame {frame} parent {} w={} + cost {} + missed {} = {}",
                entry.parent,
                entry.parent_weight,
                entry.assignment_cost,
                entry.missed_penalty,
                entry.weight
            );
            children.push(child);
            ledger.push(entry);
        }
    }
    let mut hypotheses = reduce(children, cfg);
    intern_histories(&mut hypotheses);
    log::debug!(
        "frame {frame}: {} detections, {} hypotheses, best weight {}",
        dets.len(),
        hypotheses.len(),
        hypotheses.first().map(|h| h.weight).unwrap_or(S::zero())
    );
    Ok((
        HypothesisStore {
            frame: Some(frame),
            hypotheses,
        },
        ledger,
    ))
}

pub fn step<S: Scalar>(
    store: &HypothesisStore<S>,
    frame: usize,
    dets: &[Detection<S>],
    cfg: &TrackerConfig,
    stream: &RngStream,
) -> Result<HypothesisStore<S>> {
    step_detailed(store, frame, dets, cfg, stream).map(|(s, _)| s)
}

/// Makes equal histories share one allocation. Hypotheses that split long
/// ago rebuild identical histories independently; once interned, equality
/// checks stop at the first node by pointer comparison.
fn intern_histories<S: Scalar>(hyps: &mut [Hypothesis<S>]) {
    let mut canon: HashMap<u64, Vec<History>> = HashMap::new();
    for c in hyps.iter_mut().flat_map(|h| h.components.iter_mut()) {
        let bucket = canon.entry(c.history.key()).or_default();
        match bucket.iter().find(|e| **e == c.history) {
            Some(e) => c.history = e.clone(),
            None => bucket.push(c.history.clone()),
        }
    }
}

/// Merges hypotheses that describe the same state (keeping the lowest
/// weight), sorts by weight, prunes everything worse than the best by more
/// than `prune_weight_delta` and truncates to `h_max`.
pub fn reduce<S: Scalar>(hyps: Vec<Hypothesis<S>>, cfg: &TrackerConfig) -> Vec<Hypothesis<S>> {
    let mut kept: Vec<(Vec<u64>, Hypothesis<S>)> = Vec::with_capacity(hyps.len());
    let mut by_sig: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for h in hyps {
        let sig = h.signature();
        let slots = by_sig.entry(sig.clone()).or_default();
        match slots.iter().copied().find(|&i| kept[i].1.same_state(&h)) {
            Some(i) => {
                if h.weight < kept[i].1.weight {
                    kept[i].1 = h;
                }
            }
            None => {
                slots.push(kept.len());
                kept.push((sig, h));
            }
        }
    }
    kept.sort_by(|a, b| {
        a.1.weight
            .partial_cmp(&b.1.weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    let Some(best) = kept.first().map(|k| k.1.weight) else {
        return Vec::new();
    };
    let limit = best + S::lit(cfg.prune_weight_delta);
    kept.into_iter()
        .map(|(_, h)| h)
        .filter(|h| h.weight <= limit)
        .take(cfg.h_max)
        .collect()
}

/// Resolves `auto` settings against a whole sequence: Erlang parameters
/// from its length, the mean-motion covariance from its detections.
pub fn resolve_config<S: Scalar>(cfg: &TrackerConfig, frames: &[Vec<Detection<S>>]) -> TrackerConfig {
    let motion = if cfg.mean_motion_cov.fixed().is_some() {
        [[0.0; 2]; 2]
    } else {
        let all: Vec<&Detection<S>> = frames.iter().flatten().collect();
        let m = estimate_mean_motion_cov(&all, S::lit(cfg.clamp_eps));
        [
            [m[0][0].to_f64_lossy(), m[0][1].to_f64_lossy()],
            [m[1][0].to_f64_lossy(), m[1][1].to_f64_lossy()],
        ]
    };
    cfg.resolve(frames.len(), motion)
}

/// Runs the recursion over a whole sequence (`frames[k]` holds the
/// detections of frame `k`) and returns the final store.
pub fn run<S: Scalar>(frames: &[Vec<Detection<S>>], cfg: &TrackerConfig) -> Result<HypothesisStore<S>> {
    cfg.validate()?;
    if !cfg.is_resolved() {
        return Err(Error::DomainError("config has unresolved auto settings".into()));
    }
    let stream = RngStream::new(cfg.rng_seed);
    let mut store = HypothesisStore::new();
    for (k, dets) in frames.iter().enumerate() {
        store = step(&store, k, dets, cfg, &stream)?;
    }
    Ok(store)
}

/// Resolves the config, runs the tracker and extracts the lineage of the
/// best hypothesis.
pub fn track<S: Scalar>(
    frames: &[Vec<Detection<S>>],
    cfg: &TrackerConfig,
) -> Result<(LineageTree, TrackerConfig)> {
    let resolved = resolve_config(cfg, frames);
    let store = run(frames, &resolved)?;
    let tree = extract_lineage(&store, frames, &resolved)?;
    Ok((tree, resolved))
}
