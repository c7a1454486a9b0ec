//! Synthetic cell colonies: random-walk cells with Erlang-distributed
//! lifetimes, noisy detections and uniform clutter.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::SpatialGaussian;
use crate::mht::{LineageTree, Track, TrackPoint};
use crate::model::Detection;
use crate::rng::seeded_rng;

pub const CLUTTER_PROB_TRUE: f64 = 0.05;
pub const CLUTTER_PROB_FALSE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub width: f64,
    pub height: f64,
    pub n_frames: usize,
    pub n_init: usize,
    /// Per-axis random-walk step standard deviation, px/frame.
    pub motion_sigma: f64,
    pub lifetime_alpha: u32,
    pub lifetime_rate: f64,
    pub p_detect_sim: f64,
    /// Expected number of clutter detections per frame.
    pub clutter_rate: f64,
    pub meas_sigma: f64,
    /// Distance between the two daughters at division.
    pub daughter_sep: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            width: 512.0,
            height: 512.0,
            n_frames: 100,
            n_init: 4,
            motion_sigma: 2.0,
            lifetime_alpha: 50,
            lifetime_rate: 0.5,
            p_detect_sim: 0.95,
            clutter_rate: 0.5,
            meas_sigma: 1.0,
            daughter_sep: 12.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("lifetime_rate", self.lifetime_rate),
            ("meas_sigma", self.meas_sigma),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::DomainError(format!("{name} = {v}")));
            }
        }
        let non_negative = [
            ("motion_sigma", self.motion_sigma),
            ("clutter_rate", self.clutter_rate),
            ("daughter_sep", self.daughter_sep),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::DomainError(format!("{name} = {v}")));
            }
        }
        if !(self.p_detect_sim > 0.0 && self.p_detect_sim <= 1.0) {
            return Err(Error::DomainError(format!("p_detect_sim = {}", self.p_detect_sim)));
        }
        if self.lifetime_alpha == 0 || self.n_frames == 0 {
            return Err(Error::DomainError("lifetime_alpha and n_frames must be positive".into()));
        }
        Ok(())
    }
}

/// Ground truth and per-frame detections (`detections[k]` is frame `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub gt: LineageTree,
    pub detections: Vec<Vec<Detection<f64>>>,
}

struct Cell {
    track: usize,
    pos: [f64; 2],
    divide_at: usize,
}

fn inside(cfg: &SimConfig, p: [f64; 2]) -> bool {
    p[0] >= 0.0 && p[0] < cfg.width && p[1] >= 0.0 && p[1] < cfg.height
}

fn clamp_inside(cfg: &SimConfig, p: [f64; 2]) -> [f64; 2] {
    let eps = 1e-9;
    [p[0].clamp(0.0, cfg.width - eps), p[1].clamp(0.0, cfg.height - eps)]
}

pub fn simulate(cfg: &SimConfig) -> Result<Simulation> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed).rng();
    let lifetime = Gamma::new(cfg.lifetime_alpha as f64, 1.0 / cfg.lifetime_rate)
        .map_err(|e| Error::DomainError(e.to_string()))?;
    let step = Normal::new(0.0, cfg.motion_sigma).map_err(|e| Error::DomainError(e.to_string()))?;
    let noise = Normal::new(0.0, cfg.meas_sigma).map_err(|e| Error::DomainError(e.to_string()))?;
    let clutter = (cfg.clutter_rate > 0.0)
        .then(|| Poisson::new(cfg.clutter_rate))
        .transpose()
        .map_err(|e| Error::DomainError(e.to_string()))?;
    let draw_lifetime = |rng: &mut rand_chacha::ChaCha8Rng| -> usize {
        (lifetime.sample(rng).round() as usize).max(1)
    };

    let mut tracks: Vec<Track> = Vec::new();
    let mut cells: Vec<Cell> = Vec::new();
    for _ in 0..cfg.n_init {
        let pos = [rng.random::<f64>() * cfg.width, rng.random::<f64>() * cfg.height];
        let divide_at = draw_lifetime(&mut rng);
        tracks.push(Track {
            id: tracks.len() as u32 + 1,
            parent: 0,
            points: Vec::new(),
        });
        cells.push(Cell {
            track: tracks.len() - 1,
            pos,
            divide_at,
        });
    }

    let var = cfg.meas_sigma * cfg.meas_sigma;
    let mut detections = Vec::with_capacity(cfg.n_frames);
    // true position of each live cell in the previous frame
    let mut previous: Vec<[f64; 2]> = cells.iter().map(|c| c.pos).collect();
    for k in 0..cfg.n_frames {
        if k > 0 {
            let mut next = Vec::with_capacity(cells.len());
            let mut next_prev = Vec::with_capacity(cells.len());
            for cell in cells.drain(..) {
                if k == cell.divide_at {
                    let angle = rng.random::<f64>() * std::f64::consts::TAU;
                    let half = cfg.daughter_sep / 2.0;
                    let (dx, dy) = (half * angle.cos(), half * angle.sin());
                    let parent = tracks[cell.track].id;
                    for sign in [1.0, -1.0] {
                        let pos = clamp_inside(cfg, [cell.pos[0] + sign * dx, cell.pos[1] + sign * dy]);
                        tracks.push(Track {
                            id: tracks.len() as u32 + 1,
                            parent,
                            points: Vec::new(),
                        });
                        next.push(Cell {
                            track: tracks.len() - 1,
                            pos,
                            divide_at: k + draw_lifetime(&mut rng),
                        });
                        next_prev.push(cell.pos);
                    }
                } else {
                    let pos = [
                        cell.pos[0] + step.sample(&mut rng),
                        cell.pos[1] + step.sample(&mut rng),
                    ];
                    if inside(cfg, pos) {
                        next_prev.push(cell.pos);
                        next.push(Cell { pos, ..cell });
                    }
                }
            }
            cells = next;
            previous = next_prev;
        }

        let mut frame: Vec<(usize, Detection<f64>)> = Vec::new();
        let mut det_of_cell = vec![None; cells.len()];
        for (ci, cell) in cells.iter().enumerate() {
            if rng.random::<f64>() < cfg.p_detect_sim {
                // the same measurement error shifts both densities
                let e = [noise.sample(&mut rng), noise.sample(&mut rng)];
                let c = [cell.pos[0] + e[0], cell.pos[1] + e[1]];
                let m = [previous[ci][0] + e[0], previous[ci][1] + e[1]];
                let d = Detection::new(
                    k,
                    0,
                    SpatialGaussian::isotropic(c, var)?,
                    SpatialGaussian::isotropic(m, var)?,
                    CLUTTER_PROB_TRUE,
                    0.0,
                )?;
                det_of_cell[ci] = Some(frame.len());
                frame.push((ci, d));
            }
        }
        let n_clutter = clutter.as_ref().map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
        for _ in 0..n_clutter {
            let c = [rng.random::<f64>() * cfg.width, rng.random::<f64>() * cfg.height];
            let m = [c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)];
            let d = Detection::new(
                k,
                0,
                SpatialGaussian::isotropic(c, var)?,
                SpatialGaussian::isotropic(m, var)?,
                CLUTTER_PROB_FALSE,
                0.0,
            )?;
            frame.push((usize::MAX, d));
        }
        let mut ids: Vec<u32> = (0..frame.len() as u32).collect();
        ids.shuffle(&mut rng);
        for (slot, (_, d)) in frame.iter_mut().enumerate() {
            d.det_id = ids[slot];
        }
        for (ci, cell) in cells.iter().enumerate() {
            tracks[cell.track].points.push(TrackPoint {
                frame: k,
                det_id: det_of_cell[ci].map(|slot| ids[slot]),
                pos: cell.pos,
            });
        }
        frame.sort_by_key(|(_, d)| d.det_id);
        detections.push(frame.into_iter().map(|(_, d)| d).collect());
    }

    // daughters placed at the last frame never appear
    let gt = LineageTree {
        tracks: tracks.into_iter().filter(|t| !t.points.is_empty()).collect(),
    };
    Ok(Simulation { gt, detections })
}
