//! Synthetic prediction stacks: disk-shaped cells whose offset maps point
//! at the cell center, perturbed per augmentation.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::PredictionStack;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticCell {
    pub center: [f64; 2],
    pub radius: f64,
    /// Displacement since the previous frame.
    pub motion: [f64; 2],
    /// Segmentation score inside the disk.
    pub score: f64,
}

/// Renders `cells` into an `height × width` stack with `n_aug` layers.
/// Label `i + 1` marks cell `i`; later cells overwrite earlier ones.
/// Every offset gets independent `N(0, noise_sigma²)` noise per layer.
pub fn disk_stack<R: Rng + ?Sized>(
    frame: usize,
    height: usize,
    width: usize,
    n_aug: usize,
    cells: &[SyntheticCell],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<PredictionStack<f64>> {
    let noise = Normal::new(0.0, noise_sigma)
        .map_err(|e| Error::DomainError(format!("noise_sigma: {e}")))?;
    let px = height * width;
    let mut labels = vec![0i32; px];
    let mut seg = vec![0.0; px];
    for (i, c) in cells.iter().enumerate() {
        for row in 0..height {
            for col in 0..width {
                let (dx, dy) = (col as f64 - c.center[0], row as f64 - c.center[1]);
                if dx * dx + dy * dy <= c.radius * c.radius {
                    labels[row * width + col] = i as i32 + 1;
                    seg[row * width + col] = c.score;
                }
            }
        }
    }
    let mut centroid = vec![0.0; n_aug * px * 2];
    let mut motion = vec![0.0; n_aug * px * 2];
    for a in 0..n_aug {
        for p in 0..px {
            let (x, y) = ((p % width) as f64, (p / width) as f64);
            let (target, prev) = match labels[p] {
                0 => ([x, y], [x, y]),
                l => {
                    let c = &cells[l as usize - 1];
                    (c.center, [c.center[0] - c.motion[0], c.center[1] - c.motion[1]])
                }
            };
            let o = (a * px + p) * 2;
            centroid[o] = target[0] - x + noise.sample(rng);
            centroid[o + 1] = target[1] - y + noise.sample(rng);
            motion[o] = prev[0] - x + noise.sample(rng);
            motion[o + 1] = prev[1] - y + noise.sample(rng);
        }
    }
    PredictionStack::new(frame, height, width, n_aug, seg, centroid, motion, labels)
}
