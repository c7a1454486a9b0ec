//! Wall-time of the Hungarian solver on random association problems of
//! N objects and N detections, in three formulations:
//!
//! * standard: `[C | diag(c_u)]`, N × 2N
//! * splits allowed: `[C | diag(c_u) | C]` (c^M = 0), N × 3N
//! * splits forbidden: `[C | diag(c_u) | ∞]` (c^M = ∞), N × 3N
//!
//! Finite costs are drawn from U(0, 1).

use std::time::Instant;

use anyhow::Result;
use mitotrack::assign::{hungarian, Matrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Standard,
    SplitsFree,
    SplitsForbidden,
}

/// Mean seconds per solve for one problem size.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub sizes: usize,
    #[serde(rename = "runtimesC")]
    pub standard: f64,
    #[serde(rename = "runtimesCM")]
    pub splits_free: f64,
    #[serde(rename = "runtimesCMinf")]
    pub splits_forbidden: f64,
}

pub fn random_problem<R: Rng>(n: usize, form: Formulation, rng: &mut R) -> Matrix<f64> {
    let inf = f64::INFINITY;
    let cols = match form {
        Formulation::Standard => 2 * n,
        _ => 3 * n,
    };
    let mut m = Matrix::filled(n, cols, inf);
    for j in 0..n {
        for i in 0..n {
            let c = rng.random::<f64>();
            m.set(j, i, c);
            if form == Formulation::SplitsFree {
                m.set(j, 2 * n + i, c);
            }
        }
        m.set(j, n + j, rng.random::<f64>());
    }
    m
}

fn mean_time(n: usize, trials: usize, form: Formulation, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..trials {
        let m = random_problem(n, form, rng);
        let t = Instant::now();
        let a = hungarian(&m)?;
        total += t.elapsed().as_secs_f64();
        std::hint::black_box(a);
    }
    Ok(total / trials.max(1) as f64)
}

/// Formulations are interleaved per size so slow drifts in machine load hit
/// all three alike.
pub fn run(sizes: &[usize], trials: usize, seed: u64) -> Result<Vec<BenchRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sizes
        .iter()
        .map(|&n| {
            let mut acc = [0.0; 3];
            let forms = [Formulation::Standard, Formulation::SplitsFree, Formulation::SplitsForbidden];
            let chunk = 50.min(trials.max(1));
            let mut done = 0;
            while done < trials {
                let t = chunk.min(trials - done);
                for (slot, &form) in forms.iter().enumerate() {
                    acc[slot] += mean_time(n, t, form, &mut rng)? * t as f64;
                }
                done += t;
            }
            let div = trials.max(1) as f64;
            Ok(BenchRow {
                sizes: n,
                standard: acc[0] / div,
                splits_free: acc[1] / div,
                splits_forbidden: acc[2] / div,
            })
        })
        .collect()
}
