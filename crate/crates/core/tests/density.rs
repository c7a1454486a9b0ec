use mitotrack::density::synthetic::{disk_stack, SyntheticCell};
use mitotrack::density::{detections_from_stack, merge_gaussian_mixture, pixel_moments};
use mitotrack::gaussian::is_symmetric_psd;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Comp = (f64, [f64; 2], [[f64; 2]; 2]);

fn random_mixture(rng: &mut ChaCha8Rng, n: usize) -> Vec<Comp> {
    (0..n)
        .map(|_| {
            let w = rng.random_range(0.01..1.0);
            let mu = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
            let a: f64 = rng.random_range(0.01..4.0);
            let b: f64 = rng.random_range(0.01..4.0);
            let c = rng.random_range(-1.0..1.0) * (a * b).sqrt() * 0.9;
            (w, mu, [[a, c], [c, b]])
        })
        .collect()
}

/// Mixture moments from raw second moments E[xxᵀ] − μμᵀ, accumulated with
/// unnormalized weights.
fn oracle_moments(comps: &[Comp]) -> ([f64; 2], [[f64; 2]; 2]) {
    let total: f64 = comps.iter().map(|c| c.0).sum();
    let mut mean = [0.0; 2];
    let mut second = [[0.0; 2]; 2];
    for (w, mu, s) in comps {
        for i in 0..2 {
            mean[i] += w * mu[i];
            for j in 0..2 {
                second[i][j] += w * (s[i][j] + mu[i] * mu[j]);
            }
        }
    }
    mean = [mean[0] / total, mean[1] / total];
    let mut cov = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            cov[i][j] = second[i][j] / total - mean[i] * mean[j];
        }
    }
    (mean, cov)
}

#[test]
fn merge_conserves_mixture_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let n = rng.random_range(1..=50);
        let comps = random_mixture(&mut rng, n);
        let g = merge_gaussian_mixture(&comps).unwrap();
        let (mean, cov) = oracle_moments(&comps);
        for i in 0..2 {
            assert!((g.mean[i] - mean[i]).abs() < 1e-12);
            for j in 0..2 {
                assert!((g.cov[i][j] - cov[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn merging_duplicates_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let one = random_mixture(&mut rng, 1);
    let many: Vec<Comp> = (1..=7).map(|k| (k as f64 * 0.1, one[0].1, one[0].2)).collect();
    let g = merge_gaussian_mixture(&many).unwrap();
    for i in 0..2 {
        assert!((g.mean[i] - one[0].1[i]).abs() < 1e-13);
        for j in 0..2 {
            assert!((g.cov[i][j] - one[0].2[i][j]).abs() < 1e-13);
        }
    }
}

#[test]
fn disk_cells_are_found_at_their_centers() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cells = [
        SyntheticCell { center: [10.0, 12.0], radius: 4.0, motion: [1.0, -2.0], score: 0.9 },
        SyntheticCell { center: [30.0, 20.0], radius: 5.0, motion: [0.0, 0.0], score: 0.6 },
    ];
    let stack = disk_stack(3, 32, 48, 8, &cells, 0.3, &mut rng).unwrap();
    let dets = detections_from_stack(&stack, 1e-12).unwrap();
    assert_eq!(dets.len(), 2);
    for (d, c) in dets.iter().zip(&cells) {
        assert_eq!(d.frame, 3);
        for i in 0..2 {
            assert!((d.centroid.mean[i] - c.center[i]).abs() < 0.1);
            assert!((d.motion_warped.mean[i] - (c.center[i] - c.motion[i])).abs() < 0.1);
        }
        assert!((d.clutter_prob - (1.0 - c.score)).abs() < 1e-12);
        // per-pixel variance 0.09, plus nothing from the spread of means
        assert!((d.centroid.cov[0][0] - 0.09).abs() < 0.03);
        assert!(is_symmetric_psd(&d.centroid.cov));
    }
}

proptest! {
    #[test]
    fn merge_is_permutation_invariant(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = random_mixture(&mut rng, n);
        let mut shuffled = comps.clone();
        shuffled.reverse();
        shuffled.rotate_left(n / 3);
        let a = merge_gaussian_mixture(&comps).unwrap();
        let b = merge_gaussian_mixture(&shuffled).unwrap();
        for i in 0..2 {
            prop_assert!((a.mean[i] - b.mean[i]).abs() < 1e-12);
            for j in 0..2 {
                prop_assert!((a.cov[i][j] - b.cov[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn merge_scales_with_weights(seed in any::<u64>(), n in 1usize..20, k in 0.001f64..1000.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = random_mixture(&mut rng, n);
        let scaled: Vec<Comp> = comps.iter().map(|c| (c.0 * k, c.1, c.2)).collect();
        let a = merge_gaussian_mixture(&comps).unwrap();
        let b = merge_gaussian_mixture(&scaled).unwrap();
        for i in 0..2 {
            prop_assert!((a.mean[i] - b.mean[i]).abs() < 1e-11);
            for j in 0..2 {
                prop_assert!((a.cov[i][j] - b.cov[i][j]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn pixel_covariances_are_psd(
        values in prop::collection::vec(-50.0f64..50.0, 2 * 3 * 4 * 2..=2 * 3 * 4 * 2),
    ) {
        let m = pixel_moments(&values, 2, 3, 4).unwrap();
        for c in &m.offset_cov {
            prop_assert!(is_symmetric_psd(c));
        }
        // with two layers the sample covariance is the outer product of
        // half the difference, times two
        let px = 12;
        for p in 0..px {
            let dx = values[p * 2] - values[(px + p) * 2];
            prop_assert!((m.offset_cov[p][0][0] - dx * dx / 2.0).abs() < 1e-9);
        }
    }
}
