use mitotrack::metrics::{evaluate, MetricValue};
use mitotrack::sim::{simulate, SimConfig, CLUTTER_PROB_FALSE};

#[test]
fn division_intervals_follow_the_lifetime_law() {
    // cells stand still so none leaves the field before dividing
    let mut lengths = Vec::new();
    for seed in 0..30 {
        let cfg = SimConfig {
            n_frames: 600,
            n_init: 1,
            motion_sigma: 0.0,
            clutter_rate: 0.0,
            seed,
            ..SimConfig::default()
        };
        let sim = simulate(&cfg).unwrap();
        let alive: Vec<usize> = (0..cfg.n_frames)
            .map(|k| sim.gt.tracks.iter().filter(|t| t.at(k).is_some()).count())
            .collect();
        assert!(alive.windows(2).all(|w| w[1] >= w[0]), "seed {seed}: population shrank");
        // daughters born by frame 400 have had 200 frames, 7 sd past the mean
        for t in sim.gt.tracks.iter().filter(|t| t.parent != 0 && t.begin() <= 400) {
            assert_eq!(sim.gt.children(t.id).len(), 2, "seed {seed}: track {} never divided", t.id);
            lengths.push(t.len() as f64);
        }
    }
    let n = lengths.len() as f64;
    assert!(n > 300.0, "{n} cycles");
    let mean = lengths.iter().sum::<f64>() / n;
    // Erlang(50, 0.5): mean 100, sd √50 / 0.5
    let se = 50f64.sqrt() / 0.5 / n.sqrt();
    assert!((mean - 100.0).abs() < 3.0 * se, "mean {mean} over {n} cycles");
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var.sqrt() - 14.142).abs() < 2.0, "sd {}", var.sqrt());
}

#[test]
fn detection_and_clutter_counts_match_their_rates() {
    let (mut cell_points, mut detected, mut clutter, mut frames) = (0.0, 0.0, 0.0, 0.0);
    for seed in 0..10 {
        let cfg = SimConfig {
            n_frames: 200,
            seed,
            ..SimConfig::default()
        };
        let sim = simulate(&cfg).unwrap();
        sim.gt.validate().unwrap();
        for t in &sim.gt.tracks {
            cell_points += t.len() as f64;
            detected += t.n_detections() as f64;
        }
        clutter += sim
            .detections
            .iter()
            .flatten()
            .filter(|d| d.clutter_prob == CLUTTER_PROB_FALSE)
            .count() as f64;
        frames += sim.detections.len() as f64;
        let per_frame: usize = sim.detections.iter().map(Vec::len).sum();
        let from_gt: usize = sim.gt.tracks.iter().map(|t| t.n_detections()).sum();
        assert_eq!(per_frame - from_gt, sim.detections.iter().flatten().filter(|d| d.clutter_prob == CLUTTER_PROB_FALSE).count());
    }
    let p = 0.95;
    let z_det = (detected - p * cell_points) / (cell_points * p * (1.0 - p)).sqrt();
    assert!(z_det.abs() < 4.0, "detections z = {z_det}");
    let z_clutter = (clutter - 0.5 * frames) / (0.5 * frames).sqrt();
    assert!(z_clutter.abs() < 4.0, "clutter z = {z_clutter}");
}

#[test]
fn ground_truth_scores_perfectly_against_itself() {
    let cases = [
        SimConfig { n_frames: 30, ..SimConfig::default() },
        SimConfig { n_frames: 300, n_init: 2, ..SimConfig::default() },
        SimConfig { n_frames: 250, n_init: 3, clutter_rate: 3.0, p_detect_sim: 0.7, ..SimConfig::default() },
    ];
    for base in cases {
        for seed in 0..4 {
            let sim = simulate(&SimConfig { seed, ..base.clone() }).unwrap();
            sim.gt.validate().unwrap();
            let r = evaluate(&sim.gt, &sim.gt, 5.0);
            assert_eq!(r.ct, MetricValue::Value(1.0));
            assert_eq!(r.tf, MetricValue::Value(1.0));
            let has_div = !sim.gt.divisions().is_empty();
            for v in [r.bc1, r.bc2, r.cca] {
                if has_div {
                    assert!(v == MetricValue::Value(1.0) || v.is_na(), "{r:?}");
                } else {
                    assert!(v.is_na(), "{r:?}");
                }
            }
            if has_div {
                assert_eq!(r.bc1, MetricValue::Value(1.0));
            }
        }
    }
}
