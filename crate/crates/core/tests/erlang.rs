use mitotrack::assign::mitosis_cost;
use mitotrack::erlang_cdf;
use proptest::prelude::*;

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

fn pdf(t: f64, alpha: u32, rate: f64) -> f64 {
    if t <= 0.0 {
        return if alpha == 1 && t == 0.0 { rate } else { 0.0 };
    }
    let a = alpha as f64;
    (a * rate.ln() + (a - 1.0) * t.ln() - rate * t - ln_factorial(alpha - 1)).exp()
}

/// Cumulative Simpson integration of the density on `n` grid intervals
/// over `[0, t_max]`, each interval split into `sub` Simpson panels.
fn integrated_cdf(alpha: u32, rate: f64, t_max: f64, n: usize, sub: usize) -> Vec<(f64, f64)> {
    let h = t_max / n as f64;
    let mut acc = 0.0;
    let mut out = vec![(0.0, 0.0)];
    for k in 0..n {
        let a = k as f64 * h;
        let step = h / sub as f64;
        for s in 0..sub {
            let x0 = a + s as f64 * step;
            let (x1, x2) = (x0 + step / 2.0, x0 + step);
            acc += step / 6.0 * (pdf(x0, alpha, rate) + 4.0 * pdf(x1, alpha, rate) + pdf(x2, alpha, rate));
        }
        out.push(((k + 1) as f64 * h, acc));
    }
    out
}

#[test]
fn cdf_matches_numeric_integration() {
    // (alpha, rate, grid extent)
    let cases = [(50, 0.5, 250.0), (1, 1.0, 30.0), (2, 0.1, 200.0), (6, 1.0 / 6.0, 150.0), (600, 1.0 / 600.0, 2000.0)];
    for (alpha, rate, t_max) in cases {
        let grid = integrated_cdf(alpha, rate, t_max, 10_000, 4);
        assert_eq!(grid.len(), 10_001);
        let worst = grid
            .iter()
            .map(|&(t, want)| (erlang_cdf(t, alpha, rate).unwrap() - want).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "alpha {alpha} rate {rate}: max error {worst:e}");
    }
}

#[test]
fn unknown_age_divides_for_free() {
    for alpha in [1, 6, 50] {
        assert_eq!(mitosis_cost::<f64>(None, alpha, 0.3, 1e-12), 0.0);
        assert_eq!(mitosis_cost::<f32>(None, alpha, 0.3, 1e-12), 0.0);
    }
}

#[test]
fn mitosis_cost_is_negative_log_cdf() {
    let c = mitosis_cost::<f64>(Some(40), 50, 0.5, 1e-12);
    assert!((c + erlang_cdf(40.0f64, 50, 0.5).unwrap().ln()).abs() < 1e-12);
    // a newborn never divides: the clamp bounds the cost
    assert!((mitosis_cost::<f64>(Some(0), 50, 0.5, 1e-12) + f64::ln(1e-12)).abs() < 1e-9);
}

proptest! {
    #[test]
    fn cdf_is_a_monotone_probability(alpha in 1u32..200, rate in 0.001f64..5.0, t in 0.0f64..500.0, dt in 0.0f64..50.0) {
        let a = erlang_cdf(t, alpha, rate).unwrap();
        let b = erlang_cdf(t + dt, alpha, rate).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn mitosis_cost_falls_with_age(alpha in 1u32..100, rate in 0.01f64..2.0, age in 0u32..400) {
        let young = mitosis_cost::<f64>(Some(age), alpha, rate, 1e-12);
        let old = mitosis_cost::<f64>(Some(age + 1), alpha, rate, 1e-12);
        prop_assert!(old <= young + 1e-12);
        prop_assert!(old >= 0.0);
    }
}
