//! Erlang lifetime distribution.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// P[T ≤ t] for T ~ Erlang(`alpha`, `rate`).
///
/// Evaluated through the Poisson identity P[T ≤ t] = P[N ≥ alpha] with
/// N ~ Poisson(rate·t). Below the mode the upper Poisson tail is summed
/// directly so tiny probabilities keep full relative precision (their
/// negative logarithm is used as a cost); above it the complement of the
/// lower tail is used.
pub fn erlang_cdf<S: Scalar>(t: S, alpha: u32, rate: S) -> Result<S> {
    if !t.is_finite() || t < S::zero() {
        return Err(Error::DomainError(format!("t = {t}")));
    }
    if alpha == 0 {
        return Err(Error::DomainError("alpha must be ≥ 1".into()));
    }
    if !rate.is_finite() || rate <= S::zero() {
        return Err(Error::DomainError(format!("rate = {rate}")));
    }
    let x = rate * t;
    if x == S::zero() {
        return Ok(S::zero());
    }
    if !x.is_finite() {
        return Ok(S::one());
    }
    let a = S::lit(alpha as f64);
    let ln_x = x.ln();
    // ln(alpha!) and ln((alpha-1)!)
    let mut ln_fact_prev = S::zero();
    for n in 1..alpha {
        ln_fact_prev += S::lit(n as f64).ln();
    }
    if x < a {
        let ln_fact = ln_fact_prev + a.ln();
        let mut term = (-x + a * ln_x - ln_fact).exp();
        let mut sum = S::zero();
        let mut n = a;
        loop {
            sum += term;
            let ratio = x / (n + S::one());
            term *= ratio;
            n += S::one();
            // remaining tail is bounded by a geometric series with ratio < 1
            if term <= sum * S::epsilon() * (S::one() - ratio) || term == S::zero() {
                break;
            }
        }
        Ok(sum.min(S::one()))
    } else {
        let mut lower = S::zero();
        let mut ln_fact = S::zero();
        for n in 0..alpha {
            if n > 0 {
                ln_fact += S::lit(n as f64).ln();
            }
            let nf = S::lit(n as f64);
            lower += (-x + nf * ln_x - ln_fact).exp();
        }
        Ok((S::one() - lower).max(S::zero()))
    }
}

/// Erlang probability density, used by tests and the simulator's sanity checks.
pub fn erlang_pdf(t: f64, alpha: u32, rate: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    if t == 0.0 {
        return if alpha == 1 { rate } else { 0.0 };
    }
    let a = alpha as f64;
    let ln_gamma: f64 = (1..alpha).map(|n| (n as f64).ln()).sum();
    (a * rate.ln() + (a - 1.0) * t.ln() - rate * t - ln_gamma).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_at_origin() {
        assert_eq!(erlang_cdf(0.0, 3, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_alpha_two() {
        let expected = 1.0 - 3.0 * (-2.0f64).exp();
        assert!((erlang_cdf(2.0, 2, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.59399).abs() < 1e-5);
    }

    #[test]
    fn limit_is_one() {
        assert!((erlang_cdf(1e9f64, 1, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(erlang_cdf(f64::MAX, 7, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(erlang_cdf(f64::NAN, 1, 1.0), Err(Error::DomainError(_))));
        assert!(matches!(erlang_cdf(f64::INFINITY, 1, 1.0), Err(Error::DomainError(_))));
        assert!(erlang_cdf(-1.0, 1, 1.0).is_err());
        assert!(erlang_cdf(1.0, 0, 1.0).is_err());
        assert!(erlang_cdf(1.0, 1, 0.0).is_err());
    }

    #[test]
    fn tiny_tail_keeps_relative_precision() {
        // P[Poisson(0.5) ≥ 6] computed term by term
        let x: f64 = 0.5;
        let mut expected = 0.0;
        let mut fact = 720.0;
        for n in 6..40 {
            if n > 6 {
                fact *= n as f64;
            }
            expected += (-x).exp() * x.powi(n) / fact;
        }
        let got = erlang_cdf(3.0, 6, 1.0 / 6.0).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn large_shape_parameter() {
        // Erlang(600, 1/600) at its mean is roughly one half
        let c = erlang_cdf(360_000.0f64, 600, 1.0 / 600.0).unwrap();
        assert!((c - 0.5).abs() < 0.02, "{c}");
        let tiny = erlang_cdf(100.0, 600, 1.0 / 600.0).unwrap();
        assert!(tiny >= 0.0 && tiny < 1e-300);
    }

    #[test]
    fn f32_agrees_with_f64() {
        let a = erlang_cdf(2.0f32, 2, 1.0).unwrap() as f64;
        let b = erlang_cdf(2.0f64, 2, 1.0).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn pdf_of_exponential() {
        assert!((erlang_pdf(1.0, 1, 2.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
    }
}
