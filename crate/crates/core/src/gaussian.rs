//! Bivariate Gaussian position densities and the small 2×2 linear algebra
//! they need.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Vec2<S> = [S; 2];
pub type Mat2<S> = [[S; 2]; 2];

pub fn zero2<S: Scalar>() -> Mat2<S> {
    [[S::zero(); 2]; 2]
}

pub fn diag2<S: Scalar>(a: S, b: S) -> Mat2<S> {
    [[a, S::zero()], [S::zero(), b]]
}

pub fn identity2<S: Scalar>() -> Mat2<S> {
    diag2(S::one(), S::one())
}

pub fn add2<S: Scalar>(a: &Mat2<S>, b: &Mat2<S>) -> Mat2<S> {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

pub fn scale2<S: Scalar>(a: &Mat2<S>, s: S) -> Mat2<S> {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn det2<S: Scalar>(a: &Mat2<S>) -> S {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inv2<S: Scalar>(a: &Mat2<S>) -> Option<Mat2<S>> {
    let d = det2(a);
    if d == S::zero() || !d.is_finite() {
        return None;
    }
    Some([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

pub fn mul2<S: Scalar>(a: &Mat2<S>, b: &Mat2<S>) -> Mat2<S> {
    let mut out = zero2();
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_vec2<S: Scalar>(a: &Mat2<S>, v: &Vec2<S>) -> Vec2<S> {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn sym_eigenvalues2<S: Scalar>(a: &Mat2<S>) -> [S; 2] {
    let two = S::lit(2.0);
    let half_tr = (a[0][0] + a[1][1]) / two;
    let half_diff = (a[0][0] - a[1][1]) / two;
    let off = (a[0][1] + a[1][0]) / two;
    let r = (half_diff * half_diff + off * off).sqrt();
    [half_tr - r, half_tr + r]
}

/// Symmetric slack used by the PSD checks, relative to the matrix scale.
fn psd_slack<S: Scalar>(a: &Mat2<S>) -> S {
    let scale = a[0][0].abs().max(a[1][1].abs()).max(S::one());
    S::epsilon() * S::lit(1e4) * scale
}

pub fn is_symmetric_psd<S: Scalar>(a: &Mat2<S>) -> bool {
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return false;
    }
    let slack = psd_slack(a);
    (a[0][1] - a[1][0]).abs() <= slack && sym_eigenvalues2(a)[0] >= -slack
}

/// A 2D Gaussian density in pixel coordinates (mean in px, covariance in px²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGaussian<S> {
    pub mean: Vec2<S>,
    pub cov: Mat2<S>,
}

impl<S: Scalar> SpatialGaussian<S> {
    /// Validates and symmetrizes `cov`. Tiny asymmetries from floating point
    /// round-off are averaged away; anything larger is rejected.
    pub fn new(mean: Vec2<S>, cov: Mat2<S>) -> Result<Self> {
        if !mean[0].is_finite() || !mean[1].is_finite() {
            return Err(Error::NotPsd(format!("non-finite mean {mean:?}")));
        }
        if !is_symmetric_psd(&cov) {
            return Err(Error::NotPsd(format!("{cov:?}")));
        }
        let off = (cov[0][1] + cov[1][0]) / S::lit(2.0);
        Ok(Self {
            mean,
            cov: [[cov[0][0], off], [off, cov[1][1]]],
        })
    }

    pub fn isotropic(mean: Vec2<S>, variance: S) -> Result<Self> {
        Self::new(mean, diag2(variance, variance))
    }

    /// Adds `extra` to the covariance. Both operands are PSD so the sum is too.
    pub fn inflated(&self, extra: &Mat2<S>) -> Self {
        let cov = add2(&self.cov, extra);
        let off = (cov[0][1] + cov[1][0]) / S::lit(2.0);
        Self {
            mean: self.mean,
            cov: [[cov[0][0], off], [off, cov[1][1]]],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite())
            && self.cov[0][1] == self.cov[1][0]
            && is_symmetric_psd(&self.cov)
    }

    pub fn cast<T: Scalar>(&self) -> SpatialGaussian<T> {
        let c = |v: S| T::lit(v.to_f64_lossy());
        SpatialGaussian {
            mean: [c(self.mean[0]), c(self.mean[1])],
            cov: [
                [c(self.cov[0][0]), c(self.cov[0][1])],
                [c(self.cov[1][0]), c(self.cov[1][1])],
            ],
        }
    }
}

/// Adds `ridge`·I to a symmetric covariance when it is near-singular
/// (condition number above `max_condition` or non-positive determinant).
pub fn regularize<S: Scalar>(cov: &Mat2<S>, ridge: S, max_condition: S) -> Mat2<S> {
    let [lo, hi] = sym_eigenvalues2(cov);
    if lo <= S::zero() || hi / lo > max_condition {
        add2(cov, &diag2(ridge, ridge))
    } else {
        *cov
    }
}

/// Evaluates N(x; mean, cov) together with the squared Mahalanobis distance.
pub fn normal_pdf_with_mahalanobis<S: Scalar>(
    x: &Vec2<S>,
    mean: &Vec2<S>,
    cov: &Mat2<S>,
) -> Option<(S, S)> {
    let inv = inv2(cov)?;
    let det = det2(cov);
    if det <= S::zero() {
        return None;
    }
    let d = [x[0] - mean[0], x[1] - mean[1]];
    let w = mat_vec2(&inv, &d);
    let m2 = d[0] * w[0] + d[1] * w[1];
    let norm = S::lit(2.0) * S::PI() * det.sqrt();
    Some(((-m2 / S::lit(2.0)).exp() / norm, m2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_roundoff() {
        let g = SpatialGaussian::new([0.0, 0.0], [[1.0, 0.5], [0.5 + 1e-15, 2.0]]).unwrap();
        assert_eq!(g.cov[0][1], g.cov[1][0]);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        assert!(SpatialGaussian::new([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(SpatialGaussian::new([0.0, 0.0], [[1.0, 0.0], [0.3, 1.0]]).is_err());
        assert!(SpatialGaussian::new([f64::NAN, 0.0], identity2()).is_err());
    }

    #[test]
    fn zero_covariance_is_psd() {
        assert!(SpatialGaussian::<f64>::new([1.0, 2.0], zero2()).is_ok());
    }

    #[test]
    fn pdf_at_mode_of_unit_covariance() {
        let (p, m2) = normal_pdf_with_mahalanobis(&[3.0, 4.0], &[3.0, 4.0], &identity2()).unwrap();
        assert!((p - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert_eq!(m2, 0.0);
    }

    #[test]
    fn regularize_only_near_singular() {
        let c = diag2(1.0, 2.0);
        assert_eq!(regularize(&c, 1e-6, 1e12), c);
        let z: Mat2<f64> = zero2();
        assert_eq!(regularize(&z, 1e-6, 1e12), diag2(1e-6, 1e-6));
    }

    #[test]
    fn works_in_f32() {
        let g = SpatialGaussian::<f32>::isotropic([1.0, 1.0], 0.25).unwrap();
        assert!(g.is_valid());
        let inflated = g.inflated(&identity2());
        assert_eq!(inflated.cov[0][0], 1.25);
    }
}
