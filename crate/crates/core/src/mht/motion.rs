use crate::gaussian::{diag2, Mat2};
use crate::model::Detection;
use crate::scalar::Scalar;

/// Isotropic mean-motion covariance `diag(σ², σ²)` with σ the mean
/// displacement between each detection's centroid and its motion-warped
/// position, divided by √2. Values below `floor` are raised to it; without
/// any detection the identity is returned.
pub fn estimate_mean_motion_cov<S: Scalar>(dets: &[&Detection<S>], floor: S) -> Mat2<S> {
    if dets.is_empty() {
        log::warn!("no motion data; using identity mean-motion covariance");
        return diag2(S::one(), S::one());
    }
    let total = dets
        .iter()
        .map(|d| {
            let dx = d.centroid.mean[0] - d.motion_warped.mean[0];
            let dy = d.centroid.mean[1] - d.motion_warped.mean[1];
            (dx * dx + dy * dy).sqrt()
        })
        .fold(S::zero(), |a, b| a + b);
    let sigma = total / S::lit(dets.len() as f64) / S::SQRT_2();
    let var = (sigma * sigma).max(floor);
    diag2(var, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::SpatialGaussian;

    fn det(c: [f64; 2], m: [f64; 2]) -> Detection<f64> {
        Detection::new(
            0,
            0,
            SpatialGaussian::isotropic(c, 1.0).unwrap(),
            SpatialGaussian::isotropic(m, 1.0).unwrap(),
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_motion_hits_floor() {
        let d = det([1.0, 1.0], [1.0, 1.0]);
        assert_eq!(estimate_mean_motion_cov(&[&d], 1e-12), diag2(1e-12, 1e-12));
    }

    #[test]
    fn unit_diagonal_motion() {
        let a = det([1.0, 1.0], [0.0, 0.0]);
        let b = det([0.0, 0.0], [1.0, -1.0]);
        let m = estimate_mean_motion_cov(&[&a, &b], 1e-12);
        assert!((m[0][0] - 1.0).abs() < 1e-15 && (m[1][1] - 1.0).abs() < 1e-15);
        assert_eq!(m[0][1], 0.0);
    }

    #[test]
    fn empty_falls_back_to_identity() {
        assert_eq!(estimate_mean_motion_cov::<f64>(&[], 1e-12), diag2(1.0, 1.0));
    }
}
