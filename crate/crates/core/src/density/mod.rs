//! Turns stacks of per-augmentation pixel predictions into per-cell
//! Gaussian densities and clutter probabilities.

pub mod nft;
pub mod synthetic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{zero2, Mat2, SpatialGaussian, Vec2};
use crate::model::Detection;
use crate::scalar::Scalar;

/// Unit of the offset maps as stored on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OffsetUnits {
    #[default]
    Pixels,
    /// Fractions of the image extent: x scaled by the width, y by the height.
    Normalized,
}

/// Aligned network outputs for one frame.
///
/// Offsets are stored in pixels, channel order (dx, dy), layout
/// `[aug][row][col][channel]`. Pixel (row, col) sits at x = col, y = row.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionStack<S> {
    pub frame: usize,
    pub height: usize,
    pub width: usize,
    pub n_aug: usize,
    /// Segmentation score averaged over augmentations, `[row][col]`.
    pub seg: Vec<S>,
    pub centroid_offsets: Vec<S>,
    pub motion_offsets: Vec<S>,
    /// Instance labels, 0 = background.
    pub labels: Vec<i32>,
}

impl<S: Scalar> PredictionStack<S> {
    pub fn new(
        frame: usize,
        height: usize,
        width: usize,
        n_aug: usize,
        seg: Vec<S>,
        centroid_offsets: Vec<S>,
        motion_offsets: Vec<S>,
        labels: Vec<i32>,
    ) -> Result<Self> {
        let px = height * width;
        if seg.len() != px || labels.len() != px {
            return Err(Error::ShapeMismatch("seg/labels must be H×W".into()));
        }
        if centroid_offsets.len() != n_aug * px * 2 || motion_offsets.len() != n_aug * px * 2 {
            return Err(Error::ShapeMismatch("offsets must be n_aug×H×W×2".into()));
        }
        if seg.iter().any(|&v| !(v >= S::zero() && v <= S::one())) {
            return Err(Error::DomainError("segmentation scores must lie in [0,1]".into()));
        }
        Ok(Self {
            frame,
            height,
            width,
            n_aug,
            seg,
            centroid_offsets,
            motion_offsets,
            labels,
        })
    }

    /// Scales normalized offsets to pixels in place.
    pub fn convert_offsets(&mut self, units: OffsetUnits) {
        if units == OffsetUnits::Normalized {
            let (sx, sy) = (S::lit(self.width as f64), S::lit(self.height as f64));
            for layer in [&mut self.centroid_offsets, &mut self.motion_offsets] {
                for pair in layer.chunks_exact_mut(2) {
                    pair[0] *= sx;
                    pair[1] *= sy;
                }
            }
        }
    }

    /// Distinct positive labels, ascending.
    pub fn label_ids(&self) -> Vec<i32> {
        let mut ids: Vec<i32> = self.labels.iter().copied().filter(|&l| l > 0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Per-pixel mean and covariance of the offsets across augmentations.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMoments<S> {
    pub height: usize,
    pub width: usize,
    pub offset_mean: Vec<Vec2<S>>,
    pub offset_cov: Vec<Mat2<S>>,
}

/// Mean and unbiased (n_aug − 1) sample covariance per pixel of an
/// `n_aug × H × W × 2` offset stack.
pub fn pixel_moments<S: Scalar>(
    layer: &[S],
    n_aug: usize,
    height: usize,
    width: usize,
) -> Result<PixelMoments<S>> {
    if n_aug < 2 {
        return Err(Error::InsufficientAugmentations(n_aug));
    }
    let px = height * width;
    if layer.len() != n_aug * px * 2 {
        return Err(Error::ShapeMismatch(format!(
            "expected {} offset values, got {}",
            n_aug * px * 2,
            layer.len()
        )));
    }
    let n = S::lit(n_aug as f64);
    let dof = S::lit((n_aug - 1) as f64);
    let mut offset_mean = Vec::with_capacity(px);
    let mut offset_cov = Vec::with_capacity(px);
    for p in 0..px {
        let at = |a: usize, ch: usize| layer[(a * px + p) * 2 + ch];
        let mut m = [S::zero(); 2];
        for a in 0..n_aug {
            m[0] += at(a, 0);
            m[1] += at(a, 1);
        }
        m[0] /= n;
        m[1] /= n;
        let (mut sxx, mut sxy, mut syy) = (S::zero(), S::zero(), S::zero());
        for a in 0..n_aug {
            let dx = at(a, 0) - m[0];
            let dy = at(a, 1) - m[1];
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        offset_mean.push(m);
        offset_cov.push([[sxx / dof, sxy / dof], [sxy / dof, syy / dof]]);
    }
    Ok(PixelMoments {
        height,
        width,
        offset_mean,
        offset_cov,
    })
}

/// Moment-matching merge of a weighted Gaussian mixture into one Gaussian
/// with the same mean and covariance.
pub fn merge_gaussian_mixture<S: Scalar>(
    components: &[(S, Vec2<S>, Mat2<S>)],
) -> Result<SpatialGaussian<S>> {
    if components.is_empty() {
        return Err(Error::EmptyMixture);
    }
    if components
        .iter()
        .any(|(w, _, _)| !(w.is_finite() && *w >= S::zero()))
    {
        return Err(Error::DegenerateWeights);
    }
    let total = components.iter().map(|c| c.0).fold(S::zero(), |a, b| a + b);
    if !(total > S::zero()) {
        return Err(Error::DegenerateWeights);
    }
    // normalized weights make the single-component case exact
    let weights: Vec<S> = components.iter().map(|c| c.0 / total).collect();
    let mut mean = [S::zero(); 2];
    for (w, (_, mu, _)) in weights.iter().zip(components) {
        mean[0] += *w * mu[0];
        mean[1] += *w * mu[1];
    }
    let mut cov: Mat2<S> = zero2();
    for (w, (_, mu, sigma)) in weights.iter().zip(components) {
        let d = [mu[0] - mean[0], mu[1] - mean[1]];
        cov[0][0] += *w * (sigma[0][0] + d[0] * d[0]);
        cov[0][1] += *w * ((sigma[0][1] + sigma[1][0]) / S::lit(2.0) + d[0] * d[1]);
        cov[1][1] += *w * (sigma[1][1] + d[1] * d[1]);
    }
    cov[1][0] = cov[0][1];
    SpatialGaussian::new(mean, cov)
}

/// Builds the detection for instance `label` of a stack. Pixel weights
/// are the averaged segmentation scores; the clutter probability is the
/// inverted score at the pixel nearest to the merged centroid.
pub fn detection_from_pixels<S: Scalar>(
    stack: &PredictionStack<S>,
    label: i32,
    centroid_moments: &PixelMoments<S>,
    motion_moments: &PixelMoments<S>,
    clamp_eps: S,
) -> Result<Detection<S>> {
    let (h, w) = (stack.height, stack.width);
    if centroid_moments.offset_mean.len() != h * w || motion_moments.offset_mean.len() != h * w {
        return Err(Error::ShapeMismatch("moments do not match the stack".into()));
    }
    let mut centroid = Vec::new();
    let mut motion = Vec::new();
    let mut area = 0usize;
    for p in 0..h * w {
        if stack.labels[p] != label {
            continue;
        }
        area += 1;
        let weight = stack.seg[p];
        if weight <= S::zero() {
            continue;
        }
        let pos = [S::lit((p % w) as f64), S::lit((p / w) as f64)];
        let cm = centroid_moments.offset_mean[p];
        let mm = motion_moments.offset_mean[p];
        centroid.push((weight, [pos[0] + cm[0], pos[1] + cm[1]], centroid_moments.offset_cov[p]));
        motion.push((weight, [pos[0] + mm[0], pos[1] + mm[1]], motion_moments.offset_cov[p]));
    }
    if area == 0 {
        return Err(Error::UnknownLabel(label));
    }
    if centroid.is_empty() {
        return Err(Error::DegenerateWeights);
    }
    let centroid = merge_gaussian_mixture(&centroid)?;
    let motion_warped = merge_gaussian_mixture(&motion)?;

    let nearest = |v: S, n: usize| -> usize {
        let r = v.round();
        if r <= S::zero() {
            0
        } else {
            r.to_usize().unwrap_or(n - 1).min(n - 1)
        }
    };
    let cx = nearest(centroid.mean[0], w);
    let cy = nearest(centroid.mean[1], h);
    let score = stack.seg[cy * w + cx];
    let clutter = (S::one() - score).max(S::zero()).min(S::one() - clamp_eps);
    Detection::new(
        stack.frame,
        label as u32,
        centroid,
        motion_warped,
        clutter,
        S::lit(area as f64),
    )
}

/// All detections of a stack, ordered by label.
pub fn detections_from_stack<S: Scalar>(
    stack: &PredictionStack<S>,
    clamp_eps: S,
) -> Result<Vec<Detection<S>>> {
    let cm = pixel_moments(&stack.centroid_offsets, stack.n_aug, stack.height, stack.width)?;
    let mm = pixel_moments(&stack.motion_offsets, stack.n_aug, stack.height, stack.width)?;
    stack
        .label_ids()
        .into_iter()
        .map(|l| detection_from_pixels(stack, l, &cm, &mm, clamp_eps))
        .collect()
}

/// Mean equivalent-circle radius sqrt(area/π) over every labeled instance
/// of every mask.
pub fn average_cell_radius<S: Scalar>(masks: &[&[i32]]) -> Result<S> {
    let mut sum = S::zero();
    let mut count = 0usize;
    for mask in masks {
        let mut areas: std::collections::BTreeMap<i32, usize> = Default::default();
        for &l in mask.iter().filter(|&&l| l > 0) {
            *areas.entry(l).or_default() += 1;
        }
        for a in areas.values() {
            sum += (S::lit(*a as f64) / S::PI()).sqrt();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    Ok(sum / S::lit(count as f64))
}

/// A test-time transform: base transform index plus a shift applied to the
/// previous frame only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftTransform<S> {
    pub base: usize,
    pub shift: Vec2<S>,
}

impl<S: Scalar> ShiftTransform<S> {
    pub fn inverse(&self) -> Self {
        Self {
            base: self.base,
            shift: [-self.shift[0], -self.shift[1]],
        }
    }

    pub fn then(&self, other: &Self) -> Self {
        Self {
            base: self.base,
            shift: [self.shift[0] + other.shift[0], self.shift[1] + other.shift[1]],
        }
    }
}

/// {no shift, +x, −x, +y, −y} × each base transform, shift magnitude
/// `radius` pixels.
pub fn shift_transform_set<S: Scalar>(base_count: usize, radius: S) -> Vec<ShiftTransform<S>> {
    let z = S::zero();
    let shifts = [[z, z], [radius, z], [-radius, z], [z, radius], [z, -radius]];
    (0..base_count)
        .flat_map(|base| shifts.iter().map(move |&shift| ShiftTransform { base, shift }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::identity2;

    #[test]
    fn moments_identical_layers() {
        let layer = vec![1.5, -2.0, 1.5, -2.0, 1.5, -2.0];
        let m = pixel_moments(&layer, 3, 1, 1).unwrap();
        assert_eq!(m.offset_mean[0], [1.5, -2.0]);
        assert_eq!(m.offset_cov[0], zero2::<f64>());
    }

    #[test]
    fn moments_two_points() {
        let m = pixel_moments(&[0.0, 0.0, 2.0, 0.0], 2, 1, 1).unwrap();
        assert_eq!(m.offset_mean[0], [1.0, 0.0]);
        assert_eq!(m.offset_cov[0], [[2.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn moments_need_two_layers() {
        assert_eq!(
            pixel_moments(&[0.0, 0.0], 1, 1, 1),
            Err(Error::InsufficientAugmentations(1))
        );
    }

    #[test]
    fn merge_identity() {
        let g = merge_gaussian_mixture(&[(0.7, [3.0, 4.0], identity2())]).unwrap();
        assert_eq!(g.mean, [3.0, 4.0]);
        assert_eq!(g.cov, identity2::<f64>());
    }

    #[test]
    fn merge_two_points() {
        let g = merge_gaussian_mixture(&[(0.5, [0.0, 0.0], zero2()), (0.5, [2.0, 0.0], zero2())])
            .unwrap();
        assert_eq!(g.mean, [1.0, 0.0]);
        assert_eq!(g.cov, [[1.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn merge_errors() {
        assert_eq!(merge_gaussian_mixture::<f64>(&[]), Err(Error::EmptyMixture));
        assert_eq!(
            merge_gaussian_mixture(&[(0.0, [0.0, 0.0], zero2())]),
            Err(Error::DegenerateWeights)
        );
        assert_eq!(
            merge_gaussian_mixture(&[(-1.0, [0.0, 0.0], zero2()), (2.0, [0.0, 0.0], zero2())]),
            Err(Error::DegenerateWeights)
        );
    }

    fn stack_1x3(seg: [f64; 3], labels: [i32; 3]) -> PredictionStack<f64> {
        PredictionStack::new(4, 1, 3, 2, seg.to_vec(), vec![0.0; 12], vec![0.0; 12], labels.to_vec())
            .unwrap()
    }

    #[test]
    fn single_pixel_detection() {
        let s = stack_1x3([0.0, 0.9, 0.0], [0, 7, 0]);
        let cm = pixel_moments(&s.centroid_offsets, 2, 1, 3).unwrap();
        let d = detection_from_pixels(&s, 7, &cm, &cm, 1e-12).unwrap();
        assert_eq!(d.centroid.mean, [1.0, 0.0]);
        assert_eq!(d.centroid.cov, zero2::<f64>());
        assert!((d.clutter_prob - 0.1).abs() < 1e-15);
        assert_eq!(d.frame, 4);
        assert_eq!(d.det_id, 7);
        assert_eq!(d.area, 1.0);
    }

    #[test]
    fn two_pixel_detection() {
        let s = stack_1x3([0.5, 0.0, 0.5], [2, 0, 2]);
        let cm = pixel_moments(&s.centroid_offsets, 2, 1, 3).unwrap();
        let d = detection_from_pixels(&s, 2, &cm, &cm, 1e-12).unwrap();
        assert_eq!(d.centroid.mean, [1.0, 0.0]);
        assert_eq!(d.centroid.cov, [[1.0, 0.0], [0.0, 0.0]]);
        // centroid pixel is background with score 0 → clutter clamped below 1
        assert_eq!(d.clutter_prob, 1.0 - 1e-12);
    }

    #[test]
    fn detection_errors() {
        let s = stack_1x3([0.0, 0.0, 0.0], [1, 1, 0]);
        let cm = pixel_moments(&s.centroid_offsets, 2, 1, 3).unwrap();
        assert_eq!(
            detection_from_pixels(&s, 5, &cm, &cm, 1e-12),
            Err(Error::UnknownLabel(5))
        );
        assert_eq!(
            detection_from_pixels(&s, 1, &cm, &cm, 1e-12),
            Err(Error::DegenerateWeights)
        );
    }

    #[test]
    fn radius_examples() {
        let mask: Vec<i32> = vec![1; 314];
        let r: f64 = average_cell_radius(&[&mask]).unwrap();
        assert!((r - (314.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((r - 9.9975).abs() < 1e-4);
        assert_eq!(
            average_cell_radius::<f64>(&[&[0, 0][..]]),
            Err(Error::EmptyGroundTruth)
        );
    }

    #[test]
    fn shift_sets() {
        let t = shift_transform_set(8, 4.0f64);
        assert_eq!(t.len(), 40);
        let one = shift_transform_set(1, 2.5);
        assert_eq!(one.len(), 5);
        assert_eq!(one.iter().filter(|d| d.shift == [0.0, 0.0]).count(), 1);
        for d in &t {
            assert_eq!(d.then(&d.inverse()).shift, [0.0, 0.0]);
            let norm = (d.shift[0].powi(2) + d.shift[1].powi(2)).sqrt();
            assert!(norm == 0.0 || norm == 4.0);
        }
    }

    #[test]
    fn normalized_offsets_scale_by_extent() {
        let mut s = PredictionStack::new(0, 2, 4, 2, vec![0.5; 8], vec![0.5; 32], vec![-0.25; 32], vec![1; 8])
            .unwrap();
        s.convert_offsets(OffsetUnits::Normalized);
        assert_eq!(&s.centroid_offsets[..2], &[2.0, 1.0]);
        assert_eq!(&s.motion_offsets[..2], &[-1.0, -0.5]);
    }
}
