//! Propagating a local image edit to other textons.

use crate::error::{Result, TextonError};
use crate::image::RgbImage;
use crate::linalg::{Mat2, Vec2};
use crate::model::{AffineTransform2D, GaussianSet, ImageFrame, TextonGaussian};
use crate::splatting::{mahalanobis_sq, COVARIANCE_EPSILON};

/// Per-channel change below which a pixel is considered unedited.
pub const DEFAULT_EDIT_THRESHOLD: f64 = 2.0 / 255.0;

/// Pixels changed by an edit.
#[derive(Debug, Clone, PartialEq)]
pub struct EditRegion {
    pub frame: ImageFrame,
    pub mask: Vec<bool>,
    pub centroid: Vec2,
}

impl EditRegion {
    /// Pixels whose largest per-channel change exceeds `threshold`.
    pub fn detect(original: &RgbImage, edited: &RgbImage, threshold: f64) -> Result<Self> {
        if !original.same_size(edited) {
            return Err(TextonError::FrameMismatch {
                expected: format!("{}x{}", original.width(), original.height()),
                actual: format!("{}x{}", edited.width(), edited.height()),
            });
        }
        let frame = original.frame()?;
        let mut mask = vec![false; frame.pixel_count()];
        let mut sum = Vec2::ZERO;
        let mut count = 0usize;
        for y in 0..frame.height {
            for x in 0..frame.width {
                let a = original.pixel(x, y);
                let b = edited.pixel(x, y);
                let change = (0..3).map(|c| (b[c] - a[c]).abs()).fold(0.0, f64::max);
                if change > threshold {
                    mask[y * frame.width + x] = true;
                    sum = sum + Vec2::new(x as f64, y as f64);
                    count += 1;
                }
            }
        }
        if count == 0 {
            return Err(TextonError::NoEditDetected);
        }
        Ok(Self {
            frame,
            mask,
            centroid: sum.scale(1.0 / count as f64),
        })
    }
}

/// Effective Gaussian with the smallest Mahalanobis distance to `p`.
pub fn nearest_effective(set: &GaussianSet, p: Vec2) -> Result<usize> {
    set.gaussians
        .iter()
        .enumerate()
        .filter(|(_, g)| g.is_effective())
        .map(|(i, g)| (i, mahalanobis_sq(g, p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or(TextonError::NoEffectiveTextons)
}

/// Local frame `L R`: Cholesky factor of U times the rotation onto ν.
fn local_frame(g: &TextonGaussian) -> Result<Mat2> {
    let l = g
        .covariance
        .cholesky()
        .or_else(|| (g.covariance + Mat2::scalar(COVARIANCE_EPSILON)).cholesky())
        .ok_or(TextonError::DegenerateTransform(g.covariance.det()))?;
    Ok(l * Mat2::rotation_from_direction(g.direction))
}

/// Map from the source texton's neighbourhood onto the target's.
pub fn alignment(source: &TextonGaussian, target: &TextonGaussian) -> Result<AffineTransform2D> {
    let s = local_frame(source)?;
    let s_inv = s.inverse().ok_or(TextonError::DegenerateTransform(s.det()))?;
    let linear = local_frame(target)? * s_inv;
    Ok(AffineTransform2D::new(linear, target.mean - linear.mul_vec(source.mean)))
}

/// Transport the difference `edited − original` from the texton nearest to
/// the edit onto each target texton and add it into `original`.
pub fn propagate_edit(
    original: &RgbImage,
    edited: &RgbImage,
    set: &GaussianSet,
    targets: &[usize],
    threshold: f64,
) -> Result<RgbImage> {
    let region = EditRegion::detect(original, edited, threshold)?;
    if region.frame != set.frame {
        return Err(TextonError::FrameMismatch {
            expected: region.frame.to_string(),
            actual: set.frame.to_string(),
        });
    }
    for &t in targets {
        set.check_index(t)?;
    }
    let source = &set.gaussians[nearest_effective(set, region.centroid)?];
    let diff = RgbImage::from_data(
        original.width(),
        original.height(),
        edited
            .data()
            .iter()
            .zip(original.data())
            .map(|(e, o)| e - o)
            .collect(),
    )?;
    let mut out = original.clone();
    for &t in targets {
        let inverse = alignment(source, &set.gaussians[t])?.inverse()?;
        for y in 0..out.height() {
            for x in 0..out.width() {
                let q = inverse.apply(Vec2::new(x as f64, y as f64));
                let d = diff.sample_bilinear(q.x, q.y);
                let mut px = out.pixel(x, y);
                for c in 0..3 {
                    px[c] += d[c];
                }
                out.set_pixel(x, y, px);
            }
        }
    }
    Ok(out.clamped())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> (RgbImage, GaussianSet) {
        let frame = ImageFrame::new(32, 32).unwrap();
        let mk = |x: f64, y: f64| TextonGaussian {
            covariance: Mat2::diag(6.0, 3.0),
            ..TextonGaussian::isotropic(Vec2::new(x, y), 1.0, vec![1.0])
        };
        let set = GaussianSet::with_gaussians(frame, 1, 4, vec![mk(8.0, 8.0), mk(22.0, 20.0)]);
        (RgbImage::filled(32, 32, [0.2; 3]), set)
    }

    #[test]
    fn unchanged_image_is_an_error() {
        let (img, set) = scene();
        assert!(matches!(
            propagate_edit(&img, &img, &set, &[1], DEFAULT_EDIT_THRESHOLD),
            Err(TextonError::NoEditDetected)
        ));
    }

    #[test]
    fn dot_lands_on_target_center() {
        let (img, set) = scene();
        let mut edited = img.clone();
        edited.set_pixel(8, 8, [1.0; 3]);
        let out = propagate_edit(&img, &edited, &set, &[1], DEFAULT_EDIT_THRESHOLD).unwrap();
        assert!(out.pixel(22, 20).iter().all(|v| (v - 1.0).abs() < 1e-9));
        assert_eq!(out.pixel(8, 8), [0.2; 3]);
    }

    #[test]
    fn self_target_reproduces_edit() {
        let (img, set) = scene();
        let mut edited = img.clone();
        edited.set_pixel(7, 9, [0.9, 0.1, 0.5]);
        let out = propagate_edit(&img, &edited, &set, &[0], DEFAULT_EDIT_THRESHOLD).unwrap();
        assert!(out.mean_abs_diff(&edited).unwrap() < 1e-12);
    }

    #[test]
    fn bad_target_index() {
        let (img, set) = scene();
        let mut edited = img.clone();
        edited.set_pixel(7, 9, [0.9; 3]);
        assert!(propagate_edit(&img, &edited, &set, &[5], DEFAULT_EDIT_THRESHOLD).is_err());
    }
}
