//! Segmentation regularizers and image reconstruction distance.

use crate::error::{Result, TextonError};
use crate::estimation::{SegmentationStack, MIN_SEGMENT_MASS};
use crate::image::RgbImage;
use crate::linalg::Vec2;

/// Mean per-pixel entropy of the segmentation distribution.
pub fn entropy_loss(masks: &SegmentationStack) -> f64 {
    let n = masks.frame().pixel_count();
    let mut total = 0.0;
    for m in masks.masks() {
        for &s in m {
            if s > 0.0 {
                total -= s * s.ln();
            }
        }
    }
    (total / n as f64).max(0.0)
}

/// Mean squared distance between each pixel and its mask-weighted
/// segment-center reconstruction.
pub fn compactness_loss(masks: &SegmentationStack) -> f64 {
    let frame = masks.frame();
    let n = frame.pixel_count();
    let centers: Vec<Vec2> = masks
        .masks()
        .iter()
        .map(|m| {
            let mass: f64 = m.iter().sum();
            if mass < MIN_SEGMENT_MASS {
                return frame.center();
            }
            let mut acc = Vec2::ZERO;
            for (p, &w) in m.iter().enumerate() {
                if w != 0.0 {
                    acc = acc + Vec2::new((p % frame.width) as f64, (p / frame.width) as f64).scale(w);
                }
            }
            acc.scale(1.0 / mass)
        })
        .collect();
    let mut total = 0.0;
    for p in 0..n {
        let mut recon = Vec2::ZERO;
        for (m, c) in masks.masks().iter().zip(&centers) {
            if m[p] != 0.0 {
                recon = recon + c.scale(m[p]);
            }
        }
        let d = recon - Vec2::new((p % frame.width) as f64, (p / frame.width) as f64);
        total += d.dot(d);
    }
    total / n as f64
}

/// Image distance used as the perceptual term of [`reconstruction_distance`].
pub trait PerceptualDistance: Send + Sync {
    /// Distance over pixels where `valid` is true (all pixels if `None`).
    fn distance(&self, a: &RgbImage, b: &RgbImage, valid: Option<&[bool]>) -> f64;
}

/// Mean absolute difference averaged over a 2×2 average-pooling pyramid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PyramidL1 {
    pub levels: usize,
}

impl Default for PyramidL1 {
    fn default() -> Self {
        Self { levels: 3 }
    }
}

/// Masked per-channel difference image with its validity weights.
struct Level {
    width: usize,
    height: usize,
    diff: Vec<f64>,
    weight: Vec<f64>,
}

impl Level {
    fn mean_abs(&self) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (p, &w) in self.weight.iter().enumerate() {
            if w > 0.0 {
                for c in 0..3 {
                    num += w * self.diff[p * 3 + c].abs();
                }
                den += 3.0 * w;
            }
        }
        (den > 0.0).then(|| num / den)
    }

    fn pooled(&self) -> Level {
        let width = self.width.div_ceil(2);
        let height = self.height.div_ceil(2);
        let mut diff = vec![0.0; width * height * 3];
        let mut weight = vec![0.0; width * height];
        for y in 0..self.height {
            for x in 0..self.width {
                let w = self.weight[y * self.width + x];
                if w == 0.0 {
                    continue;
                }
                let q = (y / 2) * width + x / 2;
                weight[q] += w;
                for c in 0..3 {
                    diff[q * 3 + c] += w * self.diff[(y * self.width + x) * 3 + c];
                }
            }
        }
        for (q, &w) in weight.iter().enumerate() {
            if w > 0.0 {
                for c in 0..3 {
                    diff[q * 3 + c] /= w;
                }
            }
        }
        Level {
            width,
            height,
            diff,
            weight,
        }
    }
}

impl PerceptualDistance for PyramidL1 {
    fn distance(&self, a: &RgbImage, b: &RgbImage, valid: Option<&[bool]>) -> f64 {
        let diff: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
        let weight: Vec<f64> = match valid {
            Some(v) => v.iter().map(|&ok| if ok { 1.0 } else { 0.0 }).collect(),
            None => vec![1.0; a.width() * a.height()],
        };
        let mut level = Level {
            width: a.width(),
            height: a.height(),
            diff,
            weight,
        };
        let mut sum = 0.0;
        let mut count = 0usize;
        for l in 0..self.levels.max(1) {
            if l > 0 {
                if level.width == 1 && level.height == 1 {
                    break;
                }
                level = level.pooled();
            }
            match level.mean_abs() {
                Some(v) => {
                    sum += v;
                    count += 1;
                }
                None => return 0.0,
            }
        }
        sum / count as f64
    }
}

/// Weights of the mixed reconstruction distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionWeights {
    pub l1: f64,
    pub perceptual: f64,
}

impl Default for ReconstructionWeights {
    fn default() -> Self {
        Self {
            l1: 2.0,
            perceptual: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionReport {
    pub value: f64,
    pub l1: f64,
    pub perceptual: f64,
    /// Set when the validity mask selects no pixel; all terms are then 0.
    pub degenerate_mask: bool,
}

/// `w₁·mean|a−b| + w_perc·P(a, b)` over the valid pixels.
pub fn reconstruction_distance(
    a: &RgbImage,
    b: &RgbImage,
    mask: Option<&[bool]>,
) -> Result<ReconstructionReport> {
    reconstruction_distance_with(a, b, mask, &ReconstructionWeights::default(), &PyramidL1::default())
}

pub fn reconstruction_distance_with(
    a: &RgbImage,
    b: &RgbImage,
    mask: Option<&[bool]>,
    weights: &ReconstructionWeights,
    perceptual: &dyn PerceptualDistance,
) -> Result<ReconstructionReport> {
    if !a.same_size(b) {
        return Err(TextonError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if let Some(m) = mask {
        if m.len() != a.width() * a.height() {
            return Err(TextonError::DimensionMismatch(format!(
                "mask has {} values for a {}x{} image",
                m.len(),
                a.width(),
                a.height()
            )));
        }
        if !m.iter().any(|&v| v) {
            return Ok(ReconstructionReport {
                value: 0.0,
                l1: 0.0,
                perceptual: 0.0,
                degenerate_mask: true,
            });
        }
    }
    let mut num = 0.0;
    let mut count = 0usize;
    for p in 0..a.width() * a.height() {
        if mask.is_some_and(|m| !m[p]) {
            continue;
        }
        for c in 0..3 {
            num += (a.data()[p * 3 + c] - b.data()[p * 3 + c]).abs();
        }
        count += 3;
    }
    let l1 = if count == 0 { 0.0 } else { num / count as f64 };
    let perc = perceptual.distance(a, b, mask);
    Ok(ReconstructionReport {
        value: weights.l1 * l1 + weights.perceptual * perc,
        l1,
        perceptual: perc,
        degenerate_mask: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ImageFrame;

    #[test]
    fn entropy_examples() {
        let f = ImageFrame::new(3, 2).unwrap();
        let hard = SegmentationStack::from_labels(f, &[0, 1, 2, 0, 1, 2], 3).unwrap();
        assert_eq!(entropy_loss(&hard), 0.0);
        let uniform = SegmentationStack::new(f, vec![vec![0.25; 6]; 4]).unwrap();
        assert!((entropy_loss(&uniform) - 4f64.ln()).abs() < 1e-12);
        let half = SegmentationStack::new(f, vec![vec![0.5; 6]; 2]).unwrap();
        assert!((entropy_loss(&half) - std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn compactness_examples() {
        let f = ImageFrame::new(4, 1).unwrap();
        let single = SegmentationStack::new(f, vec![vec![1.0; 4]]).unwrap();
        assert!((compactness_loss(&single) - 1.25).abs() < 1e-12);
        let f2 = ImageFrame::new(2, 1).unwrap();
        let two = SegmentationStack::new(f2, vec![vec![1.0; 2]]).unwrap();
        assert!((compactness_loss(&two) - 0.25).abs() < 1e-12);
        let own = SegmentationStack::from_labels(f, &[0, 1, 2, 3], 4).unwrap();
        assert_eq!(compactness_loss(&own), 0.0);
    }

    #[test]
    fn constant_offset_reconstruction() {
        let a = RgbImage::from_fn(9, 7, |x, y| [x as f64 / 20.0, y as f64 / 20.0, 0.3]);
        let b = RgbImage::from_data(9, 7, a.data().iter().map(|v| v + 0.1).collect()).unwrap();
        let r = reconstruction_distance(&a, &b, None).unwrap();
        assert!((r.value - 0.22).abs() < 1e-12);
        assert_eq!(reconstruction_distance(&a, &a, None).unwrap().value, 0.0);
        let none = vec![false; 63];
        let d = reconstruction_distance(&a, &b, Some(&none)).unwrap();
        assert!(d.degenerate_mask);
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn masked_pixels_are_ignored() {
        let a = RgbImage::filled(4, 4, [0.5; 3]);
        let mut b = a.clone();
        b.set_pixel(3, 3, [1.0; 3]);
        let mut valid = vec![true; 16];
        valid[15] = false;
        assert_eq!(reconstruction_distance(&a, &b, Some(&valid)).unwrap().value, 0.0);
        assert!(reconstruction_distance(&a, &b, None).unwrap().value > 0.0);
    }

    #[test]
    fn rejects_size_mismatch() {
        let a = RgbImage::new(2, 2);
        let b = RgbImage::new(3, 2);
        assert!(reconstruction_distance(&a, &b, None).is_err());
    }
}
