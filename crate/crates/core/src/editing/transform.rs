//! Per-texton transforms and global scale control.

use crate::error::{invalid, Result, TextonError};
use crate::linalg::{Mat2, Vec2};
use crate::model::{transform_gaussian, AffineTransform2D, GaussianSet, TextonGaussian};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TextonOp {
    Move(Vec2),
    /// Uniform scale about the texton center.
    Scale(f64),
    /// Linear map `M` about the texton center: `U ← M U Mᵀ`.
    ScaleMatrix(Mat2),
    /// Rotation by θ radians about the texton center.
    Rotate(f64),
}

/// Apply `op` to the texton at `index`; other textons and the order are kept.
pub fn transform_texton(set: &GaussianSet, index: usize, op: TextonOp) -> Result<GaussianSet> {
    set.check_index(index)?;
    let g = &set.gaussians[index];
    let edited = match op {
        TextonOp::Move(d) => {
            if !d.is_finite() {
                return Err(invalid("offset", "must be finite"));
            }
            TextonGaussian {
                mean: g.mean + d,
                ..g.clone()
            }
        }
        TextonOp::Scale(s) => {
            if !(s > 0.0) || !s.is_finite() {
                return Err(invalid("scale", format!("{s} is not > 0")));
            }
            uniform_scale(g, s, g.mean)
        }
        TextonOp::ScaleMatrix(m) => {
            let det = m.det();
            if !(det.abs() > 1e-12) || !m.is_finite() {
                return Err(TextonError::DegenerateTransform(det));
            }
            transform_gaussian(g, &AffineTransform2D::linear_about(m, g.mean))
        }
        TextonOp::Rotate(theta) => {
            if !theta.is_finite() {
                return Err(invalid("angle", "must be finite"));
            }
            transform_gaussian(g, &AffineTransform2D::rotation_about(theta, g.mean))
        }
    };
    let mut out = set.clone();
    out.gaussians[index] = edited;
    Ok(out)
}

fn uniform_scale(g: &TextonGaussian, s: f64, anchor: Vec2) -> TextonGaussian {
    if s == 1.0 {
        return g.clone();
    }
    TextonGaussian {
        mean: anchor + (g.mean - anchor).scale(s),
        covariance: g.covariance.scale(s * s),
        mask_area: g.mask_area.map(|a| a * s * s),
        ..g.clone()
    }
}

/// Scale every texton about `anchor` by `s`; features, directions and
/// weights are preserved.
pub fn rescale_gaussians(set: &GaussianSet, s: f64, anchor: Vec2) -> Result<GaussianSet> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid("scale", format!("{s} is not > 0")));
    }
    if !anchor.is_finite() {
        return Err(invalid("anchor", "must be finite"));
    }
    Ok(set.replaced(
        set.gaussians
            .iter()
            .map(|g| uniform_scale(g, s, anchor))
            .collect(),
    ))
}
