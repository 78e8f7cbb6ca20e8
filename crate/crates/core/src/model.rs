//! Texton data model: frames, latent Gaussians, sets and affine maps.
//!
//! Coordinates follow the raster convention: x grows to the right, y grows
//! downward, and pixel `(0, 0)` is sampled at its center.

use std::fmt;

use crate::error::{Result, TextonError};
use crate::linalg::{Mat2, Vec2};

/// Maximum number of Gaussians per set used by default.
pub const DEFAULT_CAPACITY: usize = 100;
/// Default appearance-feature dimension.
pub const DEFAULT_FEATURE_DIM: usize = 382;

const SYMMETRY_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageFrame {
    pub width: usize,
    pub height: usize,
}

impl ImageFrame {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(crate::error::invalid("frame", format!("{width}x{height} has an empty axis")));
        }
        Ok(Self { width, height })
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(
            0.5 * (self.width as f64 - 1.0),
            0.5 * (self.height as f64 - 1.0),
        )
    }

    /// Distance from `p` to the nearest frame edge, zero outside the frame.
    pub fn edge_distance(&self, p: Vec2) -> f64 {
        let d = p
            .x
            .min(p.y)
            .min(self.width as f64 - 1.0 - p.x)
            .min(self.height as f64 - 1.0 - p.y);
        d.max(0.0)
    }

    pub fn contains(&self, p: Vec2, margin: f64) -> bool {
        p.x >= margin
            && p.y >= margin
            && p.x <= self.width as f64 - 1.0 - margin
            && p.y <= self.height as f64 - 1.0 - margin
    }
}

impl fmt::Display for ImageFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl std::str::FromStr for ImageFrame {
    type Err = TextonError;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| crate::error::invalid("frame", format!("expected WxH, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| crate::error::invalid("frame", format!("`{s}`: {e}")))
        };
        ImageFrame::new(parse(w)?, parse(h)?)
    }
}

/// One latent texton.
#[derive(Debug, Clone, PartialEq)]
pub struct TextonGaussian {
    /// Existence weight δ; binary at inference, relaxed in `[0, 1]` otherwise.
    pub weight: f64,
    /// Existence probability p.
    pub existence: f64,
    pub mean: Vec2,
    pub covariance: Mat2,
    /// Unit anisotropy direction ν.
    pub direction: Vec2,
    /// Unit appearance feature f (left at zero when pooling found nothing).
    pub feature: Vec<f64>,
    /// Mask area in pixels, when the Gaussian was estimated from a mask.
    pub mask_area: Option<f64>,
}

impl TextonGaussian {
    /// An existing isotropic texton; handy for tests and construction.
    pub fn isotropic(mean: Vec2, variance: f64, feature: Vec<f64>) -> Self {
        Self {
            weight: 1.0,
            existence: 1.0,
            mean,
            covariance: Mat2::scalar(variance),
            direction: Vec2::new(1.0, 0.0),
            feature,
            mask_area: None,
        }
    }

    pub fn is_effective(&self) -> bool {
        self.weight >= 0.5
    }

    pub fn area(&self) -> f64 {
        self.mask_area.unwrap_or(0.0)
    }
}

/// Ordered Gaussians in one frame; the last element is front-most.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSet {
    pub frame: ImageFrame,
    pub feature_dim: usize,
    pub capacity: usize,
    pub gaussians: Vec<TextonGaussian>,
}

impl GaussianSet {
    pub fn new(frame: ImageFrame, feature_dim: usize, capacity: usize) -> Self {
        Self {
            frame,
            feature_dim,
            capacity,
            gaussians: Vec::new(),
        }
    }

    pub fn with_gaussians(
        frame: ImageFrame,
        feature_dim: usize,
        capacity: usize,
        gaussians: Vec<TextonGaussian>,
    ) -> Self {
        Self {
            frame,
            feature_dim,
            capacity,
            gaussians,
        }
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    /// Same frame and metadata, different members.
    pub fn replaced(&self, gaussians: Vec<TextonGaussian>) -> Self {
        Self {
            gaussians,
            ..self.clone()
        }
    }

    pub fn effective_count(&self) -> usize {
        self.gaussians.iter().filter(|g| g.is_effective()).count()
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(TextonError::IndexOutOfRange {
                index,
                len: self.len(),
            })
        }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate_set(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(TextonError::InvalidSet(
                violations.iter().map(ToString::to_string).collect(),
            ))
        }
    }

    pub(crate) fn ensure_same_dim(&self, other: &GaussianSet) -> Result<()> {
        if self.feature_dim != other.feature_dim {
            return Err(TextonError::FeatureDimMismatch {
                expected: self.feature_dim,
                actual: other.feature_dim,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform2D {
    pub linear: Mat2,
    pub translation: Vec2,
}

impl AffineTransform2D {
    pub const IDENTITY: AffineTransform2D = AffineTransform2D {
        linear: Mat2::IDENTITY,
        translation: Vec2::ZERO,
    };

    pub fn new(linear: Mat2, translation: Vec2) -> Self {
        Self {
            linear,
            translation,
        }
    }

    pub fn translation(t: Vec2) -> Self {
        Self::new(Mat2::IDENTITY, t)
    }

    /// Rotation by `theta` about `center`.
    pub fn rotation_about(theta: f64, center: Vec2) -> Self {
        Self::linear_about(Mat2::rotation(theta), center)
    }

    /// Linear map `a` applied about a fixed point.
    pub fn linear_about(a: Mat2, center: Vec2) -> Self {
        Self::new(a, center - a.mul_vec(center))
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        self.linear.mul_vec(p) + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &AffineTransform2D) -> AffineTransform2D {
        AffineTransform2D::new(
            self.linear * other.linear,
            self.linear.mul_vec(other.translation) + self.translation,
        )
    }

    pub fn inverse(&self) -> Result<AffineTransform2D> {
        let inv = self.checked_linear_inverse()?;
        Ok(AffineTransform2D::new(inv, -inv.mul_vec(self.translation)))
    }

    fn checked_linear_inverse(&self) -> Result<Mat2> {
        let det = self.linear.det();
        if !(det.abs() > 1e-12) || !det.is_finite() {
            return Err(TextonError::DegenerateTransform(det));
        }
        self.linear
            .inverse()
            .ok_or(TextonError::DegenerateTransform(det))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    NonFinite(&'static str),
    NotSymmetric,
    NotPsd,
    DirectionNotUnit,
    FeatureNotUnit,
    ZeroFeature,
    FeatureDimMismatch { expected: usize, actual: usize },
    WeightOutOfRange,
    ExistenceOutOfRange,
    NegativeArea,
    CapacityExceeded { count: usize, capacity: usize },
    EmptyFeatureDim,
}

/// One failed invariant; `index` is `None` for set-level violations.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            ViolationKind::NonFinite(field) => format!("non-finite {field}"),
            ViolationKind::NotSymmetric => "covariance not symmetric".to_string(),
            ViolationKind::NotPsd => "not PSD".to_string(),
            ViolationKind::DirectionNotUnit => "direction not unit length".to_string(),
            ViolationKind::FeatureNotUnit => "feature not unit length".to_string(),
            ViolationKind::ZeroFeature => "zero feature".to_string(),
            ViolationKind::FeatureDimMismatch { expected, actual } => {
                format!("feature_dim mismatch (expected {expected}, got {actual})")
            }
            ViolationKind::WeightOutOfRange => "weight outside [0,1]".to_string(),
            ViolationKind::ExistenceOutOfRange => "existence outside [0,1]".to_string(),
            ViolationKind::NegativeArea => "negative mask area".to_string(),
            ViolationKind::CapacityExceeded { count, capacity } => {
                format!("capacity exceeded ({count} > {capacity})")
            }
            ViolationKind::EmptyFeatureDim => "feature_dim is zero".to_string(),
        };
        match self.index {
            Some(i) => write!(f, "{what} at index {i}"),
            None => f.write_str(&what),
        }
    }
}

/// Check every member and set invariant; never aborts.
pub fn validate_set(set: &GaussianSet) -> Vec<Violation> {
    let mut out = Vec::new();
    if set.feature_dim == 0 {
        out.push(Violation {
            index: None,
            kind: ViolationKind::EmptyFeatureDim,
        });
    }
    if set.len() > set.capacity {
        out.push(Violation {
            index: None,
            kind: ViolationKind::CapacityExceeded {
                count: set.len(),
                capacity: set.capacity,
            },
        });
    }
    for (i, g) in set.gaussians.iter().enumerate() {
        let mut push = |kind| {
            out.push(Violation {
                index: Some(i),
                kind,
            })
        };
        if !g.weight.is_finite() || !g.existence.is_finite() {
            push(ViolationKind::NonFinite("weight"));
        }
        if !g.mean.is_finite() {
            push(ViolationKind::NonFinite("mean"));
        }
        if !g.direction.is_finite() {
            push(ViolationKind::NonFinite("direction"));
        }
        if !g.covariance.is_finite() {
            push(ViolationKind::NonFinite("covariance"));
        } else {
            if g.covariance.asymmetry() > SYMMETRY_TOL {
                push(ViolationKind::NotSymmetric);
            }
            if g.covariance.sym_eigen().minor < -PSD_TOL {
                push(ViolationKind::NotPsd);
            }
        }
        if (g.direction.norm() - 1.0).abs() > UNIT_TOL {
            push(ViolationKind::DirectionNotUnit);
        }
        if g.feature.len() != set.feature_dim {
            push(ViolationKind::FeatureDimMismatch {
                expected: set.feature_dim,
                actual: g.feature.len(),
            });
        }
        if g.feature.iter().any(|v| !v.is_finite()) {
            push(ViolationKind::NonFinite("feature"));
        } else {
            let norm = crate::features::norm(&g.feature);
            if norm == 0.0 {
                push(ViolationKind::ZeroFeature);
            } else if (norm - 1.0).abs() > UNIT_TOL {
                push(ViolationKind::FeatureNotUnit);
            }
        }
        if !(0.0..=1.0).contains(&g.weight) {
            push(ViolationKind::WeightOutOfRange);
        }
        if !(0.0..=1.0).contains(&g.existence) {
            push(ViolationKind::ExistenceOutOfRange);
        }
        match g.mask_area {
            Some(a) if !a.is_finite() => push(ViolationKind::NonFinite("mask_area")),
            Some(a) if a < 0.0 => push(ViolationKind::NegativeArea),
            _ => {}
        }
    }
    out
}

fn renormalize_direction(v: Vec2, fallback: Vec2) -> Vec2 {
    let n = v.norm();
    if (n - 1.0).abs() <= 1e-12 {
        v
    } else {
        v.normalized().unwrap_or(fallback)
    }
}

pub(crate) fn transform_gaussian(g: &TextonGaussian, t: &AffineTransform2D) -> TextonGaussian {
    let a = t.linear;
    TextonGaussian {
        mean: t.apply(g.mean),
        covariance: g.covariance.congruence(&a).symmetrized(),
        direction: renormalize_direction(a.mul_vec(g.direction), g.direction),
        mask_area: g.mask_area.map(|area| area * a.det().abs()),
        ..g.clone()
    }
}

/// Apply `T` to every Gaussian: `μ' = Aμ + t`, `U' = A U Aᵀ`, `ν' = Aν/‖Aν‖`.
pub fn apply_affine(set: &GaussianSet, t: &AffineTransform2D) -> Result<GaussianSet> {
    let det = t.linear.det();
    if !(det.abs() > 1e-12) || !det.is_finite() || !t.translation.is_finite() {
        return Err(TextonError::DegenerateTransform(det));
    }
    Ok(set.replaced(
        set.gaussians
            .iter()
            .map(|g| transform_gaussian(g, t))
            .collect(),
    ))
}

/// Keep Gaussians whose means lie at least `margin` inside the frame.
pub fn filter_in_bounds(set: &GaussianSet, margin: f64) -> GaussianSet {
    set.replaced(
        set.gaussians
            .iter()
            .filter(|g| set.frame.contains(g.mean, margin))
            .cloned()
            .collect(),
    )
}
