//! Gaussian texton engine: estimation of latent textons from soft
//! segmentations, splatting, matching metrics, latent-space editing and
//! flow animation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod animation;
pub mod editing;
pub mod error;
pub mod estimation;
pub mod features;
pub mod image;
pub mod io;
pub mod linalg;
pub mod model;
pub mod objectives;
pub mod splatting;

pub use error::{Result, TextonError};
pub use image::RgbImage;
pub use linalg::{Mat2, Vec2};
pub use model::{
    apply_affine, filter_in_bounds, validate_set, AffineTransform2D, GaussianSet, ImageFrame,
    TextonGaussian, Violation, ViolationKind, DEFAULT_CAPACITY, DEFAULT_FEATURE_DIM,
};
