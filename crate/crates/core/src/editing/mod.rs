//! Latent-space editing operators.

pub mod interpolate;
pub mod merge;
pub mod propagate;
pub mod reshuffle;
pub mod transfer;
pub mod transform;
pub mod variations;

pub use interpolate::{correspondence, interpolate, spatial_morph, Ramp};
pub use merge::merge_patch_sets;
pub use propagate::{alignment, nearest_effective, propagate_edit, EditRegion, DEFAULT_EDIT_THRESHOLD};
pub use reshuffle::{reshuffle, swap_coefficient, ReshuffleMode, ReshufflePlan, DEFAULT_GAMMA};
pub use transfer::{effective_mean_feature, transfer_mean_align, transfer_replace, FeatureShift};
pub use transform::{rescale_gaussians, transform_texton, TextonOp};
pub use variations::{edit_covariance, modify_variations, VariationEdit};
