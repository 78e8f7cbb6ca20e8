//! Deterministic loss formulas and set-distance metrics.

pub mod hungarian;
pub mod losses;
pub mod matching;
pub mod texture;

pub use hungarian::{hungarian_match, Matching};
pub use losses::{
    compactness_loss, entropy_loss, reconstruction_distance, reconstruction_distance_with,
    PerceptualDistance, PyramidL1, ReconstructionReport, ReconstructionWeights,
};
pub use matching::{cost_matrix, cycle_consistency, pair_cost, set_matching_cost, MatchWeights};
pub use texture::texture_distance;

/// Individual loss values of one training step, supplied by the caller.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub reconstruction: f64,
    pub reconstruction_transformed: f64,
    pub entropy: f64,
    pub compactness: f64,
    pub consistency: f64,
    pub texture: f64,
    pub gan: f64,
    pub patch_gan: f64,
}

/// Loss weights. `texture`, `gan` and `patch_gan` are fixed during
/// training; the other three are tuned and default to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub entropy: f64,
    pub compactness: f64,
    pub consistency: f64,
    pub texture: f64,
    pub gan: f64,
    pub patch_gan: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            entropy: 1.0,
            compactness: 1.0,
            consistency: 1.0,
            texture: 0.01,
            gan: 0.1,
            patch_gan: 0.1,
        }
    }
}

impl LossTerms {
    /// Weighted sum of all terms; the two reconstruction terms are unweighted.
    pub fn total(&self, w: &LossWeights) -> f64 {
        self.reconstruction
            + self.reconstruction_transformed
            + w.entropy * self.entropy
            + w.compactness * self.compactness
            + w.consistency * self.consistency
            + w.texture * self.texture
            + w.gan * self.gan
            + w.patch_gan * self.patch_gan
    }
}
