//! Appearance transfer between a structure set and an appearance set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TextonError};
use crate::features;
use crate::model::{GaussianSet, TextonGaussian};

/// δ-weighted mean feature over effective textons.
pub fn effective_mean_feature(set: &GaussianSet) -> Result<Vec<f64>> {
    features::weighted_mean(
        set.feature_dim,
        set.gaussians
            .iter()
            .filter(|g| g.is_effective())
            .map(|g| (g.feature.as_slice(), g.weight)),
    )
    .ok_or(TextonError::NoEffectiveTextons)
}

/// Additive feature offset applied to effective textons.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureShift {
    pub delta: Vec<f64>,
}

impl FeatureShift {
    /// Offset taking the structure mean onto the appearance mean.
    pub fn between(structure: &GaussianSet, appearance: &GaussianSet) -> Result<Self> {
        structure.ensure_same_dim(appearance)?;
        let from = effective_mean_feature(structure)?;
        let to = effective_mean_feature(appearance)?;
        Ok(Self {
            delta: to.iter().zip(&from).map(|(t, f)| t - f).collect(),
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            delta: self.delta.iter().map(|v| -v).collect(),
        }
    }

    /// Shift every effective feature, optionally renormalizing afterwards.
    pub fn apply(&self, set: &GaussianSet, renormalize: bool) -> Result<GaussianSet> {
        if self.delta.len() != set.feature_dim {
            return Err(TextonError::FeatureDimMismatch {
                expected: set.feature_dim,
                actual: self.delta.len(),
            });
        }
        Ok(set.replaced(
            set.gaussians
                .iter()
                .map(|g| {
                    if !g.is_effective() {
                        return g.clone();
                    }
                    let mut feature: Vec<f64> =
                        g.feature.iter().zip(&self.delta).map(|(f, d)| f + d).collect();
                    if renormalize {
                        features::normalize(&mut feature);
                    }
                    TextonGaussian {
                        feature,
                        ..g.clone()
                    }
                })
                .collect(),
        ))
    }
}

/// Move the structure's mean feature onto the appearance's mean feature.
pub fn transfer_mean_align(structure: &GaussianSet, appearance: &GaussianSet) -> Result<GaussianSet> {
    FeatureShift::between(structure, appearance)?.apply(structure, true)
}

/// Replace each effective structure feature by a uniformly drawn effective
/// appearance feature.
pub fn transfer_replace(
    structure: &GaussianSet,
    appearance: &GaussianSet,
    seed: u64,
) -> Result<GaussianSet> {
    structure.ensure_same_dim(appearance)?;
    let pool: Vec<&[f64]> = appearance
        .gaussians
        .iter()
        .filter(|g| g.is_effective())
        .map(|g| g.feature.as_slice())
        .collect();
    if pool.is_empty() {
        return Err(TextonError::NoEffectiveTextons);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(structure.replaced(
        structure
            .gaussians
            .iter()
            .map(|g| {
                if !g.is_effective() {
                    return g.clone();
                }
                TextonGaussian {
                    feature: pool[rng.random_range(0..pool.len())].to_vec(),
                    ..g.clone()
                }
            })
            .collect(),
    ))
}
