//! Appearance reshuffling among textons.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::features;
use crate::model::{GaussianSet, TextonGaussian};

pub const DEFAULT_GAMMA: f64 = 0.5;

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Swapping coefficient τ for moving `g_i`'s feature into `g_j`.
///
/// Uses the mask-area ratio only when both areas are known.
pub fn swap_coefficient(g_i: &TextonGaussian, g_j: &TextonGaussian, gamma: f64) -> f64 {
    let p = ratio(g_i.existence, g_j.existence);
    let r = match (g_i.mask_area, g_j.mask_area) {
        (Some(a_i), Some(a_j)) => ratio(a_i, a_j).max(p),
        _ => p,
    };
    r.min(1.0).powf(gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReshuffleMode {
    /// Pairwise blends weighted by the swapping coefficient.
    Soft,
    /// Exact permutation among effective textons.
    Hard,
}

/// Slot `j` receives the feature of texton `permutation[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReshufflePlan {
    pub permutation: Vec<usize>,
    pub gamma: f64,
    pub mode: ReshuffleMode,
    pub seed: u64,
}

impl ReshufflePlan {
    pub fn identity(n: usize, mode: ReshuffleMode) -> Self {
        Self {
            permutation: (0..n).collect(),
            gamma: DEFAULT_GAMMA,
            mode,
            seed: 0,
        }
    }

    /// Uniformly random permutation drawn from `seed`.
    pub fn random(n: usize, mode: ReshuffleMode, seed: u64) -> Self {
        let mut permutation: Vec<usize> = (0..n).collect();
        permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self {
            permutation,
            gamma: DEFAULT_GAMMA,
            mode,
            seed,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.permutation.len() != n {
            return Err(invalid(
                "permutation",
                format!("has {} entries for {n} textons", self.permutation.len()),
            ));
        }
        let mut seen = vec![false; n];
        for &p in &self.permutation {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(invalid("permutation", "is not a bijection"));
            }
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", format!("{} is not >= 0", self.gamma)));
        }
        Ok(())
    }

    /// Induced permutation on the effective textons: from each effective
    /// slot, follow the permutation until an effective source is reached.
    fn restricted(&self, effective: &[bool]) -> Vec<usize> {
        (0..self.permutation.len())
            .map(|j| {
                if !effective[j] {
                    return j;
                }
                let mut i = self.permutation[j];
                while !effective[i] {
                    i = self.permutation[i];
                }
                i
            })
            .collect()
    }
}

/// Reshuffle features; every geometric field is left untouched.
pub fn reshuffle(set: &GaussianSet, plan: &ReshufflePlan) -> Result<GaussianSet> {
    plan.validate(set.len())?;
    let g = &set.gaussians;
    let features: Vec<Vec<f64>> = match plan.mode {
        ReshuffleMode::Hard => {
            let effective: Vec<bool> = g.iter().map(TextonGaussian::is_effective).collect();
            plan.restricted(&effective)
                .into_iter()
                .map(|i| g[i].feature.clone())
                .collect()
        }
        ReshuffleMode::Soft => (0..g.len())
            .map(|j| {
                let i = plan.permutation[j];
                if i == j {
                    return g[j].feature.clone();
                }
                let tau = swap_coefficient(&g[i], &g[j], plan.gamma);
                features::normalized(features::lerp(&g[j].feature, &g[i].feature, tau))
            })
            .collect(),
    };
    Ok(set.replaced(
        g.iter()
            .zip(features)
            .map(|(g, feature)| TextonGaussian {
                feature,
                ..g.clone()
            })
            .collect(),
    ))
}
