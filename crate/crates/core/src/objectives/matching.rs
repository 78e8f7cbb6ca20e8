//! Gaussian-to-Gaussian matching cost and set matching (the CC metric).

use rayon::prelude::*;

use super::hungarian::{hungarian_match, Matching};
use crate::error::{Result, TextonError};
use crate::estimation::SegmentationStack;
use crate::features;
use crate::model::{GaussianSet, ImageFrame, TextonGaussian};

/// Weights of the pairwise matching cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchWeights {
    pub mean: f64,
    pub covariance: f64,
    pub direction: f64,
    pub feature: f64,
    pub existence: f64,
    pub segmentation: f64,
    /// Distance from the frame edge at which boundary damping ends (px).
    pub boundary_margin: f64,
    /// Damping factor applied right at the frame edge.
    pub beta_floor: f64,
}

impl Default for MatchWeights {
    fn default() -> Self {
        Self {
            mean: 1.2,
            covariance: 2.0,
            direction: 0.01,
            feature: 10.0,
            existence: 4.0,
            segmentation: 200.0,
            boundary_margin: 8.0,
            beta_floor: 0.1,
        }
    }
}

impl MatchWeights {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [
            self.mean,
            self.covariance,
            self.direction,
            self.feature,
            self.existence,
            self.segmentation,
            self.boundary_margin,
        ];
        if lambdas.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(crate::error::invalid("weights", "all weights must be finite and >= 0"));
        }
        if !(self.beta_floor > 0.0 && self.beta_floor <= 1.0) {
            return Err(crate::error::invalid("beta_floor", format!("{} not in (0,1]", self.beta_floor)));
        }
        Ok(())
    }

    /// Boundary damping of one Gaussian: linear ramp from `beta_floor` at
    /// the edge to 1 at `boundary_margin`.
    pub fn boundary_factor(&self, g: &TextonGaussian, frame: &ImageFrame) -> f64 {
        if self.boundary_margin <= 0.0 {
            return 1.0;
        }
        let d = frame.edge_distance(g.mean);
        (d / self.boundary_margin).min(1.0).max(self.beta_floor)
    }
}

fn mask_distance(a: &[f64], b: &[f64]) -> f64 {
    features::distance(a, b)
}

fn cost_with_betas(
    g: &TextonGaussian,
    h: &TextonGaussian,
    w: &MatchWeights,
    beta: f64,
    masks: Option<(&[f64], &[f64])>,
) -> f64 {
    let w_ij = g.existence * h.existence;
    let geometric = w.mean * (g.mean - h.mean).norm()
        + w.covariance * (g.covariance - h.covariance).frobenius()
        + w.direction * (g.direction - h.direction).norm()
        + w.feature * features::distance(&g.feature, &h.feature);
    let gated = if w_ij == 0.0 { 0.0 } else { w_ij * beta * geometric };
    let seg = match masks {
        Some((a, b)) if w.segmentation != 0.0 => w.segmentation * mask_distance(a, b),
        _ => 0.0,
    };
    gated + w.existence * (g.existence - h.existence).abs() + seg
}

/// Cost of matching `g` to `h`; both means are damped against `frame`.
pub fn pair_cost(
    g: &TextonGaussian,
    h: &TextonGaussian,
    weights: &MatchWeights,
    masks: Option<(&[f64], &[f64])>,
    frame: &ImageFrame,
) -> f64 {
    let beta = weights
        .boundary_factor(g, frame)
        .min(weights.boundary_factor(h, frame));
    cost_with_betas(g, h, weights, beta, masks)
}

/// Full `|A| × |B|` cost matrix. Rows are computed independently.
pub fn cost_matrix(
    a: &GaussianSet,
    b: &GaussianSet,
    weights: &MatchWeights,
    masks: Option<(&SegmentationStack, &SegmentationStack)>,
) -> Result<Vec<Vec<f64>>> {
    a.ensure_same_dim(b)?;
    weights.validate()?;
    if let Some((ma, mb)) = masks {
        if ma.len() != a.len() || mb.len() != b.len() {
            return Err(TextonError::DimensionMismatch(format!(
                "{} / {} masks for {} / {} gaussians",
                ma.len(),
                mb.len(),
                a.len(),
                b.len()
            )));
        }
        if ma.frame() != mb.frame() {
            return Err(TextonError::FrameMismatch {
                expected: ma.frame().to_string(),
                actual: mb.frame().to_string(),
            });
        }
    }
    let beta_b: Vec<f64> = b
        .gaussians
        .iter()
        .map(|h| weights.boundary_factor(h, &b.frame))
        .collect();
    Ok(a.gaussians
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let beta_i = weights.boundary_factor(g, &a.frame);
            b.gaussians
                .iter()
                .enumerate()
                .map(|(j, h)| {
                    let m = masks.map(|(ma, mb)| (ma.mask(i), mb.mask(j)));
                    cost_with_betas(g, h, weights, beta_i.min(beta_b[j]), m)
                })
                .collect()
        })
        .collect())
}

/// Minimum total pairwise cost between two sets; `total_cost` is CC(A, B).
pub fn set_matching_cost(
    a: &GaussianSet,
    b: &GaussianSet,
    weights: &MatchWeights,
    masks: Option<(&SegmentationStack, &SegmentationStack)>,
) -> Result<Matching> {
    if a.is_empty() || b.is_empty() {
        a.ensure_same_dim(b)?;
        return Ok(Matching::empty());
    }
    hungarian_match(&cost_matrix(a, b, weights, masks)?)
}

/// Cycle-consistency distance between two sets with default weights.
pub fn cycle_consistency(a: &GaussianSet, b: &GaussianSet) -> Result<f64> {
    Ok(set_matching_cost(a, b, &MatchWeights::default(), None)?.total_cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec2;

    fn frame() -> ImageFrame {
        ImageFrame::new(64, 64).unwrap()
    }

    fn g(x: f64, y: f64) -> TextonGaussian {
        TextonGaussian::isotropic(Vec2::new(x, y), 4.0, vec![0.6, 0.8])
    }

    #[test]
    fn identical_gaussians_cost_nothing() {
        let a = g(30.0, 30.0);
        let m = [0.0, 1.0, 0.5];
        assert_eq!(pair_cost(&a, &a, &MatchWeights::default(), Some((&m, &m)), &frame()), 0.0);
    }

    #[test]
    fn zero_existence_gates_geometry() {
        let mut a = g(30.0, 30.0);
        let mut b = g(10.0, 40.0);
        a.existence = 0.0;
        b.existence = 0.0;
        assert_eq!(pair_cost(&a, &b, &MatchWeights::default(), None, &frame()), 0.0);
        b.existence = 0.5;
        let c = pair_cost(&a, &b, &MatchWeights::default(), None, &frame());
        assert!((c - 4.0 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn unit_mean_offset_costs_lambda_mu() {
        let a = g(30.0, 30.0);
        let b = g(31.0, 30.0);
        let c = pair_cost(&a, &b, &MatchWeights::default(), None, &frame());
        assert!((c - 1.2).abs() < 1e-12);
    }

    #[test]
    fn boundary_damping_ramp() {
        let w = MatchWeights::default();
        let f = frame();
        assert_eq!(w.boundary_factor(&g(0.0, 30.0), &f), 0.1);
        assert_eq!(w.boundary_factor(&g(4.0, 30.0), &f), 0.5);
        assert_eq!(w.boundary_factor(&g(20.0, 30.0), &f), 1.0);
        assert_eq!(w.boundary_factor(&g(63.0 - 2.0, 30.0), &f), 0.25);
    }

    #[test]
    fn empty_sets_match_trivially() {
        let a = GaussianSet::new(frame(), 2, 4);
        let b = GaussianSet::with_gaussians(frame(), 2, 4, vec![g(1.0, 1.0)]);
        let m = set_matching_cost(&a, &b, &MatchWeights::default(), None).unwrap();
        assert_eq!(m.total_cost, 0.0);
        assert!(m.pairs.is_empty());
    }
}
