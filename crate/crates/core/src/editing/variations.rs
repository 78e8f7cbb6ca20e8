//! Amplifying or damping the variation of features and covariances.

use crate::error::{invalid, Result, TextonError};
use crate::features;
use crate::linalg::Mat2;
use crate::model::{GaussianSet, TextonGaussian};
use crate::splatting::COVARIANCE_EPSILON;

/// Scales of the feature and covariance deviations from their means.
/// `1` reproduces the input, `0` collapses onto the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationEdit {
    pub feature: f64,
    pub covariance: f64,
}

impl VariationEdit {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta_f", self.feature), ("delta_u", self.covariance)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("{v} is not a finite value >= 0")));
            }
        }
        Ok(())
    }
}

fn cholesky_regularized(u: &Mat2) -> Option<Mat2> {
    u.cholesky()
        .or_else(|| (*u + Mat2::scalar(COVARIANCE_EPSILON)).cholesky())
}

/// `W^Δ Ū (W^Δ)ᵀ` with `W = L L̄⁻¹` from the Cholesky factors of `u` and `u_bar`.
pub fn edit_covariance(u: &Mat2, u_bar: &Mat2, delta: f64) -> Result<Mat2> {
    if delta == 1.0 {
        return Ok(*u);
    }
    let l_bar = u_bar.cholesky().ok_or(TextonError::DegenerateMeanCovariance)?;
    let l_bar_inv = l_bar.inverse().ok_or(TextonError::DegenerateMeanCovariance)?;
    let l = cholesky_regularized(u)
        .ok_or_else(|| invalid("covariance", "not positive definite after regularization"))?;
    let w = l * l_bar_inv;
    let p = w
        .powf(delta)
        .ok_or_else(|| invalid("covariance", "no real fractional power"))?;
    Ok(u_bar.congruence(&p).symmetrized())
}

/// Rescale each effective texton's deviation from the effective means.
pub fn modify_variations(set: &GaussianSet, edit: &VariationEdit) -> Result<GaussianSet> {
    edit.validate()?;
    let effective: Vec<&TextonGaussian> = set.gaussians.iter().filter(|g| g.is_effective()).collect();
    if effective.is_empty() {
        return Err(TextonError::NoEffectiveTextons);
    }
    let f_bar = features::weighted_mean(
        set.feature_dim,
        effective.iter().map(|g| (g.feature.as_slice(), g.weight)),
    )
    .ok_or(TextonError::NoEffectiveTextons)?;
    let total: f64 = effective.iter().map(|g| g.weight).sum();
    let u_bar = effective
        .iter()
        .fold(Mat2::scalar(0.0), |acc, g| acc + g.covariance.scale(g.weight))
        .scale(1.0 / total)
        .symmetrized();
    if edit.covariance != 1.0 && u_bar.cholesky().is_none() {
        return Err(TextonError::DegenerateMeanCovariance);
    }

    let mut out = Vec::with_capacity(set.len());
    for g in &set.gaussians {
        if !g.is_effective() {
            out.push(g.clone());
            continue;
        }
        let feature = if edit.feature == 1.0 {
            g.feature.clone()
        } else {
            features::normalized(
                g.feature
                    .iter()
                    .zip(&f_bar)
                    .map(|(f, m)| m + edit.feature * (f - m))
                    .collect(),
            )
        };
        out.push(TextonGaussian {
            feature,
            covariance: edit_covariance(&g.covariance, &u_bar, edit.covariance)?,
            ..g.clone()
        });
    }
    Ok(set.replaced(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec2;
    use crate::model::ImageFrame;

    #[test]
    fn half_power_of_diagonal() {
        let u = edit_covariance(&Mat2::diag(4.0, 1.0), &Mat2::IDENTITY, 0.5).unwrap();
        assert!((u - Mat2::diag(2.0, 1.0)).frobenius() < 1e-12);
    }

    #[test]
    fn zero_power_gives_the_mean() {
        let u_bar = Mat2::new(2.0, 0.3, 0.3, 1.0);
        let u = edit_covariance(&Mat2::new(5.0, -1.0, -1.0, 2.0), &u_bar, 0.0).unwrap();
        assert!((u - u_bar).frobenius() < 1e-12);
    }

    #[test]
    fn singular_mean_is_rejected() {
        assert!(matches!(
            edit_covariance(&Mat2::diag(4.0, 1.0), &Mat2::diag(1.0, 0.0), 0.5),
            Err(TextonError::DegenerateMeanCovariance)
        ));
    }

    fn set() -> GaussianSet {
        let mk = |x: f64, u: Mat2, f: Vec<f64>| TextonGaussian {
            covariance: u,
            ..TextonGaussian::isotropic(Vec2::new(x, 3.0), 1.0, f)
        };
        GaussianSet::with_gaussians(
            ImageFrame::new(16, 16).unwrap(),
            2,
            4,
            vec![
                mk(1.0, Mat2::new(3.0, 0.5, 0.5, 1.0), vec![1.0, 0.0]),
                mk(5.0, Mat2::diag(1.0, 2.0), vec![0.0, 1.0]),
                mk(9.0, Mat2::new(2.0, -0.4, -0.4, 2.5), vec![0.6, 0.8]),
            ],
        )
    }

    #[test]
    fn unit_deltas_reproduce_input() {
        let s = set();
        let out = modify_variations(&s, &VariationEdit { feature: 1.0, covariance: 1.0 }).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn collapse_to_the_mean() {
        let s = set();
        let out = modify_variations(&s, &VariationEdit { feature: 0.0, covariance: 0.0 }).unwrap();
        let f0 = &out.gaussians[0].feature;
        for g in &out.gaussians {
            assert!(features::distance(&g.feature, f0) < 1e-12);
            assert!((g.covariance - out.gaussians[0].covariance).frobenius() < 1e-12);
        }
    }

    #[test]
    fn near_unit_delta_is_continuous() {
        let s = set();
        let out = modify_variations(&s, &VariationEdit { feature: 1.0, covariance: 1.0 + 1e-9 }).unwrap();
        for (a, b) in out.gaussians.iter().zip(&s.gaussians) {
            assert!((a.covariance - b.covariance).frobenius() < 1e-7);
        }
    }
}
