//! Interpolation and spatial morphing between two texton sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::features;
use crate::linalg::{Mat2, Vec2};
use crate::model::{GaussianSet, TextonGaussian};
use crate::objectives::{hungarian_match, Matching};

/// Covariance eigenvalue floor applied to blended covariances.
pub const BLEND_EIGEN_FLOOR: f64 = 1e-9;

/// Correspondence minimizing `Σ ‖μ_i − μ'_j‖ + |δ_i − δ'_j|`.
pub fn correspondence(a: &GaussianSet, b: &GaussianSet) -> Result<Matching> {
    let cost: Vec<Vec<f64>> = a
        .gaussians
        .iter()
        .map(|g| {
            b.gaussians
                .iter()
                .map(|h| (g.mean - h.mean).norm() + (g.weight - h.weight).abs())
                .collect()
        })
        .collect();
    hungarian_match(&cost)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 || a == b {
        a
    } else if t == 1.0 {
        b
    } else {
        (1.0 - t) * a + t * b
    }
}

fn blend_direction(a: Vec2, b: Vec2, t: f64) -> Vec2 {
    let v = Vec2::new(lerp(a.x, b.x, t), lerp(a.y, b.y, t));
    if (v.norm() - 1.0).abs() <= 1e-12 {
        return v;
    }
    // opposite directions cancel; keep the nearer endpoint
    v.normalized().unwrap_or(if t < 0.5 { a } else { b })
}

fn blend_covariance(a: &Mat2, b: &Mat2, t: f64) -> Mat2 {
    let mut m = Mat2::new(0.0, 0.0, 0.0, 0.0);
    for r in 0..2 {
        for c in 0..2 {
            m.m[r][c] = lerp(a.m[r][c], b.m[r][c], t);
        }
    }
    let m = m.symmetrized();
    if m.sym_eigen().minor < BLEND_EIGEN_FLOOR {
        m.psd_projected(BLEND_EIGEN_FLOOR)
    } else {
        m
    }
}

/// Blend every field of `a` toward `b` by `t`; the weight is left to the caller.
pub(crate) fn blend_gaussian(a: &TextonGaussian, b: &TextonGaussian, t: f64) -> TextonGaussian {
    let mut feature = features::lerp(&a.feature, &b.feature, t);
    if t != 0.0 && t != 1.0 && a.feature != b.feature {
        features::normalize(&mut feature);
    }
    TextonGaussian {
        weight: lerp(a.weight, b.weight, t),
        existence: lerp(a.existence, b.existence, t),
        mean: Vec2::new(lerp(a.mean.x, b.mean.x, t), lerp(a.mean.y, b.mean.y, t)),
        covariance: blend_covariance(&a.covariance, &b.covariance, t),
        direction: blend_direction(a.direction, b.direction, t),
        feature,
        mask_area: match (a.mask_area, b.mask_area) {
            (Some(x), Some(y)) => Some(lerp(x, y, t)),
            (x, y) => if t < 0.5 { x } else { y },
        },
    }
}

fn bernoulli(rng: &mut ChaCha8Rng, q: f64) -> f64 {
    let u: f64 = rng.random();
    if u < q {
        1.0
    } else {
        0.0
    }
}

/// Shared core: `eta_at` gives the blend factor for a Gaussian center.
fn blend_sets(
    a: &GaussianSet,
    b: &GaussianSet,
    seed: u64,
    eta_at: impl Fn(Vec2) -> f64,
) -> Result<GaussianSet> {
    a.ensure_same_dim(b)?;
    let matching = correspondence(a, b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    for (i, g) in a.gaussians.iter().enumerate() {
        let eta = eta_at(g.mean).clamp(0.0, 1.0);
        match matching.partner_of_row(i) {
            Some(j) => {
                let h = &b.gaussians[j];
                let mut blended = blend_gaussian(g, h, eta);
                blended.weight = bernoulli(&mut rng, lerp(g.weight, h.weight, eta));
                out.push(blended);
            }
            None => {
                let w = bernoulli(&mut rng, (1.0 - eta) * g.weight);
                if eta < 1.0 {
                    out.push(TextonGaussian {
                        weight: w,
                        ..g.clone()
                    });
                }
            }
        }
    }
    for (j, h) in b.gaussians.iter().enumerate() {
        if matching.partner_of_column(j).is_none() {
            let eta = eta_at(h.mean).clamp(0.0, 1.0);
            let w = bernoulli(&mut rng, eta * h.weight);
            if eta > 0.0 {
                out.push(TextonGaussian {
                    weight: w,
                    ..h.clone()
                });
            }
        }
    }
    Ok(GaussianSet::with_gaussians(
        a.frame,
        a.feature_dim,
        a.capacity.max(b.capacity),
        out,
    ))
}

/// Blend `a` toward `b` by `eta`; weights are redrawn as Bernoulli variables.
pub fn interpolate(a: &GaussianSet, b: &GaussianSet, eta: f64, seed: u64) -> Result<GaussianSet> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("eta", format!("{eta} not in [0,1]")));
    }
    if eta == 0.0 {
        a.ensure_same_dim(b)?;
        return Ok(a.clone());
    }
    blend_sets(a, b, seed, |_| eta)
}

/// Spatially varying blend factor.
#[derive(Debug, Clone, PartialEq)]
pub enum Ramp {
    Constant(f64),
    /// 0 at `x = 0`, 1 at `x = W − 1`.
    LeftToRight,
    /// Row-major per-pixel values over the frame of `A`.
    Map { width: usize, height: usize, values: Vec<f64> },
}

impl Ramp {
    fn eta(&self, p: Vec2, width: usize) -> f64 {
        match self {
            Ramp::Constant(e) => *e,
            Ramp::LeftToRight => {
                if width <= 1 {
                    0.0
                } else {
                    p.x / (width - 1) as f64
                }
            }
            Ramp::Map { width, height, values } => {
                let x = (p.x.round().max(0.0) as usize).min(width - 1);
                let y = (p.y.round().max(0.0) as usize).min(height - 1);
                values[y * width + x]
            }
        }
    }
}

/// Interpolation with η read from `ramp` at each pair's A-center (the
/// B-center for unmatched B Gaussians).
pub fn spatial_morph(a: &GaussianSet, b: &GaussianSet, ramp: &Ramp, seed: u64) -> Result<GaussianSet> {
    match ramp {
        Ramp::Constant(eta) => return interpolate(a, b, *eta, seed),
        Ramp::Map { width, height, values } => {
            if *width == 0 || *height == 0 || values.len() != width * height {
                return Err(invalid("ramp", "map size does not match its dimensions"));
            }
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(invalid("ramp", "values must lie in [0,1]"));
            }
        }
        Ramp::LeftToRight => {}
    }
    let width = a.frame.width;
    blend_sets(a, b, seed, |p| ramp.eta(p, width))
}
