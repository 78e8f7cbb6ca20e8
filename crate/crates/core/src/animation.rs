//! Flow-field animation of texton centers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::image::RgbImage;
use crate::linalg::{Mat2, Vec2};
use crate::model::{transform_gaussian, AffineTransform2D, GaussianSet, ImageFrame};
use crate::splatting::{render_set, Projection};

pub const SHEAR_KEYFRAMES: usize = 10;
pub const SHEAR_PERTURBATION_STD: f64 = 1.0 / 30.0;

/// Horizontal shear: the top band moves right, the bottom band left, the
/// middle band stays put. Both moving bands carry a shared perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearFlow {
    pub velocity: f64,
    /// Perturbation values at `SHEAR_KEYFRAMES` evenly spaced times.
    pub keyframes: [f64; SHEAR_KEYFRAMES],
    /// Time span covered by the keyframes.
    pub duration: f64,
}

impl ShearFlow {
    pub fn new(velocity: f64, duration: f64, seed: u64) -> Self {
        let normal = Normal::new(0.0, SHEAR_PERTURBATION_STD).expect("finite std");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keyframes = [0.0; SHEAR_KEYFRAMES];
        keyframes.iter_mut().for_each(|k| *k = normal.sample(&mut rng));
        Self {
            velocity,
            keyframes,
            duration,
        }
    }

    pub fn unperturbed(velocity: f64) -> Self {
        Self {
            velocity,
            keyframes: [0.0; SHEAR_KEYFRAMES],
            duration: 1.0,
        }
    }

    /// Piecewise-linear perturbation, held constant outside the clip.
    pub fn perturbation(&self, t: f64) -> f64 {
        if !(self.duration > 0.0) || t <= 0.0 {
            return self.keyframes[0];
        }
        let s = t / self.duration * (SHEAR_KEYFRAMES - 1) as f64;
        if s >= (SHEAR_KEYFRAMES - 1) as f64 {
            return self.keyframes[SHEAR_KEYFRAMES - 1];
        }
        let k = s.floor() as usize;
        let f = s - k as f64;
        (1.0 - f) * self.keyframes[k] + f * self.keyframes[k + 1]
    }
}

/// Rigid rotation about the normalized origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexFlow {
    pub angular_velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Flow {
    Shear(ShearFlow),
    Vortex(VortexFlow),
}

fn wrap(x: f64) -> f64 {
    if (-1.0..=1.0).contains(&x) {
        x
    } else {
        (x + 1.0).rem_euclid(2.0) - 1.0
    }
}

/// Position at time `t` of a point starting at `p` (normalized coordinates).
pub fn shear_position(p: Vec2, t: f64, flow: &ShearFlow) -> Vec2 {
    let x = if p.y < -1.0 / 3.0 {
        p.x - flow.velocity * t + flow.perturbation(t)
    } else if p.y > 1.0 / 3.0 {
        p.x + flow.velocity * t + flow.perturbation(t)
    } else {
        p.x
    };
    Vec2::new(wrap(x), p.y)
}

pub fn vortex_position(p: Vec2, t: f64, flow: &VortexFlow) -> Vec2 {
    Mat2::rotation(flow.angular_velocity * t).mul_vec(p)
}

/// Pixel ↔ normalized coordinate mapping `x_n = 2x/(W−1) − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedCoords {
    half_w: f64,
    half_h: f64,
}

impl NormalizedCoords {
    pub fn new(frame: ImageFrame) -> Self {
        Self {
            half_w: ((frame.width.max(2) - 1) as f64) / 2.0,
            half_h: ((frame.height.max(2) - 1) as f64) / 2.0,
        }
    }

    pub fn to_normalized(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x / self.half_w - 1.0, p.y / self.half_h - 1.0)
    }

    pub fn to_pixel(&self, n: Vec2) -> Vec2 {
        Vec2::new((n.x + 1.0) * self.half_w, (n.y + 1.0) * self.half_h)
    }
}

/// Set advected to time `t`. Vortex flow also turns U and ν by the flow's
/// local linear map.
pub fn advect(set: &GaussianSet, flow: &Flow, t: f64) -> GaussianSet {
    let coords = NormalizedCoords::new(set.frame);
    set.replaced(
        set.gaussians
            .iter()
            .map(|g| {
                let n = coords.to_normalized(g.mean);
                match flow {
                    Flow::Shear(f) => {
                        let mut moved = g.clone();
                        // y is untouched by the flow; skip the lossy round trip
                        moved.mean.x = coords.to_pixel(shear_position(n, t, f)).x;
                        moved
                    }
                    Flow::Vortex(f) => {
                        let r = Mat2::rotation(f.angular_velocity * t);
                        let s = Mat2::diag(coords.half_w, coords.half_h);
                        let s_inv = Mat2::diag(1.0 / coords.half_w, 1.0 / coords.half_h);
                        let local = s * r * s_inv;
                        let mut moved = transform_gaussian(g, &AffineTransform2D::new(local, Vec2::ZERO));
                        moved.mean = coords.to_pixel(vortex_position(n, t, f));
                        moved
                    }
                }
            })
            .collect(),
    )
}

/// Render `frames` frames at `t = k·dt`, in index order.
pub fn animate(
    set: &GaussianSet,
    flow: &Flow,
    frames: usize,
    dt: f64,
    projection: &Projection,
) -> Result<Vec<RgbImage>> {
    if frames == 0 {
        return Err(invalid("frames", "must be >= 1"));
    }
    if !dt.is_finite() {
        return Err(invalid("dt", "must be finite"));
    }
    if let Flow::Vortex(v) = flow {
        if !v.angular_velocity.is_finite() {
            return Err(invalid("omega", "must be finite"));
        }
    }
    (0..frames)
        .into_par_iter()
        .map(|k| render_set(&advect(set, flow, k as f64 * dt), projection))
        .collect()
}
