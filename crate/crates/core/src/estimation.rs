//! Gaussian parameter estimation from soft segmentation masks.
//!
//! Each mask `S_i` yields one texton: the S-weighted mean and covariance of
//! pixel coordinates, the self-weighted existence probability
//! `p_i = Σ S_i² / Σ S_i`, and S-pooled appearance and direction vectors.
//! [`synth_world`] produces ground-truth worlds whose masks and dense maps
//! feed straight back into [`estimate_gaussians`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result, TextonError};
use crate::features;
use crate::linalg::{Mat2, Vec2};
use crate::model::{GaussianSet, ImageFrame, TextonGaussian};

/// Variance assigned to Gaussians estimated from empty masks (px²).
pub const DEGENERATE_VARIANCE: f64 = 1e-6;
/// Masks with total mass below this are treated as empty.
pub const MIN_SEGMENT_MASS: f64 = 1e-8;
const NORMALIZATION_TOL: f64 = 1e-5;

/// `n` soft masks over one frame, pixel-wise normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationStack {
    frame: ImageFrame,
    /// Row-major `H·W` values per mask.
    masks: Vec<Vec<f64>>,
}

impl SegmentationStack {
    /// Validates shape, value range and per-pixel normalization.
    pub fn new(frame: ImageFrame, masks: Vec<Vec<f64>>) -> Result<Self> {
        let n = frame.pixel_count();
        for (i, m) in masks.iter().enumerate() {
            if m.len() != n {
                return Err(TextonError::DimensionMismatch(format!(
                    "mask {i} has {} values, frame {frame} needs {n}",
                    m.len()
                )));
            }
            if let Some(v) = m.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(invalid("masks", format!("mask {i} has value {v} outside [0,1]")));
            }
        }
        if !masks.is_empty() {
            for p in 0..n {
                let sum: f64 = masks.iter().map(|m| m[p]).sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(invalid(
                        "masks",
                        format!("pixel {p} sums to {sum}, expected 1"),
                    ));
                }
            }
        }
        Ok(Self { frame, masks })
    }

    /// One-hot stack from a per-pixel label image.
    pub fn from_labels(frame: ImageFrame, labels: &[usize], n_masks: usize) -> Result<Self> {
        if labels.len() != frame.pixel_count() {
            return Err(TextonError::DimensionMismatch(format!(
                "{} labels for frame {frame}",
                labels.len()
            )));
        }
        let mut masks = vec![vec![0.0; labels.len()]; n_masks];
        for (p, &l) in labels.iter().enumerate() {
            if l >= n_masks {
                return Err(invalid("labels", format!("label {l} >= {n_masks}")));
            }
            masks[l][p] = 1.0;
        }
        Self::new(frame, masks)
    }

    pub fn frame(&self) -> ImageFrame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn mask(&self, i: usize) -> &[f64] {
        &self.masks[i]
    }

    pub fn masks(&self) -> &[Vec<f64>] {
        &self.masks
    }

    /// Per-segment normalizer `Σ_p S_i(p)`.
    pub fn mass(&self, i: usize) -> f64 {
        self.masks[i].iter().sum()
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            frame: self.frame,
            masks: order.iter().map(|&i| self.masks[i].clone()).collect(),
        }
    }
}

/// Appearance map `F_a` (H×W×d) and direction map `V` (H×W×2).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMaps {
    frame: ImageFrame,
    appearance_dim: usize,
    appearance: Vec<f64>,
    directions: Vec<f64>,
}

impl DenseMaps {
    pub fn new(
        frame: ImageFrame,
        appearance_dim: usize,
        appearance: Vec<f64>,
        directions: Vec<f64>,
    ) -> Result<Self> {
        let n = frame.pixel_count();
        if appearance.len() != n * appearance_dim {
            return Err(TextonError::DimensionMismatch(format!(
                "appearance has {} values, expected {}",
                appearance.len(),
                n * appearance_dim
            )));
        }
        if directions.len() != n * 2 {
            return Err(TextonError::DimensionMismatch(format!(
                "directions has {} values, expected {}",
                directions.len(),
                n * 2
            )));
        }
        Ok(Self {
            frame,
            appearance_dim,
            appearance,
            directions,
        })
    }

    pub fn frame(&self) -> ImageFrame {
        self.frame
    }

    pub fn appearance_dim(&self) -> usize {
        self.appearance_dim
    }

    pub fn appearance(&self) -> &[f64] {
        &self.appearance
    }

    pub fn directions(&self) -> &[f64] {
        &self.directions
    }

    pub fn appearance_at(&self, pixel: usize) -> &[f64] {
        let d = self.appearance_dim;
        &self.appearance[pixel * d..(pixel + 1) * d]
    }

    pub fn direction_at(&self, pixel: usize) -> Vec2 {
        Vec2::new(self.directions[2 * pixel], self.directions[2 * pixel + 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    /// Binary-concrete relaxation of Bernoulli(p).
    Relaxed { temperature: f64 },
    /// `δ = 1` iff `p ≥ 0.5`.
    Rounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub mode: SamplingMode,
    pub seed: u64,
}

impl Sampling {
    pub const DEFAULT_TEMPERATURE: f64 = 1.0;

    pub fn rounded() -> Self {
        Self {
            mode: SamplingMode::Rounded,
            seed: 0,
        }
    }

    pub fn relaxed(temperature: f64, seed: u64) -> Self {
        Self {
            mode: SamplingMode::Relaxed { temperature },
            seed,
        }
    }
}

/// Seed for the `index`-th draw derived from a base seed.
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Relaxed Bernoulli sample `σ((logit p + logistic noise) / temperature)`.
pub fn gumbel_binary_sample(prob: f64, temperature: f64, seed: u64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(invalid("temperature", format!("{temperature} is not > 0")));
    }
    if !(0.0..=1.0).contains(&prob) {
        return Err(invalid("prob", format!("{prob} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let noise = u.ln() - (1.0 - u).ln();
    let logit = prob.ln() - (1.0 - prob).ln();
    let z = (logit + noise) / temperature;
    Ok(1.0 / (1.0 + (-z).exp()))
}

fn pixel_coord(frame: &ImageFrame, p: usize) -> Vec2 {
    Vec2::new((p % frame.width) as f64, (p / frame.width) as f64)
}

/// Estimate one Gaussian per mask.
pub fn estimate_gaussians(
    masks: &SegmentationStack,
    maps: &DenseMaps,
    sampling: &Sampling,
    capacity: usize,
) -> Result<GaussianSet> {
    let frame = masks.frame();
    if maps.frame() != frame {
        return Err(TextonError::FrameMismatch {
            expected: frame.to_string(),
            actual: maps.frame().to_string(),
        });
    }
    if masks.len() > capacity {
        return Err(TextonError::CapacityExceeded {
            count: masks.len(),
            capacity,
        });
    }
    if let SamplingMode::Relaxed { temperature } = sampling.mode {
        if !(temperature > 0.0) {
            return Err(invalid("temperature", format!("{temperature} is not > 0")));
        }
    }
    let dim = maps.appearance_dim();
    let mut gaussians = Vec::with_capacity(masks.len());
    for i in 0..masks.len() {
        let s = masks.mask(i);
        let mass: f64 = s.iter().sum();
        if mass < MIN_SEGMENT_MASS {
            gaussians.push(TextonGaussian {
                weight: 0.0,
                existence: 0.0,
                mean: frame.center(),
                covariance: Mat2::scalar(DEGENERATE_VARIANCE),
                direction: Vec2::new(1.0, 0.0),
                feature: vec![0.0; dim],
                mask_area: Some(mass),
            });
            continue;
        }

        let mut mean = Vec2::ZERO;
        let mut self_weighted = 0.0;
        let mut feature = vec![0.0; dim];
        let mut direction = Vec2::ZERO;
        for (p, &w) in s.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            mean = mean + pixel_coord(&frame, p).scale(w);
            self_weighted += w * w;
            feature
                .iter_mut()
                .zip(maps.appearance_at(p))
                .for_each(|(a, v)| *a += w * v);
            direction = direction + maps.direction_at(p).scale(w);
        }
        let mean = mean.scale(1.0 / mass);

        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (p, &w) in s.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let d = pixel_coord(&frame, p) - mean;
            sxx += w * d.x * d.x;
            sxy += w * d.x * d.y;
            syy += w * d.y * d.y;
        }
        let covariance = Mat2::new(sxx / mass, sxy / mass, sxy / mass, syy / mass);

        feature.iter_mut().for_each(|v| *v /= mass);
        features::normalize(&mut feature);
        let direction = direction
            .scale(1.0 / mass)
            .normalized()
            .unwrap_or_else(|| covariance.sym_eigen().axis);

        let existence = (self_weighted / mass).clamp(0.0, 1.0);
        let weight = match sampling.mode {
            SamplingMode::Rounded => {
                if existence >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            SamplingMode::Relaxed { temperature } => gumbel_binary_sample(
                existence,
                temperature,
                derive_seed(sampling.seed, i as u64),
            )?,
        };

        gaussians.push(TextonGaussian {
            weight,
            existence,
            mean,
            covariance,
            direction,
            feature,
            mask_area: Some(mass),
        });
    }
    Ok(GaussianSet::with_gaussians(frame, dim, capacity, gaussians))
}

/// Layout request for [`synth_world`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutSpec {
    pub frame: ImageFrame,
    /// Number of textons.
    pub k: usize,
    pub feature_dim: usize,
    pub capacity: usize,
    /// Randomly offset textons inside their grid cells.
    pub jitter: bool,
    /// Force circular textons.
    pub isotropic: bool,
}

impl LayoutSpec {
    pub fn new(frame: ImageFrame, k: usize, feature_dim: usize) -> Self {
        Self {
            frame,
            k,
            feature_dim,
            capacity: crate::model::DEFAULT_CAPACITY.max(k + 1),
            jitter: true,
            isotropic: false,
        }
    }
}

/// Ground truth plus the inputs that regenerate it.
///
/// Mask 0 of `masks` is the background; mask `i + 1` belongs to texton `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorld {
    pub truth: GaussianSet,
    pub masks: SegmentationStack,
    pub maps: DenseMaps,
}

impl SynthWorld {
    pub const BACKGROUND_MASKS: usize = 1;

    /// Estimate from the world's masks and drop the background Gaussian.
    pub fn estimate_textons(&self, sampling: &Sampling) -> Result<GaussianSet> {
        let mut set = estimate_gaussians(&self.masks, &self.maps, sampling, self.truth.capacity.max(self.masks.len()))?;
        set.gaussians.drain(..Self::BACKGROUND_MASKS);
        set.capacity = self.truth.capacity;
        Ok(set)
    }
}

fn random_feature(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let f: Vec<f64> = (0..dim)
            .map(|_| {
                let v: f64 = StandardNormal.sample(rng);
                v.abs()
            })
            .collect();
        if features::norm(&f) > 1e-3 {
            return features::normalized(f);
        }
    }
}

fn quarter_pixel(v: f64) -> f64 {
    (v * 4.0).round() / 4.0
}

/// Ground-truth Gaussians on a jittered grid with rasterized hard masks.
///
/// Textons occupy the ellipse `M² ≤ 4`, whose uniform fill has second moment
/// equal to the texton covariance; pixels outside every ellipse belong to
/// the background mask. Dense maps are constant per segment, so pooled
/// features and directions equal the ground truth.
pub fn synth_world(spec: &LayoutSpec, seed: u64) -> Result<SynthWorld> {
    let frame = spec.frame;
    if spec.k > spec.capacity {
        return Err(TextonError::CapacityExceeded {
            count: spec.k,
            capacity: spec.capacity,
        });
    }
    if spec.feature_dim == 0 {
        return Err(invalid("feature_dim", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut truth = Vec::with_capacity(spec.k);
    if spec.k > 0 {
        let cols = (spec.k as f64).sqrt().ceil() as usize;
        let rows = spec.k.div_ceil(cols);
        let cell_w = frame.width as f64 / cols as f64;
        let cell_h = frame.height as f64 / rows as f64;
        let cell = cell_w.min(cell_h);
        for i in 0..spec.k {
            let (r, c) = (i / cols, i % cols);
            let mut center = Vec2::new((c as f64 + 0.5) * cell_w - 0.5, (r as f64 + 0.5) * cell_h - 0.5);
            if spec.jitter {
                let jx = rng.random_range(-0.1..=0.1) * cell;
                let jy = rng.random_range(-0.1..=0.1) * cell;
                center = center + Vec2::new(jx, jy);
            }
            let mean = Vec2::new(quarter_pixel(center.x), quarter_pixel(center.y));
            let major_std = rng.random_range(0.12..=0.18) * cell;
            let (minor_std, theta) = if spec.isotropic {
                (major_std, 0.0)
            } else {
                (
                    major_std * rng.random_range(0.6..=1.0),
                    rng.random_range(0.0..std::f64::consts::PI),
                )
            };
            let rot = Mat2::rotation(theta);
            let covariance = Mat2::diag(major_std * major_std, minor_std * minor_std)
                .congruence(&rot)
                .symmetrized();
            truth.push(TextonGaussian {
                weight: 1.0,
                existence: 1.0,
                mean,
                covariance,
                direction: Vec2::new(theta.cos(), theta.sin()),
                feature: random_feature(&mut rng, spec.feature_dim),
                mask_area: Some(0.0),
            });
        }
    }
    let background_feature = random_feature(&mut rng, spec.feature_dim);

    let inverses: Vec<Mat2> = truth
        .iter()
        .map(|g| g.covariance.inverse().unwrap_or(Mat2::IDENTITY))
        .collect();
    let n = frame.pixel_count();
    let mut labels = vec![0usize; n];
    for (p, label) in labels.iter_mut().enumerate() {
        let q = pixel_coord(&frame, p);
        let mut best = 4.0;
        for (i, (g, inv)) in truth.iter().zip(&inverses).enumerate() {
            let d = q - g.mean;
            let m2 = d.dot(inv.mul_vec(d));
            if m2 <= best {
                best = m2;
                *label = i + 1;
            }
        }
    }

    let mut appearance = Vec::with_capacity(n * spec.feature_dim);
    let mut directions = Vec::with_capacity(n * 2);
    for &l in &labels {
        let (f, d) = if l == 0 {
            (&background_feature, Vec2::new(1.0, 0.0))
        } else {
            let g = &mut truth[l - 1];
            g.mask_area = Some(g.area() + 1.0);
            (&g.feature, g.direction)
        };
        appearance.extend_from_slice(f);
        directions.extend_from_slice(&[d.x, d.y]);
    }

    let masks = SegmentationStack::from_labels(frame, &labels, spec.k + SynthWorld::BACKGROUND_MASKS)?;
    let maps = DenseMaps::new(frame, spec.feature_dim, appearance, directions)?;
    Ok(SynthWorld {
        truth: GaussianSet::with_gaussians(frame, spec.feature_dim, spec.capacity, truth),
        masks,
        maps,
    })
}
