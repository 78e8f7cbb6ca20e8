//! Gaussian splatting: opacity, alpha compositing and feature grids.
//!
//! Opacity is `o_i(p) = δ_i · exp(-M_i²(p))` (no factor 1/2 in the
//! exponent). Alphas composite back to front with the last Gaussian in front:
//! `α_i = o_i · ∏_{j>i} (1 - o_j)`. The splatted grid stores
//! `Σ_i α_i · concat(f_i, ν_i)` per pixel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, TextonError};
use crate::image::RgbImage;
use crate::linalg::{Mat2, Vec2};
use crate::model::{apply_affine, AffineTransform2D, GaussianSet, ImageFrame, TextonGaussian};

/// Ridge added to numerically singular covariances before inversion (px²).
pub const COVARIANCE_EPSILON: f64 = 1e-6;
/// Opacity is treated as zero beyond this squared Mahalanobis distance.
pub const DEFAULT_SUPPORT_CUTOFF: f64 = 12.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatOptions {
    /// Squared-Mahalanobis support radius; `None` evaluates every pixel.
    pub cutoff: Option<f64>,
    /// 1 runs single-threaded; 0 uses the global rayon pool.
    pub threads: usize,
}

impl Default for SplatOptions {
    fn default() -> Self {
        Self {
            cutoff: Some(DEFAULT_SUPPORT_CUTOFF),
            threads: 0,
        }
    }
}

impl SplatOptions {
    pub fn single_threaded() -> Self {
        Self {
            threads: 1,
            ..Self::default()
        }
    }

    pub fn exact() -> Self {
        Self {
            cutoff: None,
            ..Self::default()
        }
    }
}

/// The covariance used for evaluation: `U`, or `U + εI` when `U` is
/// numerically singular.
pub fn regularized_covariance(u: &Mat2) -> Mat2 {
    let sym = u.symmetrized();
    if sym.sym_eigen().minor >= COVARIANCE_EPSILON {
        sym
    } else {
        sym + Mat2::scalar(COVARIANCE_EPSILON)
    }
}

fn regularized_inverse(u: &Mat2) -> Mat2 {
    regularized_covariance(u)
        .inverse()
        .unwrap_or(Mat2::scalar(1.0 / COVARIANCE_EPSILON))
}

/// `M²(p) = (p - μ) U⁻¹ (p - μ)ᵀ` using [`regularized_covariance`].
pub fn mahalanobis_sq(g: &TextonGaussian, p: Vec2) -> f64 {
    let d = p - g.mean;
    d.dot(regularized_inverse(&g.covariance).mul_vec(d))
}

/// `δ · exp(-M²(p))`, evaluated without support truncation.
pub fn opacity_at(g: &TextonGaussian, p: Vec2) -> f64 {
    if g.weight == 0.0 {
        return 0.0;
    }
    g.weight * (-mahalanobis_sq(g, p)).exp()
}

struct Prepared {
    mean: Vec2,
    inv: [f64; 3],
    weight: f64,
    x_range: (i64, i64),
    y_range: (i64, i64),
}

fn prepare(set: &GaussianSet, cutoff: Option<f64>) -> Vec<Prepared> {
    let w = set.frame.width as i64;
    let h = set.frame.height as i64;
    set.gaussians
        .iter()
        .map(|g| {
            let inv = regularized_inverse(&g.covariance);
            let (x_range, y_range) = match cutoff {
                Some(c) => {
                    let reg = regularized_covariance(&g.covariance);
                    let rx = (c * reg.m[0][0]).sqrt();
                    let ry = (c * reg.m[1][1]).sqrt();
                    let span = |center: f64, r: f64, max: i64| {
                        if !(center.is_finite() && r.is_finite()) {
                            return (0, max - 1);
                        }
                        let lo = (center - r).ceil().max(0.0);
                        let hi = (center + r).floor().min((max - 1) as f64);
                        (lo as i64, hi as i64)
                    };
                    (span(g.mean.x, rx, w), span(g.mean.y, ry, h))
                }
                None => ((0, w - 1), (0, h - 1)),
            };
            Prepared {
                mean: g.mean,
                inv: [inv.m[0][0], inv.m[0][1] + inv.m[1][0], inv.m[1][1]],
                weight: g.weight,
                x_range,
                y_range,
            }
        })
        .collect()
}

/// Alphas of every Gaussian covering one pixel, in set order.
fn composite_pixel(
    prepared: &[Prepared],
    active: &[usize],
    x: i64,
    y: i64,
    cutoff: Option<f64>,
    out: &mut Vec<(usize, f64)>,
) {
    out.clear();
    let p = Vec2::new(x as f64, y as f64);
    for &i in active {
        let g = &prepared[i];
        if g.weight == 0.0 || x < g.x_range.0 || x > g.x_range.1 {
            continue;
        }
        let d = p - g.mean;
        let m2 = g.inv[0] * d.x * d.x + g.inv[1] * d.x * d.y + g.inv[2] * d.y * d.y;
        if cutoff.is_some_and(|c| m2 > c) {
            continue;
        }
        out.push((i, g.weight * (-m2).exp()));
    }
    let mut transmittance = 1.0;
    for entry in out.iter_mut().rev() {
        let o = entry.1;
        entry.1 = o * transmittance;
        transmittance *= 1.0 - o;
    }
}

fn active_for_row(prepared: &[Prepared], y: i64) -> Vec<usize> {
    prepared
        .iter()
        .enumerate()
        .filter(|(_, g)| g.y_range.0 <= y && y <= g.y_range.1)
        .map(|(i, _)| i)
        .collect()
}

fn for_each_row<F>(rows: &mut [f64], row_len: usize, threads: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if row_len == 0 {
        return;
    }
    if threads == 1 {
        rows.chunks_mut(row_len).enumerate().for_each(|(y, r)| f(y, r));
    } else {
        rows.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(y, r)| f(y, r));
    }
}

/// Per-Gaussian alpha maps plus the `max_i α_i` input map.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaStack {
    pub frame: ImageFrame,
    /// `n` row-major `H·W` maps.
    pub alphas: Vec<Vec<f64>>,
}

impl AlphaStack {
    pub fn alpha(&self, i: usize, x: usize, y: usize) -> f64 {
        self.alphas[i][y * self.frame.width + x]
    }

    /// `F_input(p) = max_i α_i(p)`.
    pub fn input_map(&self) -> Vec<f64> {
        let n = self.frame.pixel_count();
        (0..n)
            .map(|p| self.alphas.iter().map(|a| a[p]).fold(0.0, f64::max))
            .collect()
    }

    pub fn coverage(&self) -> Vec<f64> {
        let n = self.frame.pixel_count();
        (0..n).map(|p| self.alphas.iter().map(|a| a[p]).sum()).collect()
    }
}

pub fn alpha_maps(set: &GaussianSet) -> AlphaStack {
    alpha_maps_with(set, &SplatOptions::default())
}

pub fn alpha_maps_with(set: &GaussianSet, opts: &SplatOptions) -> AlphaStack {
    let frame = set.frame;
    let prepared = prepare(set, opts.cutoff);
    let mut alphas = vec![vec![0.0; frame.pixel_count()]; set.len()];
    let mut buf = Vec::new();
    for y in 0..frame.height {
        let active = active_for_row(&prepared, y as i64);
        if active.is_empty() {
            continue;
        }
        for x in 0..frame.width {
            composite_pixel(&prepared, &active, x as i64, y as i64, opts.cutoff, &mut buf);
            for &(i, a) in &buf {
                alphas[i][y * frame.width + x] = a;
            }
        }
    }
    AlphaStack { frame, alphas }
}

/// `H×W×C` grid, channels interleaved per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub frame: ImageFrame,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureGrid {
    pub fn zeros(frame: ImageFrame, channels: usize) -> Self {
        Self {
            frame,
            channels,
            data: vec![0.0; frame.pixel_count() * channels],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.frame.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }
}

pub fn splat(set: &GaussianSet) -> Result<FeatureGrid> {
    splat_with(set, &SplatOptions::default())
}

/// Rows are independent, so the output does not depend on `opts.threads`.
pub fn splat_with(set: &GaussianSet, opts: &SplatOptions) -> Result<FeatureGrid> {
    let mut grid = FeatureGrid::zeros(set.frame, set.feature_dim + 2);
    splat_fill(set, opts, &mut grid)?;
    Ok(grid)
}

/// Splat into `grid`, reusing its allocation. The grid is reshaped to the
/// set's frame and channel count and cleared first.
pub fn splat_into(set: &GaussianSet, opts: &SplatOptions, grid: &mut FeatureGrid) -> Result<()> {
    grid.frame = set.frame;
    grid.channels = set.feature_dim + 2;
    grid.data.clear();
    grid.data.resize(set.frame.pixel_count() * grid.channels, 0.0);
    splat_fill(set, opts, grid)
}

/// Accumulate into an all-zero grid of the right shape.
fn splat_fill(set: &GaussianSet, opts: &SplatOptions, grid: &mut FeatureGrid) -> Result<()> {
    let frame = set.frame;
    let nf = set.feature_dim;
    let channels = nf + 2;
    let mut payload = Vec::with_capacity(set.len() * channels);
    for (i, g) in set.gaussians.iter().enumerate() {
        if g.feature.len() != nf {
            return Err(TextonError::InvalidSet(vec![format!(
                "feature_dim mismatch at index {i}"
            )]));
        }
        payload.extend_from_slice(&g.feature);
        payload.extend_from_slice(&[g.direction.x, g.direction.y]);
    }
    let prepared = prepare(set, opts.cutoff);
    let row_len = frame.width * channels;
    for_each_row(&mut grid.data, row_len, opts.threads, |y, row| {
        let active = active_for_row(&prepared, y as i64);
        if active.is_empty() {
            return;
        }
        let mut buf = Vec::with_capacity(active.len());
        for (x, out) in row.chunks_exact_mut(channels).enumerate() {
            composite_pixel(&prepared, &active, x as i64, y as i64, opts.cutoff, &mut buf);
            for &(i, a) in &buf {
                let src = &payload[i * channels..(i + 1) * channels];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += a * s;
                }
            }
        }
    });
    Ok(())
}

/// Linear map from feature channels to RGB.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    /// Channels 0, 1, 2 as R, G, B.
    First3,
    /// `C` rows of RGB weights.
    Matrix(Vec<[f64; 3]>),
}

impl Projection {
    /// Nonnegative random weights with unit-norm columns.
    pub fn random(channels: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<[f64; 3]> = (0..channels)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        for k in 0..3 {
            let norm = rows.iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt();
            if norm > 0.0 {
                rows.iter_mut().for_each(|r| r[k] /= norm);
            }
        }
        Projection::Matrix(rows)
    }

    /// `First3` for three-channel features, otherwise a seeded random map.
    pub fn auto(feature_dim: usize) -> Self {
        if feature_dim == 3 {
            Projection::First3
        } else {
            Projection::random(feature_dim + 2, 0)
        }
    }
}

pub fn render_preview(grid: &FeatureGrid, projection: &Projection) -> Result<RgbImage> {
    let c = grid.channels;
    match projection {
        Projection::First3 if c < 3 => {
            return Err(TextonError::DimensionMismatch(format!(
                "first3 projection needs >= 3 channels, grid has {c}"
            )))
        }
        Projection::Matrix(rows) if rows.len() != c => {
            return Err(TextonError::DimensionMismatch(format!(
                "projection has {} rows, grid has {c} channels",
                rows.len()
            )))
        }
        _ => {}
    }
    let frame = grid.frame;
    let mut data = Vec::with_capacity(frame.pixel_count() * 3);
    for px in grid.data.chunks_exact(c) {
        let rgb = match projection {
            Projection::First3 => [px[0], px[1], px[2]],
            Projection::Matrix(rows) => {
                let mut acc = [0.0; 3];
                for (v, r) in px.iter().zip(rows) {
                    acc[0] += v * r[0];
                    acc[1] += v * r[1];
                    acc[2] += v * r[2];
                }
                acc
            }
        };
        data.extend(rgb.iter().map(|v| v.clamp(0.0, 1.0)));
    }
    RgbImage::from_data(frame.width, frame.height, data)
}

/// Splat and project in the set's own frame.
pub fn render_set(set: &GaussianSet, projection: &Projection) -> Result<RgbImage> {
    render_preview(&splat(set)?, projection)
}

/// Map a set to another frame size, scaling pixel-center coordinates.
pub fn resample_set(set: &GaussianSet, frame: ImageFrame) -> Result<GaussianSet> {
    if frame == set.frame {
        return Ok(set.clone());
    }
    let sx = frame.width as f64 / set.frame.width as f64;
    let sy = frame.height as f64 / set.frame.height as f64;
    let t = AffineTransform2D::new(
        Mat2::diag(sx, sy),
        Vec2::new(0.5 * sx - 0.5, 0.5 * sy - 0.5),
    );
    let mut out = apply_affine(set, &t)?;
    out.frame = frame;
    Ok(out)
}

/// Render at an arbitrary output size.
pub fn render_set_at(
    set: &GaussianSet,
    frame: ImageFrame,
    projection: &Projection,
) -> Result<RgbImage> {
    render_set(&resample_set(set, frame)?, projection)
}
