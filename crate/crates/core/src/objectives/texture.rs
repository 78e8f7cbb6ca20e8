//! Patch-distribution texture distance (sliced 1-Wasserstein).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::image::RgbImage;

/// Projection directions over flattened `patch×patch×3` vectors.
///
/// Each direction is a DC part with entries `1/D` plus a zero-sum contrast
/// part of unit L2 norm, so a uniform intensity step of `s` shifts every
/// projection by exactly `s`.
fn directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dc = 1.0 / dim as f64;
    (0..count)
        .map(|_| {
            let mut c: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mean = c.iter().sum::<f64>() / dim as f64;
            c.iter_mut().for_each(|v| *v -= mean);
            let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                c.iter_mut().for_each(|v| *v /= n);
            }
            c.iter().map(|v| v + dc).collect()
        })
        .collect()
}

/// Disjoint `patch×patch` tiles in row-major tile order.
fn tiles(img: &RgbImage, patch: usize) -> Vec<Vec<f64>> {
    let tx = img.width() / patch;
    let ty = img.height() / patch;
    let mut out = Vec::with_capacity(tx * ty);
    for j in 0..ty {
        for i in 0..tx {
            let mut v = Vec::with_capacity(patch * patch * 3);
            for y in j * patch..(j + 1) * patch {
                for x in i * patch..(i + 1) * patch {
                    v.extend_from_slice(&img.pixel(x, y));
                }
            }
            out.push(v);
        }
    }
    out
}

fn sorted_projections(patches: &[Vec<f64>], dir: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = patches
        .iter()
        .map(|v| v.iter().zip(dir).map(|(a, b)| a * b).sum())
        .collect();
    p.sort_by(f64::total_cmp);
    p
}

/// Sliced 1-Wasserstein distance between the tile distributions of `a` and
/// `b`. Tile counts may differ; sorted projections are then compared at
/// matching quantiles.
pub fn texture_distance(
    a: &RgbImage,
    b: &RgbImage,
    patch: usize,
    projections: usize,
    seed: u64,
) -> Result<f64> {
    if patch == 0 {
        return Err(invalid("patch", "must be >= 1"));
    }
    if projections == 0 {
        return Err(invalid("projections", "must be >= 1"));
    }
    for (name, img) in [("a", a), ("b", b)] {
        if img.width() < patch || img.height() < patch {
            return Err(invalid(
                "patch",
                format!(
                    "image {name} is {}x{}, smaller than patch {patch}",
                    img.width(),
                    img.height()
                ),
            ));
        }
    }
    let pa = tiles(a, patch);
    let pb = tiles(b, patch);
    let k = pa.len().max(pb.len());
    let mut total = 0.0;
    for dir in directions(patch * patch * 3, projections, seed) {
        let sa = sorted_projections(&pa, &dir);
        let sb = sorted_projections(&pb, &dir);
        let mut acc = 0.0;
        for q in 0..k {
            let ia = if sa.len() == k { q } else { (q * sa.len()) / k };
            let ib = if sb.len() == k { q } else { (q * sb.len()) / k };
            acc += (sa[ia] - sb[ib]).abs();
        }
        total += acc / k as f64;
    }
    Ok(total / projections as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(w: usize, h: usize) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let v = ((x * 7 + y * 13) % 11) as f64 / 10.0;
            [v, 1.0 - v, (x % 3) as f64 / 2.0]
        })
    }

    #[test]
    fn identical_images_are_at_zero() {
        let a = pattern(12, 8);
        assert_eq!(texture_distance(&a, &a, 4, 16, 3).unwrap(), 0.0);
    }

    #[test]
    fn black_white_is_unit() {
        let black = RgbImage::filled(2, 2, [0.0; 3]);
        let white = RgbImage::filled(2, 2, [1.0; 3]);
        for seed in 0..5 {
            let d = texture_distance(&black, &white, 2, 8, seed).unwrap();
            assert!((d - 1.0).abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn tile_permutation_is_invisible() {
        let a = pattern(8, 8);
        // swap the four 4×4 tiles diagonally
        let b = RgbImage::from_fn(8, 8, |x, y| a.pixel((x + 4) % 8, (y + 4) % 8));
        let d = texture_distance(&a, &b, 4, 32, 11).unwrap();
        assert!(d.abs() < 1e-12);
        assert!(texture_distance(&a, &b, 3, 32, 11).unwrap() >= 0.0);
    }

    #[test]
    fn rejects_small_images() {
        let a = RgbImage::new(3, 3);
        assert!(texture_distance(&a, &a, 4, 4, 0).is_err());
        assert!(texture_distance(&a, &a, 0, 4, 0).is_err());
    }
}
