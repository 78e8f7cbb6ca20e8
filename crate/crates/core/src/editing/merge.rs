//! Stitching texton sets of overlapping patches into one set.

use crate::error::{invalid, Result, TextonError};
use crate::linalg::Vec2;
use crate::model::{GaussianSet, ImageFrame, TextonGaussian};
use crate::objectives::hungarian_match;

use super::interpolate::blend_gaussian;

/// Axis-aligned pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Rect {
    fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    fn intersection(&self, o: &Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(o.x0),
            y0: self.y0.max(o.y0),
            x1: self.x1.min(o.x1),
            y1: self.y1.min(o.y1),
        };
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }

    fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// Position of `p` across the band shared by `older` and `newer`:
/// 0 on the side of the older patch, 1 on the side of the newer one.
fn band_position(band: &Rect, older: &Rect, newer: &Rect, p: Vec2) -> f64 {
    let w = band.x1 - band.x0;
    let h = band.y1 - band.y0;
    let (lo, hi, v, forward) = if w <= h {
        (band.x0, band.x1 - 1.0, p.x, newer.center().x >= older.center().x)
    } else {
        (band.y0, band.y1 - 1.0, p.y, newer.center().y >= older.center().y)
    };
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    if forward {
        t
    } else {
        1.0 - t
    }
}

struct Placed {
    gaussian: TextonGaussian,
    patch: usize,
}

/// Merge patch sets placed at integer pixel offsets.
///
/// Gaussians inside an overlap band are paired across patches by center
/// distance (pairs further apart than `overlap` are rejected) and each
/// pair is blended by its position across the band. Unpaired Gaussians in
/// a band keep their parameters with δ faded toward the far side. An
/// `overlap` of 0 disables merging.
pub fn merge_patch_sets(patches: &[(GaussianSet, (i64, i64))], overlap: f64) -> Result<GaussianSet> {
    let Some((first, _)) = patches.first() else {
        return Err(invalid("patches", "at least one patch is required"));
    };
    if !(overlap >= 0.0) || !overlap.is_finite() {
        return Err(invalid("overlap", format!("{overlap} is not >= 0")));
    }
    for (set, _) in patches {
        first.ensure_same_dim(set)?;
    }
    let min_x = patches.iter().map(|(_, o)| o.0).min().unwrap_or(0);
    let min_y = patches.iter().map(|(_, o)| o.1).min().unwrap_or(0);
    let rects: Vec<Rect> = patches
        .iter()
        .map(|(s, o)| {
            let x0 = (o.0 - min_x) as f64;
            let y0 = (o.1 - min_y) as f64;
            Rect {
                x0,
                y0,
                x1: x0 + s.frame.width as f64,
                y1: y0 + s.frame.height as f64,
            }
        })
        .collect();
    let width = rects.iter().map(|r| r.x1).fold(0.0, f64::max) as usize;
    let height = rects.iter().map(|r| r.y1).fold(0.0, f64::max) as usize;
    let frame = ImageFrame::new(width, height)?;

    let mut placed: Vec<Placed> = Vec::new();
    for (k, (set, _)) in patches.iter().enumerate() {
        let rect = rects[k];
        let offset = Vec2::new(rect.x0, rect.y0);
        let incoming: Vec<TextonGaussian> = set
            .gaussians
            .iter()
            .map(|g| TextonGaussian {
                mean: g.mean + offset,
                ..g.clone()
            })
            .collect();
        if overlap == 0.0 || k == 0 {
            placed.extend(incoming.into_iter().map(|gaussian| Placed { gaussian, patch: k }));
            continue;
        }

        // band of an existing Gaussian: its own patch ∩ the new one
        let old_band = |p: &Placed| -> Option<Rect> {
            rects[p.patch]
                .intersection(&rect)
                .filter(|b| b.contains(p.gaussian.mean))
        };
        let new_band = |g: &TextonGaussian| -> Option<(usize, Rect)> {
            (0..k).find_map(|j| {
                rects[j]
                    .intersection(&rect)
                    .filter(|b| b.contains(g.mean))
                    .map(|b| (j, b))
            })
        };
        let old_idx: Vec<usize> = (0..placed.len()).filter(|&i| old_band(&placed[i]).is_some()).collect();
        let new_idx: Vec<usize> = (0..incoming.len()).filter(|&i| new_band(&incoming[i]).is_some()).collect();
        let cost: Vec<Vec<f64>> = old_idx
            .iter()
            .map(|&i| {
                new_idx
                    .iter()
                    .map(|&j| (placed[i].gaussian.mean - incoming[j].mean).norm())
                    .collect()
            })
            .collect();
        let matching = hungarian_match(&cost)?;
        let mut new_taken = vec![false; incoming.len()];
        let mut old_taken = vec![false; placed.len()];
        for (&(r, c), &d) in matching.pairs.iter().zip(&matching.pair_costs) {
            if d > overlap {
                continue;
            }
            let (i, j) = (old_idx[r], new_idx[c]);
            let band = old_band(&placed[i]).expect("filtered above");
            let mid = (placed[i].gaussian.mean + incoming[j].mean).scale(0.5);
            let t = band_position(&band, &rects[placed[i].patch], &rect, mid);
            placed[i].gaussian = blend_gaussian(&placed[i].gaussian, &incoming[j], t);
            old_taken[i] = true;
            new_taken[j] = true;
        }
        for &i in &old_idx {
            if !old_taken[i] {
                let band = old_band(&placed[i]).expect("filtered above");
                let t = band_position(&band, &rects[placed[i].patch], &rect, placed[i].gaussian.mean);
                placed[i].gaussian.weight *= 1.0 - t;
            }
        }
        for (j, mut g) in incoming.into_iter().enumerate() {
            if new_taken[j] {
                continue;
            }
            if let Some((older, band)) = new_band(&g) {
                g.weight *= band_position(&band, &rects[older], &rect, g.mean);
            }
            placed.push(Placed { gaussian: g, patch: k });
        }
    }

    let capacity = patches.iter().map(|(s, _)| s.capacity).sum::<usize>().max(placed.len());
    let gaussians: Vec<TextonGaussian> = placed.into_iter().map(|p| p.gaussian).collect();
    if gaussians.len() > capacity {
        return Err(TextonError::CapacityExceeded {
            count: gaussians.len(),
            capacity,
        });
    }
    Ok(GaussianSet::with_gaussians(frame, first.feature_dim, capacity, gaussians))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(means: &[(f64, f64)]) -> GaussianSet {
        GaussianSet::with_gaussians(
            ImageFrame::new(16, 16).unwrap(),
            1,
            8,
            means
                .iter()
                .map(|&(x, y)| TextonGaussian::isotropic(Vec2::new(x, y), 2.0, vec![1.0]))
                .collect(),
        )
    }

    #[test]
    fn single_patch_is_offset_copy() {
        let p = patch(&[(3.0, 4.0)]);
        let m = merge_patch_sets(&[(p.clone(), (5, 7))], 4.0).unwrap();
        assert_eq!(m.gaussians, p.gaussians);
        assert_eq!(m.frame, p.frame);
    }

    #[test]
    fn shared_overlap_gaussians_merge_once() {
        // overlap band is x in [12, 16) of the first patch
        let a = patch(&[(2.0, 8.0), (13.0, 8.0)]);
        let b = patch(&[(1.0, 8.0), (10.0, 8.0)]);
        let m = merge_patch_sets(&[(a, (0, 0)), (b, (12, 0))], 4.0).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.frame, ImageFrame::new(28, 16).unwrap());
        let merged = &m.gaussians[1];
        assert!((merged.mean - Vec2::new(13.0, 8.0)).norm() < 1e-12);
        assert_eq!(merged.weight, 1.0);
    }

    #[test]
    fn zero_overlap_is_union() {
        let a = patch(&[(2.0, 8.0)]);
        let b = patch(&[(1.0, 8.0)]);
        let m = merge_patch_sets(&[(a, (0, 0)), (b, (16, 0))], 0.0).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.gaussians[1].mean, Vec2::new(17.0, 8.0));
    }

    #[test]
    fn unmatched_band_gaussians_fade() {
        let a = patch(&[(15.0, 2.0)]);
        let b = patch(&[(0.0, 14.0)]);
        let m = merge_patch_sets(&[(a, (0, 0)), (b, (12, 0))], 2.0).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.gaussians[0].weight < 1.0);
        assert_eq!(m.gaussians[1].weight, 0.0);
    }

    #[test]
    fn mismatched_dims() {
        let a = patch(&[]);
        let mut b = patch(&[]);
        b.feature_dim = 2;
        assert!(merge_patch_sets(&[(a, (0, 0)), (b, (8, 0))], 2.0).is_err());
    }
}
