//! Canonical JSON texton documents.
//!
//! Fields are written in a fixed order and floats in shortest round-trip
//! form, so `save(load(doc))` reproduces `doc` byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TextonError};
use crate::linalg::{Mat2, Vec2};
use crate::model::{GaussianSet, ImageFrame, TextonGaussian};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianRecord {
    pub delta: f64,
    pub prob: f64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub dir: [f64; 2],
    pub feat: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
}

/// Where a document came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextonDocument {
    pub format_version: u32,
    pub frame: FrameRecord,
    pub n_f: usize,
    pub capacity: usize,
    pub gaussians: Vec<GaussianRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl From<&TextonGaussian> for GaussianRecord {
    fn from(g: &TextonGaussian) -> Self {
        Self {
            delta: g.weight,
            prob: g.existence,
            mean: g.mean.to_array(),
            cov: g.covariance.m,
            dir: g.direction.to_array(),
            feat: g.feature.clone(),
            area: g.mask_area,
        }
    }
}

impl From<&GaussianRecord> for TextonGaussian {
    fn from(r: &GaussianRecord) -> Self {
        Self {
            weight: r.delta,
            existence: r.prob,
            mean: Vec2::new(r.mean[0], r.mean[1]),
            covariance: Mat2::from_rows(r.cov),
            direction: Vec2::new(r.dir[0], r.dir[1]),
            feature: r.feat.clone(),
            mask_area: r.area,
        }
    }
}

impl TextonDocument {
    pub fn from_set(set: &GaussianSet, provenance: Option<Provenance>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            frame: FrameRecord {
                width: set.frame.width,
                height: set.frame.height,
            },
            n_f: set.feature_dim,
            capacity: set.capacity,
            gaussians: set.gaussians.iter().map(GaussianRecord::from).collect(),
            provenance,
        }
    }

    /// Build and validate the set.
    pub fn to_set(&self) -> Result<GaussianSet> {
        if self.format_version != FORMAT_VERSION {
            return Err(TextonError::Malformed(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let frame = ImageFrame::new(self.frame.width, self.frame.height)?;
        let set = GaussianSet::with_gaussians(
            frame,
            self.n_f,
            self.capacity,
            self.gaussians.iter().map(TextonGaussian::from).collect(),
        );
        set.ensure_valid()?;
        Ok(set)
    }

    /// Canonical text: pretty JSON with a trailing newline.
    pub fn to_canonical_string(&self) -> Result<String> {
        let finite = self.gaussians.iter().all(|g| {
            [g.delta, g.prob, g.mean[0], g.mean[1], g.dir[0], g.dir[1]]
                .iter()
                .chain(g.cov.iter().flatten())
                .chain(&g.feat)
                .chain(g.area.iter())
                .all(|v| v.is_finite())
        });
        if !finite {
            return Err(TextonError::Malformed(
                "non-finite values cannot be serialized".into(),
            ));
        }
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| TextonError::Malformed(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| TextonError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

pub fn set_to_string(set: &GaussianSet, provenance: Option<Provenance>) -> Result<String> {
    TextonDocument::from_set(set, provenance).to_canonical_string()
}

pub fn set_from_str(text: &str) -> Result<GaussianSet> {
    TextonDocument::parse(text)?.to_set()
}

pub fn save_set(set: &GaussianSet, path: impl AsRef<Path>) -> Result<()> {
    save_set_with(set, None, path)
}

pub fn save_set_with(
    set: &GaussianSet,
    provenance: Option<Provenance>,
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, set_to_string(set, provenance)?)?;
    Ok(())
}

pub fn load_set(path: impl AsRef<Path>) -> Result<GaussianSet> {
    set_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GaussianSet {
        let g = TextonGaussian {
            covariance: Mat2::new(2.5, 0.1, 0.1, 1.0 / 3.0),
            direction: Vec2::new(0.6, 0.8),
            mask_area: Some(17.0),
            ..TextonGaussian::isotropic(Vec2::new(3.25, 0.1), 1.0, vec![0.0, 1.0])
        };
        GaussianSet::with_gaussians(ImageFrame::new(16, 8).unwrap(), 2, 4, vec![g])
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = set_to_string(&sample(), Some(Provenance { op: "test".into(), seed: Some(3) })).unwrap();
        let doc = TextonDocument::parse(&text).unwrap();
        assert_eq!(doc.to_canonical_string().unwrap(), text);
        assert_eq!(doc.to_set().unwrap(), sample());
    }

    #[test]
    fn empty_set_document() {
        let empty = GaussianSet::new(ImageFrame::new(4, 4).unwrap(), 3, 10);
        let text = set_to_string(&empty, None).unwrap();
        assert!(text.contains("\"gaussians\": []"));
        assert_eq!(set_from_str(&text).unwrap(), empty);
    }

    #[test]
    fn asymmetric_covariance_is_rejected() {
        let text = set_to_string(&sample(), None).unwrap().replacen("0.1,", "0.2,", 1);
        let err = set_from_str(&text).unwrap_err().to_string();
        assert!(err.contains("covariance not symmetric at index 0"), "{err}");
    }

    #[test]
    fn parse_errors_carry_position() {
        match set_from_str("{\n  \"format_version\": 1,\n  \"frame\": 5\n}") {
            Err(TextonError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
