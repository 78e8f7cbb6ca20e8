//! `TXG1` binary tensor container: magic, `u32` rank, `u32` dims, then
//! little-endian `f32` values in row-major order.

use std::path::Path;

use crate::error::{Result, TextonError};
use crate::splatting::FeatureGrid;

pub const TENSOR_MAGIC: &[u8; 4] = b"TXG1";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(TextonError::DimensionMismatch(format!(
                "dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// `[H, W, C]` tensor of a feature grid.
    pub fn from_grid(grid: &FeatureGrid) -> Self {
        Self {
            dims: vec![grid.frame.height, grid.frame.width, grid.channels],
            data: grid.data.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(TENSOR_MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(TextonError::UnexpectedEof);
        }
        if &bytes[..4] != TENSOR_MAGIC {
            return Err(TextonError::Malformed(format!(
                "not a TXG1 tensor (magic bytes: {:02X?})",
                &bytes[..4]
            )));
        }
        let mut pos = 4;
        let next_u32 = |pos: &mut usize| -> Result<u32> {
            let b = bytes.get(*pos..*pos + 4).ok_or(TextonError::UnexpectedEof)?;
            *pos += 4;
            Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
        };
        let rank = next_u32(&mut pos)? as usize;
        let mut dims = Vec::with_capacity(rank.min(16));
        for _ in 0..rank {
            dims.push(next_u32(&mut pos)? as usize);
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TextonError::Malformed("tensor size overflows".into()))?;
        let payload = n
            .checked_mul(4)
            .and_then(|len| bytes.get(pos..pos + len))
            .ok_or(TextonError::UnexpectedEof)?;
        if bytes.len() != pos + payload.len() {
            return Err(TextonError::Malformed("trailing bytes after tensor payload".into()));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = Tensor::new(vec![2, 3], vec![0.0, 1.5, -2.0, 3.25, 4.0, 5.0]).unwrap();
        let bytes = t.to_bytes();
        assert_eq!(&bytes[..4], b"TXG1");
        assert_eq!(bytes.len(), 4 + 4 + 8 + 24);
        assert_eq!(Tensor::from_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn truncated_and_bad_magic() {
        let bytes = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap().to_bytes();
        assert!(matches!(Tensor::from_bytes(&bytes[..bytes.len() - 2]), Err(TextonError::UnexpectedEof)));
        assert!(Tensor::from_bytes(b"TXG2\0\0\0\0").is_err());
    }
}
