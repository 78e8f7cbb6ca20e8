//! File formats: texton documents, images and binary tensors.

pub mod document;
pub mod image_io;
pub mod tensor;

pub use document::{
    load_set, save_set, save_set_with, set_from_str, set_to_string, Provenance, TextonDocument,
};
pub use image_io::{
    decode_image, decode_png, decode_ppm, encode_image, encode_png, encode_ppm, read_image, write_image,
    ImageFormat,
};
pub use tensor::Tensor;

use crate::error::Result;
use crate::model::{GaussianSet, ImageFrame};
use crate::splatting::{render_set_at, Projection};

/// PNG preview of a set with the default projection for its feature size,
/// at `frame` (the set's own frame when `None`).
pub fn render_png(set: &GaussianSet, frame: Option<ImageFrame>) -> Result<Vec<u8>> {
    let img = render_set_at(set, frame.unwrap_or(set.frame), &Projection::auto(set.feature_dim))?;
    encode_png(&img)
}
