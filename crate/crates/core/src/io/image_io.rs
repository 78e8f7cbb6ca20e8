//! 8-bit RGB image files: PNG and binary PPM (P6).

use std::io::Cursor;
use std::path::Path;

use crate::error::{Result, TextonError};
use crate::image::RgbImage;

const PNG_MAGIC: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Ppm,
}

impl ImageFormat {
    /// Format implied by a file extension (`.png`, `.ppm`).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("png") => Ok(ImageFormat::Png),
            Some("ppm") => Ok(ImageFormat::Ppm),
            _ => Err(TextonError::Malformed(format!(
                "cannot infer image format from {}; use .png or .ppm",
                path.display()
            ))),
        }
    }
}

fn magic_hex(bytes: &[u8]) -> String {
    bytes
        .iter()
        .take(8)
        .map(|b| format!("{b:02X}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Decode PNG or PPM bytes, chosen by magic number.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    if bytes.starts_with(&PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else {
        Err(TextonError::UnsupportedFormat(magic_hex(bytes)))
    }
}

pub fn encode_image(img: &RgbImage, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Png => encode_png(img),
        ImageFormat::Ppm => Ok(encode_ppm(img)),
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    decode_image(&std::fs::read(path)?)
}

pub fn write_image(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(img, ImageFormat::from_path(path)?)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

fn png_error(e: png::DecodingError) -> TextonError {
    match e {
        png::DecodingError::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            TextonError::UnexpectedEof
        }
        other => TextonError::Malformed(format!("png: {other}")),
    }
}

pub fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(png_error)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| TextonError::Malformed("png: image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_error)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let rgb: Vec<u8> = buf[..info.buffer_size()]
        .chunks_exact(info.line_size)
        .flat_map(|line| line[..w * channels].chunks_exact(channels))
        .flat_map(|px| match channels {
            1 | 2 => [px[0], px[0], px[0]],
            _ => [px[0], px[1], px[2]],
        })
        .collect();
    RgbImage::from_rgb8(w, h, &rgb)
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| TextonError::Malformed(format!("png: {e}")))?;
        writer
            .write_image_data(&img.to_rgb8())
            .map_err(|e| TextonError::Malformed(format!("png: {e}")))?;
        writer
            .finish()
            .map_err(|e| TextonError::Malformed(format!("png: {e}")))?;
    }
    Ok(out)
}

/// Header reader for the whitespace- and comment-separated PPM fields.
struct PpmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PpmHeader<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == self.bytes.len() {
            return Err(TextonError::UnexpectedEof);
        }
        if start == self.pos {
            return Err(TextonError::Malformed(format!("ppm: expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| TextonError::Malformed(format!("ppm: {what} out of range")))
    }
}

pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    if !bytes.starts_with(b"P6") {
        return Err(TextonError::UnsupportedFormat(magic_hex(bytes)));
    }
    let mut h = PpmHeader { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if !(1..=255).contains(&maxval) {
        return Err(TextonError::Malformed(format!(
            "ppm: maxval {maxval} unsupported (8-bit only)"
        )));
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        Some(_) => return Err(TextonError::Malformed("ppm: missing separator after maxval".into())),
        None => return Err(TextonError::UnexpectedEof),
    }
    let n = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(3))
        .ok_or_else(|| TextonError::Malformed("ppm: dimensions overflow".into()))?;
    let data = bytes
        .get(h.pos..h.pos + n)
        .ok_or(TextonError::UnexpectedEof)?;
    if maxval == 255 {
        RgbImage::from_rgb8(width, height, data)
    } else {
        RgbImage::from_data(
            width,
            height,
            data.iter().map(|&b| (b as f64 / maxval as f64).min(1.0)).collect(),
        )
    }
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_rgb8());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_pixel_ppm() {
        let img = decode_image(b"P6 1 1 255\n\xFF\xFF\xFF").unwrap();
        assert_eq!(img.pixel(0, 0), [1.0; 3]);
    }

    #[test]
    fn ppm_round_trip() {
        let img = RgbImage::from_fn(5, 3, |x, y| [x as f64 / 4.0, y as f64 / 2.0, 0.5]);
        let bytes = encode_ppm(&img);
        assert_eq!(encode_ppm(&decode_image(&bytes).unwrap()), bytes);
    }

    #[test]
    fn ppm_with_comments() {
        let img = decode_image(b"P6\n# made by hand\n2 1\n255\n\x00\x00\x00\xFF\x00\x00").unwrap();
        assert_eq!(img.pixel(1, 0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn truncated_streams() {
        let bytes = encode_ppm(&RgbImage::new(4, 4));
        let err = decode_image(&bytes[..bytes.len() - 1]).unwrap_err();
        assert_eq!(err.to_string(), "unexpected end of stream");
        assert!(matches!(decode_image(b"P6 4"), Err(TextonError::UnexpectedEof)));
        let png = encode_png(&RgbImage::new(4, 4)).unwrap();
        assert!(decode_image(&png[..png.len() / 2]).is_err());
    }

    #[test]
    fn png_round_trip() {
        let img = RgbImage::from_rgb8(3, 2, &[0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120, 130, 140, 150, 160, 255]).unwrap();
        let back = decode_image(&encode_png(&img).unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn unknown_magic_is_named() {
        let err = decode_image(b"GIF89a").unwrap_err().to_string();
        assert!(err.contains("47 49 46 38 39 61"), "{err}");
    }
}
