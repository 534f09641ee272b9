//! Mask PNG files.
//!
//! Two layouts are accepted: 8-bit RGB with palette colors (what render
//! backends write) and 8-bit grayscale where the value is the instance id.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader, Limits, RgbImage};
use thiserror::Error;

use super::{palette_split, IndexedMask, Palette, PaletteError, PaletteSplit};

#[derive(Debug, Error)]
pub enum MaskIoError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("PNG decode failed: {0}")]
    Decode(#[from] image::ImageError),
    #[error("unsupported mask pixel layout {0:?}; expected 8-bit RGB or 8-bit grayscale")]
    Layout(image::ColorType),
    #[error(transparent)]
    Palette(#[from] PaletteError),
}

/// Largest mask side accepted by the decoder.
const MAX_SIDE: u32 = 16_384;

pub fn encode_rgb_png(image: &RgbImage) -> Vec<u8> {
    let mut buf = Cursor::new(Vec::new());
    image
        .write_to(&mut buf, ImageFormat::Png)
        .expect("in-memory PNG encode");
    buf.into_inner()
}

/// Grayscale PNG with one id per pixel.
pub fn encode_id_png(mask: &IndexedMask) -> Vec<u8> {
    let img = image::GrayImage::from_raw(mask.width(), mask.height(), mask.ids().to_vec())
        .expect("dimensions match");
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .expect("in-memory PNG encode");
    buf.into_inner()
}

/// Decodes a mask PNG in either layout.
pub fn decode_mask_png(bytes: &[u8], palette: &Palette) -> Result<PaletteSplit, MaskIoError> {
    let mut reader = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
    let mut limits = Limits::default();
    limits.max_image_width = Some(MAX_SIDE);
    limits.max_image_height = Some(MAX_SIDE);
    reader.limits(limits);
    match reader.decode()? {
        DynamicImage::ImageRgb8(rgb) => Ok(palette_split(&rgb, palette)?),
        DynamicImage::ImageLuma8(gray) => {
            let (w, h) = gray.dimensions();
            Ok(PaletteSplit {
                mask: IndexedMask::from_ids(w, h, gray.into_raw()).expect("dimensions from image"),
                unknown_pixels: 0,
                unknown_colors: Vec::new(),
            })
        }
        other => Err(MaskIoError::Layout(other.color())),
    }
}

pub fn read_mask_png(path: &Path, palette: &Palette) -> Result<PaletteSplit, MaskIoError> {
    let bytes = std::fs::read(path).map_err(|source| MaskIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_mask_png(&bytes, palette)
}
