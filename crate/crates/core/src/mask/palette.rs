//! Color-coded instance masks as written by render backends.

use std::collections::BTreeSet;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::IndexedMask;

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [0, 0, 0];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PaletteError {
    #[error("palette color {0:?} appears more than once")]
    Duplicate(Rgb),
    #[error("palette color {0:?} equals the background color")]
    Background(Rgb),
    #[error("palette has {0} colors; at most 255 instance ids fit a mask")]
    TooLong(usize),
}

/// Ordered colors; `colors[i]` encodes instance id `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Palette {
    colors: Vec<Rgb>,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            colors: vec![
                [255, 0, 0],
                [0, 255, 0],
                [0, 0, 255],
                [255, 255, 0],
                [255, 0, 255],
                [0, 255, 255],
                [128, 0, 0],
                [0, 128, 0],
            ],
        }
    }
}

impl Palette {
    pub fn new(colors: Vec<Rgb>) -> Result<Self, PaletteError> {
        let p = Self { colors };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), PaletteError> {
        if self.colors.len() > 255 {
            return Err(PaletteError::TooLong(self.colors.len()));
        }
        let mut seen = BTreeSet::new();
        for &c in &self.colors {
            if c == BACKGROUND {
                return Err(PaletteError::Background(c));
            }
            if !seen.insert(c) {
                return Err(PaletteError::Duplicate(c));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }

    /// Color for an id; background for 0 and for ids past the end.
    pub fn color_of(&self, id: u8) -> Rgb {
        match id {
            0 => BACKGROUND,
            i => self.colors.get(i as usize - 1).copied().unwrap_or(BACKGROUND),
        }
    }

    pub fn id_of(&self, color: Rgb) -> Option<u8> {
        self.colors
            .iter()
            .position(|&c| c == color)
            .map(|i| (i + 1) as u8)
    }
}

/// Result of decoding a color mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaletteSplit {
    pub mask: IndexedMask,
    /// Pixels whose color is neither background nor in the palette.
    pub unknown_pixels: usize,
    /// Distinct unknown colors, sorted.
    pub unknown_colors: Vec<Rgb>,
}

/// Maps exact palette colors to ids; everything else becomes 0.
pub fn palette_split(image: &RgbImage, palette: &Palette) -> Result<PaletteSplit, PaletteError> {
    palette.check()?;
    let (w, h) = image.dimensions();
    let mut unknown_pixels = 0;
    let mut unknown = BTreeSet::new();
    let ids = image
        .pixels()
        .map(|p| {
            let c = p.0;
            match palette.id_of(c) {
                Some(id) => id,
                None => {
                    if c != BACKGROUND {
                        unknown_pixels += 1;
                        unknown.insert(c);
                    }
                    0
                }
            }
        })
        .collect();
    Ok(PaletteSplit {
        mask: IndexedMask::from_ids(w, h, ids).expect("dimensions from image"),
        unknown_pixels,
        unknown_colors: unknown.into_iter().collect(),
    })
}

/// Paints an indexed mask with palette colors.
pub fn palette_render(mask: &IndexedMask, palette: &Palette) -> RgbImage {
    let mut img = RgbImage::new(mask.width(), mask.height());
    for (px, &id) in img.pixels_mut().zip(mask.ids()) {
        px.0 = palette.color_of(id);
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_images() {
        let p = Palette::default();
        let img = RgbImage::from_pixel(4, 3, image::Rgb(p.colors()[0]));
        let split = palette_split(&img, &p).unwrap();
        assert!(split.mask.ids().iter().all(|&i| i == 1));
        let bg = RgbImage::new(4, 3);
        let split = palette_split(&bg, &p).unwrap();
        assert!(split.mask.ids().iter().all(|&i| i == 0));
        assert_eq!(split.unknown_pixels, 0);
    }

    #[test]
    fn unknown_colors_are_reported() {
        let p = Palette::default();
        let mut img = RgbImage::new(2, 2);
        img.put_pixel(1, 1, image::Rgb([1, 2, 3]));
        img.put_pixel(0, 1, image::Rgb([1, 2, 3]));
        let split = palette_split(&img, &p).unwrap();
        assert_eq!(split.unknown_pixels, 2);
        assert_eq!(split.unknown_colors, vec![[1, 2, 3]]);
        assert_eq!(split.mask.instance_ids(), Vec::<u8>::new());
    }

    #[test]
    fn duplicate_palette_rejected() {
        assert_eq!(
            Palette::new(vec![[1, 1, 1], [2, 2, 2], [1, 1, 1]]),
            Err(PaletteError::Duplicate([1, 1, 1]))
        );
        assert_eq!(
            Palette::new(vec![[0, 0, 0]]),
            Err(PaletteError::Background([0, 0, 0]))
        );
    }

    #[test]
    fn render_then_split_is_identity() {
        let p = Palette::default();
        let ids: Vec<u8> = (0..90u32).map(|i| ((i * 7) % 9) as u8).collect();
        let m = IndexedMask::from_ids(10, 9, ids).unwrap();
        let back = palette_split(&palette_render(&m, &p), &p).unwrap();
        assert_eq!(back.mask, m);
        assert_eq!(back.unknown_pixels, 0);
    }
}
