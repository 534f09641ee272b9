//! Instance-mask cleanup and geometry extraction.
//!
//! Masks are row-major; pixel `(x, y)` lives at index `y * width + x` with
//! the origin in the top-left corner.

mod contour;
mod instances;
mod io;
mod morphology;
mod palette;
mod polygon;

pub use contour::{trace_contours, Contour};
pub use instances::{close_indexed, instance_bboxes, InstanceBoxes};
pub use io::{decode_mask_png, encode_id_png, encode_rgb_png, read_mask_png, MaskIoError};
pub use morphology::{close, dilate, dilate_with_border, erode, erode_with_border, Border};
pub use palette::{palette_render, palette_split, Palette, PaletteError, PaletteSplit, Rgb, BACKGROUND};
pub use polygon::{approx_polygon, point_segment_distance, DEFAULT_EPSILON};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaskError {
    #[error("region is empty")]
    EmptyRegion,
    #[error("buffer of {len} values does not match {width}x{height}")]
    SizeMismatch { width: u32, height: u32, len: usize },
    #[error("structuring element size must be odd and at least 1, got {0}")]
    BadKernel(usize),
}

/// Foreground/background raster.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.width, self.height)?;
        for row in self.bits.chunks(self.width.max(1) as usize) {
            let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self::filled(width, height, false)
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, MaskError> {
        if bits.len() != width as usize * height as usize {
            return Err(MaskError::SizeMismatch {
                width,
                height,
                len: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Builds a mask from rows of `#` (set) and `.` (clear).
    ///
    /// Panics on ragged rows; meant for tests and examples.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len()) as u32;
        let bits = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len() as u32, width, "ragged ascii mask");
                r.chars().map(|c| c == '#')
            })
            .collect();
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Out-of-bounds reads as background.
    #[inline]
    pub fn get_or_clear(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as u64) < self.width as u64
            && (y as u64) < self.height as u64
            && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    /// True when every set pixel of `self` is set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Copy with `pad` background pixels added on every side.
    pub fn padded(&self, pad: u32) -> Self {
        let mut out = Self::new(self.width + 2 * pad, self.height + 2 * pad);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    out.set(x + pad, y + pad, true);
                }
            }
        }
        out
    }

    /// Sub-rectangle starting at `(x0, y0)`.
    pub fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Self {
        let mut out = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                out.set(x, y, self.get(x + x0, y + y0));
            }
        }
        out
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width.max(1) as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }
}

/// Per-pixel instance ids; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexedMask {
    width: u32,
    height: u32,
    ids: Vec<u8>,
}

impl IndexedMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            ids: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_ids(width: u32, height: u32, ids: Vec<u8>) -> Result<Self, MaskError> {
        if ids.len() != width as usize * height as usize {
            return Err(MaskError::SizeMismatch {
                width,
                height,
                len: ids.len(),
            });
        }
        Ok(Self { width, height, ids })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.ids[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, id: u8) {
        self.ids[y as usize * self.width as usize + x as usize] = id;
    }

    /// Sorted distinct non-zero ids.
    pub fn instance_ids(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &id in &self.ids {
            seen[id as usize] = true;
        }
        (1..=255u8).filter(|&i| seen[i as usize]).collect()
    }

    pub fn binary_of(&self, id: u8) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.ids.iter().map(|&v| v == id).collect(),
        }
    }
}

/// Square structuring element of odd side, anchored at its center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuringElement {
    size: usize,
}

impl StructuringElement {
    pub fn square(size: usize) -> Result<Self, MaskError> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(MaskError::BadKernel(size));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Reach from the center to the edge.
    pub fn radius(&self) -> usize {
        self.size / 2
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self { size: 3 }
    }
}

/// Integer pixel rectangle, top-left anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    /// Tightest box around inclusive corners.
    pub fn from_extent(min_x: u32, min_y: u32, max_x: u32, max_y: u32) -> Self {
        Self::new(min_x, min_y, max_x - min_x + 1, max_y - min_y + 1)
    }

    /// Checks the box against a `width` x `height` frame.
    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.w > 0
            && self.h > 0
            && self.x as u64 + self.w as u64 <= width as u64
            && self.y as u64 + self.h as u64 <= height as u64
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = (self.x + self.w).max(other.x + other.w);
        let y1 = (self.y + self.h).max(other.y + other.h);
        BoundingBox::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.x as f64
            && v >= self.y as f64
            && u < (self.x + self.w) as f64
            && v < (self.y + self.h) as f64
    }
}

/// Anything with a tight pixel bounding box.
pub trait Region {
    fn bbox(&self) -> Result<BoundingBox, MaskError>;
}

impl Region for BinaryMask {
    fn bbox(&self) -> Result<BoundingBox, MaskError> {
        bbox_of_mask(self)
    }
}

impl Region for Contour {
    fn bbox(&self) -> Result<BoundingBox, MaskError> {
        bbox_of_contour(self)
    }
}

/// Tightest box around a contour's vertices or a mask's set pixels.
pub fn bbox_of<R: Region + ?Sized>(region: &R) -> Result<BoundingBox, MaskError> {
    region.bbox()
}

/// Tightest box around integer points.
pub fn bbox_of_points(points: &[(u32, u32)]) -> Result<BoundingBox, MaskError> {
    let (&(x0, y0), rest) = points.split_first().ok_or(MaskError::EmptyRegion)?;
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (x0, y0, x0, y0);
    for &(x, y) in rest {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    Ok(BoundingBox::from_extent(min_x, min_y, max_x, max_y))
}

/// Tightest box around a contour's vertices.
pub fn bbox_of_contour(contour: &Contour) -> Result<BoundingBox, MaskError> {
    bbox_of_points(contour.points())
}

/// Tightest box around the set pixels, by direct scan.
pub fn bbox_of_mask(mask: &BinaryMask) -> Result<BoundingBox, MaskError> {
    let mut extent: Option<(u32, u32, u32, u32)> = None;
    for (x, y) in mask.iter_set() {
        extent = Some(match extent {
            None => (x, y, x, y),
            Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
        });
    }
    let (a, b, c, d) = extent.ok_or(MaskError::EmptyRegion)?;
    Ok(BoundingBox::from_extent(a, b, c, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_full_frame() {
        let m = BinaryMask::filled(17, 9, true);
        assert_eq!(bbox_of_mask(&m).unwrap(), BoundingBox::new(0, 0, 17, 9));
    }

    #[test]
    fn bbox_single_pixel() {
        let mut m = BinaryMask::new(10, 10);
        m.set(3, 7, true);
        assert_eq!(bbox_of_mask(&m).unwrap(), BoundingBox::new(3, 7, 1, 1));
        assert_eq!(bbox_of_points(&[(3, 7)]).unwrap(), BoundingBox::new(3, 7, 1, 1));
    }

    #[test]
    fn bbox_empty_is_error() {
        assert_eq!(bbox_of_mask(&BinaryMask::new(4, 4)), Err(MaskError::EmptyRegion));
        assert_eq!(bbox_of_points(&[]), Err(MaskError::EmptyRegion));
    }

    #[test]
    fn kernel_must_be_odd() {
        assert!(StructuringElement::square(3).is_ok());
        assert_eq!(StructuringElement::square(4), Err(MaskError::BadKernel(4)));
        assert_eq!(StructuringElement::square(0), Err(MaskError::BadKernel(0)));
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(BinaryMask::from_bits(3, 3, vec![false; 8]).is_err());
        assert!(IndexedMask::from_ids(3, 3, vec![0; 10]).is_err());
    }

    #[test]
    fn union_and_fit() {
        let a = BoundingBox::new(1, 1, 2, 2);
        let b = BoundingBox::new(5, 0, 1, 4);
        assert_eq!(a.union(&b), BoundingBox::new(1, 0, 5, 4));
        assert!(a.fits(3, 3));
        assert!(!a.fits(2, 3));
    }

    #[test]
    fn instance_ids_sorted() {
        let m = IndexedMask::from_ids(3, 1, vec![4, 0, 2]).unwrap();
        assert_eq!(m.instance_ids(), vec![2, 4]);
        assert_eq!(m.binary_of(4).bits(), &[true, false, false]);
    }
}
