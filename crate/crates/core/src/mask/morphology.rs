//! Binary dilation, erosion and closing with square structuring elements.
//!
//! A square element is separable, so each operator runs as a horizontal
//! then a vertical sliding-window pass.

use super::{BinaryMask, StructuringElement};

/// Value assumed for pixels outside the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Border {
    Background,
    Foreground,
}

#[derive(Clone, Copy)]
enum Op {
    Any,
    All,
}

/// One 1-D pass along rows (`horizontal`) or columns.
fn window_pass(src: &BinaryMask, radius: usize, border: Border, op: Op, horizontal: bool) -> BinaryMask {
    let (w, h) = (src.width() as usize, src.height() as usize);
    let (len, lines) = if horizontal { (w, h) } else { (h, w) };
    let at = |line: usize, i: usize| -> bool {
        if horizontal {
            src.bits()[line * w + i]
        } else {
            src.bits()[i * w + line]
        }
    };
    let outside = matches!(border, Border::Foreground);
    let size = 2 * radius + 1;
    let mut out = vec![false; w * h];
    for line in 0..lines {
        // Running count of set pixels in [i - r, i + r].
        let sample = |j: isize| -> bool {
            if j < 0 || j as usize >= len {
                outside
            } else {
                at(line, j as usize)
            }
        };
        let mut count: usize = (-(radius as isize)..=radius as isize)
            .filter(|&j| sample(j))
            .count();
        for i in 0..len {
            let hit = match op {
                Op::Any => count > 0,
                Op::All => count == size,
            };
            let idx = if horizontal { line * w + i } else { i * w + line };
            out[idx] = hit;
            let leaving = i as isize - radius as isize;
            let entering = i as isize + radius as isize + 1;
            count = count + sample(entering) as usize - sample(leaving) as usize;
        }
    }
    BinaryMask::from_bits(src.width(), src.height(), out).expect("same dimensions")
}

/// Sets a pixel when any pixel under the element is set.
pub fn dilate_with_border(mask: &BinaryMask, se: StructuringElement, border: Border) -> BinaryMask {
    let r = se.radius();
    let rows = window_pass(mask, r, border, Op::Any, true);
    window_pass(&rows, r, border, Op::Any, false)
}

/// Keeps a pixel when every pixel under the element is set.
pub fn erode_with_border(mask: &BinaryMask, se: StructuringElement, border: Border) -> BinaryMask {
    let r = se.radius();
    let rows = window_pass(mask, r, border, Op::All, true);
    window_pass(&rows, r, border, Op::All, false)
}

/// Dilation; out-of-frame pixels count as background.
pub fn dilate(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    dilate_with_border(mask, se, Border::Background)
}

/// Erosion; out-of-frame pixels count as background, so a full frame loses
/// its outer ring.
pub fn erode(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    erode_with_border(mask, se, Border::Background)
}

/// Closing: dilation followed by erosion.
///
/// Both steps run on a canvas padded by the element radius and the result
/// is cropped back, which equals closing on the unbounded plane restricted
/// to the frame. Without the padding the erosion would eat the part of the
/// dilation the frame cut off, and pixels on the image edge would vanish.
pub fn close(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    let r = se.radius() as u32;
    if r == 0 {
        return mask.clone();
    }
    let padded = mask.padded(r);
    let closed = erode(&dilate(&padded, se), se);
    closed.crop(r, r, mask.width(), mask.height())
}
