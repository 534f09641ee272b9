use std::collections::BTreeMap;

use super::{
    bbox_of_contour, close, trace_contours, BinaryMask, BoundingBox, IndexedMask, StructuringElement,
};

/// Per-instance boxes of a cleaned mask.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceBoxes {
    pub boxes: BTreeMap<u8, BoundingBox>,
    /// Ids present in the input that left no pixels after closing.
    pub vanished: Vec<u8>,
}

/// Each instance closed on its own, as a window of the frame.
///
/// Closing by a square never leaves the bounding box of the input, so the
/// window is that box and the result equals closing on the full frame.
fn closed_windows(mask: &IndexedMask, se: StructuringElement) -> Vec<(u8, u32, u32, BinaryMask)> {
    let mut extents: [Option<(u32, u32, u32, u32)>; 256] = [None; 256];
    let w = mask.width();
    for (i, &id) in mask.ids().iter().enumerate() {
        if id == 0 {
            continue;
        }
        let (x, y) = (i as u32 % w, i as u32 / w);
        let e = extents[id as usize].get_or_insert((x, y, x, y));
        e.0 = e.0.min(x);
        e.1 = e.1.min(y);
        e.2 = e.2.max(x);
        e.3 = e.3.max(y);
    }
    extents
        .iter()
        .enumerate()
        .filter_map(|(id, e)| e.map(|e| (id as u8, e)))
        .map(|(id, (x0, y0, x1, y1))| {
            let (ww, wh) = (x1 - x0 + 1, y1 - y0 + 1);
            let mut window = BinaryMask::new(ww, wh);
            for y in 0..wh {
                for x in 0..ww {
                    if mask.get(x0 + x, y0 + y) == id {
                        window.set(x, y, true);
                    }
                }
            }
            (id, x0, y0, close(&window, se))
        })
        .collect()
}

/// Closes each instance separately, traces its outer borders and takes the
/// union box of all of them.
pub fn instance_bboxes(mask: &IndexedMask, se: StructuringElement) -> InstanceBoxes {
    let mut out = InstanceBoxes::default();
    for (id, x0, y0, closed) in closed_windows(mask, se) {
        let bbox = trace_contours(&closed)
            .iter()
            .filter_map(|c| bbox_of_contour(c).ok())
            .reduce(|a, b| a.union(&b));
        match bbox {
            Some(b) => {
                out.boxes.insert(id, BoundingBox::new(b.x + x0, b.y + y0, b.w, b.h));
            }
            None => out.vanished.push(id),
        }
    }
    out
}

/// Mask with every instance closed: labelled pixels keep their id and a
/// background pixel takes the smallest id whose closed mask covers it.
pub fn close_indexed(mask: &IndexedMask, se: StructuringElement) -> IndexedMask {
    let mut out = mask.clone();
    for (id, x0, y0, closed) in closed_windows(mask, se) {
        for (x, y) in closed.iter_set() {
            let (x, y) = (x + x0, y + y0);
            let cur = out.get(x, y);
            if mask.get(x, y) == 0 && (cur == 0 || id < cur) {
                out.set(x, y, id);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_half_instance() {
        let (w, h) = (20, 10);
        let mut m = IndexedMask::new(w, h);
        for y in 0..h {
            for x in 0..w / 2 {
                m.set(x, y, 1);
            }
        }
        let b = instance_bboxes(&m, StructuringElement::default());
        assert_eq!(b.boxes[&1], BoundingBox::new(0, 0, w / 2, h));
        assert!(b.vanished.is_empty());
    }

    #[test]
    fn empty_mask_gives_empty_map() {
        let b = instance_bboxes(&IndexedMask::new(8, 8), StructuringElement::default());
        assert!(b.boxes.is_empty());
    }

    #[test]
    fn split_instance_uses_union_box() {
        let mut m = IndexedMask::new(12, 6);
        m.set(1, 1, 2);
        m.set(10, 4, 2);
        m.set(5, 2, 1);
        let b = instance_bboxes(&m, StructuringElement::default());
        assert_eq!(b.boxes[&2], BoundingBox::new(1, 1, 10, 4));
        assert_eq!(b.boxes[&1], BoundingBox::new(5, 2, 1, 1));
    }

    #[test]
    fn close_indexed_fills_interior_hole() {
        let mut m = IndexedMask::new(7, 7);
        for y in 1..6 {
            for x in 1..6 {
                m.set(x, y, 3);
            }
        }
        let clean = m.clone();
        m.set(3, 3, 0);
        assert_eq!(close_indexed(&m, StructuringElement::default()), clean);
    }
}
