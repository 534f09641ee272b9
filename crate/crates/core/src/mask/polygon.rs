//! Douglas-Peucker simplification of closed contours.

use super::Contour;

pub const DEFAULT_EPSILON: f64 = 1.0;

/// Distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return (p.0 - a.0).hypot(p.1 - a.1);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    (p.0 - (a.0 + t * dx)).hypot(p.1 - (a.1 + t * dy))
}

fn as_f64(p: (u32, u32)) -> (f64, f64) {
    (p.0 as f64, p.1 as f64)
}

/// Marks the vertices of `pts[lo..=hi]` that survive simplification.
fn simplify_span(pts: &[(u32, u32)], lo: usize, hi: usize, epsilon: f64, keep: &mut [bool]) {
    let mut stack = vec![(lo, hi)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (a, b) = (as_f64(pts[lo]), as_f64(pts[hi % pts.len()]));
        let (far, dist) = (lo + 1..hi)
            .map(|i| (i, point_segment_distance(as_f64(pts[i]), a, b)))
            .fold((lo, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if dist > epsilon {
            keep[far] = true;
            stack.push((lo, far));
            stack.push((far, hi));
        }
    }
}

/// Simplifies a closed contour so every dropped vertex lies within
/// `epsilon` pixels of the kept polygon.
///
/// The path is split at its first vertex and the vertex farthest from it,
/// and each half is simplified independently. Consecutive duplicates are
/// removed first, so `epsilon = 0` drops only exactly collinear vertices.
pub fn approx_polygon(contour: &Contour, epsilon: f64) -> Contour {
    let epsilon = epsilon.max(0.0);
    let mut pts: Vec<(u32, u32)> = contour.points().to_vec();
    pts.dedup();
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() <= 2 {
        return Contour::new(pts);
    }
    let origin = as_f64(pts[0]);
    let split = (1..pts.len())
        .max_by(|&i, &j| {
            let di = (as_f64(pts[i]).0 - origin.0).hypot(as_f64(pts[i]).1 - origin.1);
            let dj = (as_f64(pts[j]).0 - origin.0).hypot(as_f64(pts[j]).1 - origin.1);
            // Ties go to the earliest vertex.
            di.partial_cmp(&dj).unwrap().then(j.cmp(&i))
        })
        .expect("at least three vertices");
    let mut keep = vec![false; pts.len()];
    keep[0] = true;
    keep[split] = true;
    simplify_span(&pts, 0, split, epsilon, &mut keep);
    // Second half wraps back to vertex 0, addressed as index len.
    let mut keep_wrap = keep.clone();
    keep_wrap.push(true);
    simplify_span(&pts, split, pts.len(), epsilon, &mut keep_wrap);
    let kept = pts
        .iter()
        .zip(&keep_wrap)
        .filter(|(_, &k)| k)
        .map(|(&p, _)| p)
        .collect();
    Contour::new(kept)
}
