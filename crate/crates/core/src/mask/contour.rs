//! Outer-border following (Suzuki-Abe) with 8-connected foreground.
//!
//! Hole borders are followed too, because the scan would otherwise mistake
//! pixels on a hole's edge for the start of a new outer border, but only
//! outer borders are returned.

use serde::{Deserialize, Serialize};

use super::BinaryMask;

/// Closed pixel path; the last vertex connects back to the first.
///
/// Traced outer borders run counter-clockwise as seen on screen (y down),
/// with consecutive vertices 8-adjacent. A component of one pixel yields a
/// single vertex and a one-pixel-wide line yields a path that doubles back
/// on itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contour {
    points: Vec<(u32, u32)>,
}

impl Contour {
    pub fn new(points: Vec<(u32, u32)>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[(u32, u32)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Twice the signed shoelace area in pixel coordinates. Negative for
    /// paths that run counter-clockwise on screen.
    pub fn signed_area2(&self) -> i64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (x0, y0) = self.points[i];
                let (x1, y1) = self.points[(i + 1) % n];
                x0 as i64 * y1 as i64 - x1 as i64 * y0 as i64
            })
            .sum()
    }
}

/// Neighbor offsets, clockwise on screen starting east.
const DIRS: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

struct Grid {
    stride: usize,
    cells: Vec<i32>,
}

impl Grid {
    fn idx_of(&self, (x, y): (usize, usize)) -> usize {
        y * self.stride + x
    }

    fn at(&self, p: (usize, usize)) -> i32 {
        self.cells[self.idx_of(p)]
    }

    fn put(&mut self, p: (usize, usize), v: i32) {
        let i = self.idx_of(p);
        self.cells[i] = v;
    }
}

fn step(p: (usize, usize), d: usize) -> (usize, usize) {
    let (dx, dy) = DIRS[d];
    ((p.0 as isize + dx) as usize, (p.1 as isize + dy) as usize)
}

fn dir_between(from: (usize, usize), to: (usize, usize)) -> usize {
    let d = (
        to.0 as isize - from.0 as isize,
        to.1 as isize - from.1 as isize,
    );
    DIRS.iter().position(|&o| o == d).expect("8-adjacent pixels")
}

/// Follows one border starting at `start`, entered from background `from`.
fn follow(grid: &mut Grid, start: (usize, usize), from: (usize, usize), nbd: i32) -> Vec<(usize, usize)> {
    let d0 = dir_between(start, from);
    let first = (0..8)
        .map(|k| (d0 + k) % 8)
        .find(|&d| grid.at(step(start, d)) != 0);
    let Some(d1) = first else {
        grid.put(start, -nbd);
        return vec![start];
    };
    let p1 = step(start, d1);
    let mut p2 = p1;
    let mut p3 = start;
    let mut path = Vec::new();
    loop {
        let d2 = dir_between(p3, p2);
        let mut east_is_zero = false;
        let mut p4 = p3;
        for k in 1..=8 {
            let d = (d2 + 8 - k) % 8;
            let q = step(p3, d);
            if grid.at(q) != 0 {
                p4 = q;
                break;
            }
            if d == 0 {
                east_is_zero = true;
            }
        }
        if east_is_zero {
            grid.put(p3, -nbd);
        } else if grid.at(p3) == 1 {
            grid.put(p3, nbd);
        }
        path.push(p3);
        if p4 == start && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    path
}

/// Outer borders of every 8-connected foreground component, in raster
/// order of each component's first pixel.
pub fn trace_contours(mask: &BinaryMask) -> Vec<Contour> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let stride = w + 2;
    let mut grid = Grid {
        stride,
        cells: vec![0; stride * (h + 2)],
    };
    for (x, y) in mask.iter_set() {
        grid.put((x as usize + 1, y as usize + 1), 1);
    }
    let mut nbd = 1;
    let mut out = Vec::new();
    for y in 1..=h {
        for x in 1..=w {
            let here = grid.at((x, y));
            if here == 1 && grid.at((x - 1, y)) == 0 {
                nbd += 1;
                let path = follow(&mut grid, (x, y), (x - 1, y), nbd);
                out.push(Contour::new(
                    path.into_iter()
                        .map(|(px, py)| ((px - 1) as u32, (py - 1) as u32))
                        .collect(),
                ));
            } else if here >= 1 && grid.at((x + 1, y)) == 0 {
                nbd += 1;
                follow(&mut grid, (x, y), (x + 1, y), nbd);
            }
        }
    }
    out
}
