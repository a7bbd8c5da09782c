//! Closed boundary curves in the complex domain `D = [-1, 1]^2`.
//!
//! [`trace_boundary`] extracts the outer boundary of the largest 8-connected
//! component of a mask. The boundary is the 0.5 iso-line of the label field
//! sampled at pixel centers (marching squares with the saddle cases resolved
//! in favour of foreground connectivity), so every vertex is the midpoint
//! between a foreground and a background pixel center. Holes are filled
//! before tracing.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{FcsnError, Result};
use crate::grid::{col_center, row_center};
use crate::mask::BinaryMask;

/// Paper default for the number of boundary samples.
pub const DEFAULT_POINTS: usize = 71;

/// A closed, counter-clockwise polygon inside `D`. The last point connects
/// back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<Complex64>,
}

impl Contour {
    /// Validates the contour invariants: at least three points, all inside
    /// `D`, consecutive points distinct (including the closing pair), and
    /// positive signed area.
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        validate_polygon(&points)?;
        if signed_area(&points) <= 0.0 {
            return Err(FcsnError::DegenerateContour(
                "contour is not counter-clockwise".into(),
            ));
        }
        Ok(Contour { points })
    }

    /// Like [`Contour::new`] but reverses a clockwise polygon first, keeping
    /// the first point in place.
    pub fn counter_clockwise(mut points: Vec<Complex64>) -> Result<Self> {
        validate_polygon(&points)?;
        let area = signed_area(&points);
        if area == 0.0 {
            return Err(FcsnError::DegenerateContour("polygon has zero area".into()));
        }
        if area < 0.0 {
            points[1..].reverse();
        }
        Ok(Contour { points })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Complex64> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        perimeter(&self.points)
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.points)
    }
}

fn validate_polygon(points: &[Complex64]) -> Result<()> {
    if points.len() < 3 {
        return Err(FcsnError::DegenerateContour(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.re.abs() <= 1.0 && p.im.abs() <= 1.0))
    {
        return Err(FcsnError::DegenerateContour(format!(
            "point {p} lies outside [-1, 1]^2"
        )));
    }
    let n = points.len();
    if (0..n).any(|i| points[i] == points[(i + 1) % n]) {
        return Err(FcsnError::DegenerateContour(
            "consecutive points coincide".into(),
        ));
    }
    Ok(())
}

/// Shoelace area; positive for counter-clockwise polygons in `(x, y)`.
pub fn signed_area(points: &[Complex64]) -> f64 {
    let n = points.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a.re * b.im - b.re * a.im
        })
        .sum();
    twice / 2.0
}

/// Length of the closed polyline.
pub fn perimeter(points: &[Complex64]) -> f64 {
    let n = points.len();
    (0..n).map(|i| (points[(i + 1) % n] - points[i]).norm()).sum()
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn on_segment(a: Complex64, b: Complex64, p: Complex64) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

/// Closed segment intersection test, including touching and collinear overlap.
pub fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True when no two non-adjacent edges of the closed polygon touch. Quadratic.
pub fn is_simple_polygon(points: &[Complex64]) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (points[j], points[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Copy)]
enum Corner {
    TopLeft,
    TopRight,
    BottomRight,
    BottomLeft,
}

const CORNERS: [Corner; 4] = [
    Corner::TopLeft,
    Corner::TopRight,
    Corner::BottomRight,
    Corner::BottomLeft,
];

/// Traces the outer boundary of the largest 8-connected foreground component.
///
/// Vertices are mapped from fractional pixel indices to `D` with the
/// pixel-center convention of [`crate::grid`]; the result is oriented
/// counter-clockwise and starts at the first boundary crossing met in scan
/// order.
pub fn trace_boundary(mask: &BinaryMask) -> Result<Contour> {
    let component = mask.largest_component()?.fill_holes();
    let (h, w) = component.shape();
    // Lattice of pixel centers padded by one background ring.
    let (lh, lw) = (h + 2, w + 2);
    let fg = |i: usize, j: usize| -> bool {
        i >= 1 && j >= 1 && i <= h && j <= w && component.get(i - 1, j - 1)
    };
    let h_edge = |i: usize, j: usize| 2 * (i * lw + j);
    let v_edge = |i: usize, j: usize| 2 * (i * lw + j) + 1;
    let midpoint = |key: usize| -> (f64, f64) {
        let cell = key / 2;
        let (i, j) = ((cell / lw) as f64, (cell % lw) as f64);
        if key % 2 == 0 {
            (j + 0.5, i)
        } else {
            (j, i + 0.5)
        }
    };

    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut first = None;
    for i in 0..lh - 1 {
        for j in 0..lw - 1 {
            let label = |c: Corner| match c {
                Corner::TopLeft => fg(i, j),
                Corner::TopRight => fg(i, j + 1),
                Corner::BottomRight => fg(i + 1, j + 1),
                Corner::BottomLeft => fg(i + 1, j),
            };
            let pos = |c: Corner| -> (f64, f64) {
                match c {
                    Corner::TopLeft => (j as f64, i as f64),
                    Corner::TopRight => (j as f64 + 1.0, i as f64),
                    Corner::BottomRight => (j as f64 + 1.0, i as f64 + 1.0),
                    Corner::BottomLeft => (j as f64, i as f64 + 1.0),
                }
            };
            let (top, bottom) = (h_edge(i, j), h_edge(i + 1, j));
            let (left, right) = (v_edge(i, j), v_edge(i, j + 1));
            let adjacent = |c: Corner| match c {
                Corner::TopLeft => (top, left),
                Corner::TopRight => (top, right),
                Corner::BottomRight => (right, bottom),
                Corner::BottomLeft => (bottom, left),
            };

            let n_fg = CORNERS.iter().filter(|&&c| label(c)).count();
            // Each entry: (edge, edge, corner the segment cuts off, that corner is fg).
            let mut segments: Vec<(usize, usize, Corner, bool)> = Vec::with_capacity(2);
            match n_fg {
                0 | 4 => {}
                1 | 3 => {
                    let odd_one_out = n_fg == 1;
                    let c = *CORNERS.iter().find(|&&c| label(c) == odd_one_out).unwrap();
                    let (a, b) = adjacent(c);
                    segments.push((a, b, c, odd_one_out));
                }
                _ => {
                    let diagonal = label(Corner::TopLeft) == label(Corner::BottomRight);
                    if diagonal {
                        // Saddle: keep the diagonal foreground pair connected.
                        for c in CORNERS.into_iter().filter(|&c| !label(c)) {
                            let (a, b) = adjacent(c);
                            segments.push((a, b, c, false));
                        }
                    } else if label(Corner::TopLeft) == label(Corner::TopRight) {
                        let c = if label(Corner::TopLeft) {
                            Corner::TopLeft
                        } else {
                            Corner::BottomLeft
                        };
                        segments.push((left, right, c, true));
                    } else {
                        let c = if label(Corner::TopLeft) {
                            Corner::TopLeft
                        } else {
                            Corner::TopRight
                        };
                        segments.push((top, bottom, c, true));
                    }
                }
            }

            for (a, b, corner, corner_fg) in segments {
                // Orient so that foreground lies to the left of travel in
                // (column, row) coordinates.
                let (p, q, f) = (midpoint(a), midpoint(b), pos(corner));
                let cross = (q.0 - p.0) * (f.1 - p.1) - (q.1 - p.1) * (f.0 - p.0);
                let (from, to) = if (cross > 0.0) == corner_fg { (a, b) } else { (b, a) };
                let previous = next.insert(from, to);
                debug_assert!(previous.is_none(), "edge {from} has two successors");
                first.get_or_insert(from);
            }
        }
    }

    let start = first.ok_or(FcsnError::EmptyMask)?;
    let mut points = Vec::new();
    let mut key = start;
    loop {
        let (x, y) = midpoint(key);
        points.push(Complex64::new(col_center(x - 1.0, w), row_center(y - 1.0, h)));
        key = next[&key];
        if key == start {
            break;
        }
    }
    debug_assert_eq!(points.len(), next.len(), "outer boundary is a single loop");
    Contour::counter_clockwise(points)
}

/// Resamples a closed polyline to `n_points` points equally spaced by arc
/// length, starting at `points[0]`.
pub fn resample_points(points: &[Complex64], n_points: usize) -> Result<Vec<Complex64>> {
    if n_points < 3 {
        return Err(FcsnError::InvalidParameter(format!(
            "n_points = {n_points}, need at least 3"
        )));
    }
    let total = perimeter(points);
    if !(total > 0.0) {
        return Err(FcsnError::DegenerateContour("zero perimeter".into()));
    }
    let n = points.len();
    let step = total / n_points as f64;
    let mut out = Vec::with_capacity(n_points);
    let mut seg = 0;
    let mut seg_start = 0.0;
    let mut seg_len = (points[1 % n] - points[0]).norm();
    for m in 0..n_points {
        let target = m as f64 * step;
        while seg + 1 < n && target >= seg_start + seg_len {
            seg_start += seg_len;
            seg += 1;
            seg_len = (points[(seg + 1) % n] - points[seg]).norm();
        }
        let (a, b) = (points[seg], points[(seg + 1) % n]);
        let t = if seg_len > 0.0 {
            ((target - seg_start) / seg_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(a + (b - a) * t);
    }
    Ok(out)
}

/// Arc-length resampling of a contour; orientation and start point are kept.
pub fn resample_closed(contour: &Contour, n_points: usize) -> Result<Contour> {
    let points = resample_points(contour.points(), n_points)?;
    Contour::new(points)
}
