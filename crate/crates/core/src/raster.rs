//! Curve to mask conversion by even-odd scanline fill at pixel centers.

use num_complex::Complex64;

use crate::contour::signed_area;
use crate::error::{FcsnError, Result};
use crate::fourier::{sample_curve, CoefficientVector};
use crate::grid::{row_center, x_to_col};
use crate::mask::BinaryMask;

/// Curve samples used when synthesising a mask from coefficients.
pub const DEFAULT_SAMPLES: usize = 256;

/// Output of [`rasterize`]. `degenerate` marks a zero-area curve, in which
/// case the mask is all background.
#[derive(Debug, Clone, PartialEq)]
pub struct Rasterization {
    pub mask: BinaryMask,
    pub degenerate: bool,
}

/// Fills a closed polygon given in `D` coordinates with the even-odd rule.
///
/// A pixel is foreground when its center is inside. Crossings are found with
/// the half-open rule on edge y-ranges, so shared vertices are counted once.
pub fn fill_polygon(points: &[Complex64], height: usize, width: usize) -> BinaryMask {
    let mut mask = BinaryMask::empty(height, width);
    let n = points.len();
    if n < 3 {
        return mask;
    }
    let mut crossings = Vec::new();
    for r in 0..height {
        let y = row_center(r as f64, height);
        crossings.clear();
        for i in 0..n {
            let (a, b) = (points[i], points[(i + 1) % n]);
            if (a.im <= y) != (b.im <= y) {
                crossings.push(a.re + (y - a.im) * (b.re - a.re) / (b.im - a.im));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            // Columns whose centers satisfy x0 <= x_c < x1.
            let start = x_to_col(pair[0], width).ceil().max(0.0);
            let end = x_to_col(pair[1], width).ceil().min(width as f64);
            let (start, end) = (start as usize, end.max(0.0) as usize);
            for c in start..end.max(start) {
                mask.set(r, c, true);
            }
        }
    }
    mask
}

/// Synthesises the curve at `n_samples` uniform parameters and fills it.
pub fn rasterize(
    coeffs: &CoefficientVector,
    height: usize,
    width: usize,
    n_samples: usize,
) -> Result<Rasterization> {
    if n_samples < 3 {
        return Err(FcsnError::InvalidParameter(format!(
            "n_samples = {n_samples}, need at least 3"
        )));
    }
    if height == 0 || width == 0 {
        return Err(FcsnError::ShapeMismatch(format!(
            "cannot rasterize into {height}x{width}"
        )));
    }
    let points = sample_curve(coeffs, n_samples);
    let area = signed_area(&points);
    if !(area.abs() > 1e-12) {
        return Ok(Rasterization {
            mask: BinaryMask::empty(height, width),
            degenerate: true,
        });
    }
    Ok(Rasterization {
        mask: fill_polygon(&points, height, width),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn circle_pixel_count_matches_area() {
        let z = CoefficientVector::from_harmonics(10, &[(1, c(0.5, 0.0))]).unwrap();
        let r = rasterize(&z, 256, 256, DEFAULT_SAMPLES).unwrap();
        assert!(!r.degenerate);
        let expected = PI * 64.0 * 64.0;
        let got = r.mask.count() as f64;
        assert!((got - expected).abs() / expected < 0.02, "{got} vs {expected}");
    }

    #[test]
    fn curve_outside_frame_is_background() {
        let z = CoefficientVector::from_harmonics(10, &[(0, c(5.0, 0.0)), (1, c(0.5, 0.0))]).unwrap();
        let r = rasterize(&z, 64, 64, 256).unwrap();
        assert!(r.mask.is_empty());
        let z = CoefficientVector::from_harmonics(10, &[(0, c(5.0, 0.0))]).unwrap();
        let r = rasterize(&z, 64, 64, 256).unwrap();
        assert!(r.mask.is_empty());
        assert!(r.degenerate);
    }

    #[test]
    fn orientation_does_not_change_the_fill() {
        let ccw = CoefficientVector::from_harmonics(
            3,
            &[(0, c(0.1, -0.05)), (1, c(0.4, 0.1)), (-1, c(0.05, 0.02)), (2, c(0.03, -0.04)), (-3, c(0.02, 0.01))],
        )
        .unwrap();
        // Reversing the parameter maps z_n to z_{-n}.
        let mut cw = CoefficientVector::zeros(3);
        for (n, z) in ccw.harmonics() {
            cw.set(-n, z);
        }
        let a = rasterize(&ccw, 128, 96, 256).unwrap().mask;
        let b = rasterize(&cw, 128, 96, 256).unwrap().mask;
        assert_eq!(a, b);
    }

    #[test]
    fn square_fill_hits_pixel_centers() {
        // Square covering x, y in [-0.5, 0.5] on an 8x8 grid: centers at
        // -0.375..0.375 are inside, four columns by four rows.
        let sq = [c(-0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5), c(-0.5, 0.5)];
        let m = fill_polygon(&sq, 8, 8);
        assert_eq!(m.count(), 16);
        assert!(m.get(2, 2) && m.get(5, 5) && !m.get(1, 2) && !m.get(6, 5));
    }

    #[test]
    fn rejects_bad_arguments() {
        let z = CoefficientVector::zeros(1);
        assert!(rasterize(&z, 8, 8, 2).is_err());
        assert!(rasterize(&z, 0, 8, 16).is_err());
    }
}
