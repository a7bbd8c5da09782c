//! Dense row-major real grids and the pixel <-> complex-domain mapping.
//!
//! Every raster in the crate (masks, images, heatmaps) shares one convention:
//! cell `(r, c)` of an `H x W` grid has its center at
//! `x = (2c + 1) / W - 1`, `y = (2r + 1) / H - 1`, so the grid tiles the
//! square `[-1, 1]^2` exactly.

use std::io::Write;
use std::path::Path;

use crate::error::{FcsnError, Result};

/// x coordinate of the center of column `c` in a grid of width `width`.
#[inline]
pub fn col_center(c: f64, width: usize) -> f64 {
    (2.0 * c + 1.0) / width as f64 - 1.0
}

/// y coordinate of the center of row `r` in a grid of height `height`.
#[inline]
pub fn row_center(r: f64, height: usize) -> f64 {
    (2.0 * r + 1.0) / height as f64 - 1.0
}

/// Fractional column index whose center maps to `x`.
#[inline]
pub fn x_to_col(x: f64, width: usize) -> f64 {
    ((x + 1.0) * width as f64 - 1.0) / 2.0
}

/// Fractional row index whose center maps to `y`.
#[inline]
pub fn y_to_row(y: f64, height: usize) -> f64 {
    ((y + 1.0) * height as f64 - 1.0) / 2.0
}

/// A real-valued image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Grid {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(FcsnError::ShapeMismatch(format!(
                "grid must be at least 1x1, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(FcsnError::ShapeMismatch(format!(
                "{} values for a {height}x{width} grid",
                data.len()
            )));
        }
        Ok(Grid {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Grid {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.width + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Scales so the largest value becomes 1. An all-zero grid stays zero.
    pub fn max_normalized(&self) -> Grid {
        let max = self.max();
        if max > 0.0 && max.is_finite() {
            self.map(|v| v / max)
        } else {
            self.map(|_| 0.0)
        }
    }

    /// Quantizes `[0, 1]` values to 8 bits.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    /// Reads an 8-bit grayscale PGM or PNG into `[0, 1]`.
    pub fn read(path: &Path) -> Result<Grid> {
        let (height, width, bytes) = read_gray8(path)?;
        Grid::from_vec(
            height,
            width,
            bytes.into_iter().map(|b| b as f64 / 255.0).collect(),
        )
    }

    /// Writes as 8-bit grayscale; values are clamped to `[0, 1]`.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_gray8(path, self.height, self.width, &self.to_u8())
    }
}

pub(crate) fn read_gray8(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = image::ImageReader::open(path)
        .map_err(|e| FcsnError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| FcsnError::io(path, e))?
        .decode()
        .map_err(|e| FcsnError::format(path, e))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok((h as usize, w as usize, img.into_raw()))
}

/// PNG when the extension says so, binary PGM (P5) otherwise.
pub(crate) fn write_gray8(path: &Path, height: usize, width: usize, bytes: &[u8]) -> Result<()> {
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        image::save_buffer_with_format(
            path,
            bytes,
            width as u32,
            height as u32,
            image::ExtendedColorType::L8,
            image::ImageFormat::Png,
        )
        .map_err(|e| FcsnError::format(path, e))
    } else {
        let mut out = Vec::with_capacity(bytes.len() + 32);
        write!(out, "P5\n{width} {height}\n255\n").expect("write to Vec");
        out.extend_from_slice(bytes);
        std::fs::write(path, out).map_err(|e| FcsnError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_centers_round_trip() {
        for n in [1usize, 2, 7, 64, 256] {
            for i in 0..n {
                let x = col_center(i as f64, n);
                assert!((-1.0..=1.0).contains(&x));
                assert_eq!(x_to_col(x, n).round() as usize, i);
                assert!((x_to_col(x, n) - i as f64).abs() < 1e-12);
                assert!((y_to_row(row_center(i as f64, n), n) - i as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn max_normalized_zero_grid_stays_zero() {
        let g = Grid::zeros(3, 4).max_normalized();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Grid::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(Grid::from_vec(0, 2, vec![]).is_err());
    }

    #[test]
    fn pgm_and_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::from_fn(5, 7, |r, c| ((r * 7 + c) as f64 / 34.0).min(1.0));
        for name in ["a.pgm", "a.png"] {
            let path = dir.path().join(name);
            g.write(&path).unwrap();
            let back = Grid::read(&path).unwrap();
            assert_eq!(back.shape(), (5, 7));
            assert_eq!(back.to_u8(), g.to_u8());
        }
    }
}
