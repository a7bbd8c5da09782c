//! Heatmaps as discrete PDFs over `[-1, 1]^2`, and the F-DSNT read-out.
//!
//! One heatmap encodes one complex coefficient: the real part lives on the
//! x axis (columns) and the imaginary part on the y axis (rows). Cell
//! `(r, c)` sits at its pixel center, see [`crate::grid`].

use std::path::Path;

use num_complex::Complex64;

use crate::error::{FcsnError, Result};
use crate::grid::{col_center, row_center, Grid};

/// Default Gaussian covariance scale (the `sigma` in `sigma * I_2`).
pub const DEFAULT_SIGMA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Heatmap {
    /// Checks non-negativity and unit mass (to 1e-9).
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(FcsnError::ShapeMismatch(format!(
                "{} values for a {height}x{width} heatmap",
                values.len()
            )));
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return Err(FcsnError::InvalidParameter(
                "heatmap values must be non-negative".into(),
            ));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(FcsnError::InvalidParameter(format!(
                "heatmap mass is {total}, expected 1"
            )));
        }
        Ok(Heatmap {
            height,
            width,
            values,
        })
    }

    /// Unit mass on one cell.
    pub fn delta(height: usize, width: usize, r: usize, c: usize) -> Self {
        let mut values = vec![0.0; height * width];
        values[r * width + c] = 1.0;
        Heatmap {
            height,
            width,
            values,
        }
    }

    pub fn uniform(height: usize, width: usize) -> Self {
        let n = height * width;
        Heatmap {
            height,
            width,
            values: vec![1.0 / n as f64; n],
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.width + c]
    }

    pub fn argmax(&self) -> (usize, usize) {
        let i = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (i / self.width, i % self.width)
    }

    /// Cell-center coordinates as complex numbers, row-major.
    pub fn coordinates(&self) -> Vec<Complex64> {
        cell_coordinates(self.height, self.width)
    }

    /// Writes a max-normalised 8-bit image for inspection.
    pub fn write_image(&self, path: &Path) -> Result<()> {
        Grid::from_vec(self.height, self.width, self.values.clone())?
            .max_normalized()
            .write(path)
    }
}

/// `x_c + j y_r` for every cell, row-major.
pub fn cell_coordinates(height: usize, width: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(height * width);
    for r in 0..height {
        let y = row_center(r as f64, height);
        for c in 0..width {
            out.push(Complex64::new(col_center(c as f64, width), y));
        }
    }
    out
}

/// In-place numerically stable softmax over a slice.
pub fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
}

/// Spatial softmax of a logit grid.
pub fn normalize(logits: &Grid) -> Heatmap {
    let mut values = logits.as_slice().to_vec();
    softmax_in_place(&mut values);
    Heatmap {
        height: logits.height(),
        width: logits.width(),
        values,
    }
}

/// Pulls a gradient w.r.t. softmax outputs back to the logits:
/// `dl_i = p_i (dp_i - sum_j p_j dp_j)`.
pub fn softmax_backward(probs: &[f64], grad_probs: &[f64], grad_logits: &mut [f64]) {
    let dot: f64 = probs.iter().zip(grad_probs).map(|(p, g)| p * g).sum();
    for ((o, &p), &g) in grad_logits.iter_mut().zip(probs).zip(grad_probs) {
        *o = p * (g - dot);
    }
}

/// Expected cell coordinate under the heatmap, in the unscaled frame.
pub fn expectation(h: &Heatmap) -> Complex64 {
    let mut x = 0.0;
    let mut y = 0.0;
    for r in 0..h.height {
        let yr = row_center(r as f64, h.height);
        let row = &h.values[r * h.width..(r + 1) * h.width];
        let mut row_mass = 0.0;
        for (c, &p) in row.iter().enumerate() {
            x += p * col_center(c as f64, h.width);
            row_mass += p;
        }
        y += row_mass * yr;
    }
    Complex64::new(x, y)
}

/// Soft-argmax read-out scaled by the per-harmonic constant `s_n`.
pub fn dsnt(h: &Heatmap, scale: f64) -> Complex64 {
    expectation(h) * scale
}

/// Gradient of `Re(g_conj * dsnt)` w.r.t. each cell, i.e. the chain rule for
/// an upstream gradient `(dRe, dIm)` packed as `grad`. Adds into `out`.
pub fn dsnt_backward(height: usize, width: usize, scale: f64, grad: Complex64, out: &mut [f64]) {
    for r in 0..height {
        let gy = grad.im * row_center(r as f64, height);
        for c in 0..width {
            out[r * width + c] += scale * (grad.re * col_center(c as f64, width) + gy);
        }
    }
}

/// Isotropic Gaussian with covariance `sigma * I_2` evaluated at cell
/// centers, centered at `mean / scale`, and renormalised to unit mass.
pub fn gaussian_target(mean: Complex64, sigma: f64, height: usize, width: usize, scale: f64) -> Result<Heatmap> {
    if !(sigma > 0.0) {
        return Err(FcsnError::InvalidParameter(format!("sigma = {sigma}")));
    }
    if !(scale > 0.0) {
        return Err(FcsnError::InvalidParameter(format!("scale = {scale}")));
    }
    if height == 0 || width == 0 {
        return Err(FcsnError::ShapeMismatch("empty heatmap".into()));
    }
    Ok(gaussian_unscaled(mean / scale, sigma, height, width))
}

pub(crate) fn gaussian_unscaled(center: Complex64, sigma: f64, height: usize, width: usize) -> Heatmap {
    // Work with log-densities so far-away centers do not underflow to zero mass.
    let mut values: Vec<f64> = cell_coordinates(height, width)
        .into_iter()
        .map(|p| -(p - center).norm_sqr() / (2.0 * sigma))
        .collect();
    softmax_in_place(&mut values);
    Heatmap {
        height,
        width,
        values,
    }
}

fn check_same(p: &Heatmap, q: &Heatmap) -> Result<()> {
    if p.shape() != q.shape() {
        return Err(FcsnError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            p.shape(),
            q.shape()
        )));
    }
    Ok(())
}

/// `x ln(x / m)` with the `0 ln 0 = 0` convention.
#[inline]
fn xlogx_over(x: f64, m: f64) -> f64 {
    if x > 0.0 {
        x * (x / m).ln()
    } else {
        0.0
    }
}

/// Jensen-Shannon divergence in nats, bounded by `ln 2`.
pub fn js_divergence(p: &Heatmap, q: &Heatmap) -> Result<f64> {
    check_same(p, q)?;
    Ok(js_slices(&p.values, &q.values))
}

pub(crate) fn js_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        total += 0.5 * (xlogx_over(a, m) + xlogx_over(b, m));
    }
    total.max(0.0)
}

/// `d JS / d p_i = ln(p_i / m_i) / 2`. Cells with `p_i = 0` get the one-sided
/// limit clipped to a large negative number.
pub fn js_grad_p(p: &Heatmap, q: &Heatmap) -> Result<Vec<f64>> {
    check_same(p, q)?;
    Ok(p.values
        .iter()
        .zip(&q.values)
        .map(|(&a, &b)| half_log_ratio(a, b))
        .collect())
}

#[inline]
fn half_log_ratio(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        0.5 * (2.0 * a / (a + b)).ln()
    } else if b > 0.0 {
        -1e3
    } else {
        0.0
    }
}

/// JS divergence between `p` and the renormalised Gaussian centered at
/// `center` (unscaled frame), with gradients w.r.t. `p` (holding the center
/// fixed) and w.r.t. the center.
pub struct GaussianJs {
    pub value: f64,
    pub grad_p: Vec<f64>,
    pub grad_center: Complex64,
}

pub fn js_to_gaussian(p: &Heatmap, center: Complex64, sigma: f64) -> GaussianJs {
    let q = gaussian_unscaled(center, sigma, p.height, p.width);
    let coords = p.coordinates();
    let value = js_slices(&p.values, &q.values);
    let grad_p = p
        .values
        .iter()
        .zip(&q.values)
        .map(|(&a, &b)| half_log_ratio(a, b))
        .collect();
    // dq_j/dmu = q_j (x_j - mean_q) / sigma.
    let mean_q: Complex64 = q.values.iter().zip(&coords).map(|(&w, &x)| x * w).sum();
    let mut grad_center = Complex64::new(0.0, 0.0);
    for ((&a, &b), &x) in p.values.iter().zip(&q.values).zip(&coords) {
        if b > 0.0 {
            let dq = half_log_ratio(b, a);
            grad_center += (x - mean_q) * (dq * b / sigma);
        }
    }
    GaussianJs {
        value,
        grad_p,
        grad_center,
    }
}
