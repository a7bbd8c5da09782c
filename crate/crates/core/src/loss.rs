//! Training objective: weighted L1 + squared L2 on complex residuals plus a
//! Jensen-Shannon pull of each heatmap toward an isotropic Gaussian.
//!
//! For a batch of `M` items,
//!
//! ```text
//! total = (1/M) sum_{m,n} [ w_n (|d| + |d|^2) + JS(p_n || N(center_n, sigma I)) ]
//! ```
//!
//! with `d = z_hat - z` and `|.|` the complex modulus. By default the
//! Gaussian is centered at the prediction itself.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FcsnError, Result};
use crate::fourier::{CoefficientRanges, CoefficientVector};
use crate::heatmap::{js_to_gaussian, Heatmap, DEFAULT_SIGMA};

/// Upper bound on the per-harmonic weights.
pub const WEIGHT_CAP: f64 = 10.0;

/// Where the Gaussian regularisation target is centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JsCenter {
    /// The predicted coefficient (self-regularising).
    #[default]
    Prediction,
    /// The ground-truth coefficient.
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub sigma: f64,
    pub epsilon: f64,
    pub js_enabled: bool,
    #[serde(default)]
    pub js_center: JsCenter,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            sigma: DEFAULT_SIGMA,
            epsilon: 1e-8,
            js_enabled: true,
            js_center: JsCenter::Prediction,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.epsilon > 0.0) {
            return Err(FcsnError::InvalidParameter(format!(
                "sigma = {}, epsilon = {} must both be positive",
                self.sigma, self.epsilon
            )));
        }
        Ok(())
    }
}

/// Weighted components of the loss; `total = l1 + l2 + js`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l1: f64,
    pub l2: f64,
    pub js: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn add(&mut self, other: &LossBreakdown) {
        self.l1 += other.l1;
        self.l2 += other.l2;
        self.js += other.js;
        self.total += other.total;
    }

    pub fn scaled(&self, factor: f64) -> LossBreakdown {
        LossBreakdown {
            l1: self.l1 * factor,
            l2: self.l2 * factor,
            js: self.js * factor,
            total: self.total * factor,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.l1.is_finite() && self.l2.is_finite() && self.js.is_finite() && self.total.is_finite()
    }
}

/// `w_n = min(1 + 1 / (max_i |z_n^(i)| + eps), 10)` over the whole set.
pub fn coefficient_weights(training_set: &[CoefficientVector], epsilon: f64) -> Result<Vec<f64>> {
    let first = training_set.first().ok_or(FcsnError::EmptyDataset)?;
    let k = first.k();
    let mut max_mod = vec![0.0f64; 2 * k + 1];
    for item in training_set {
        if item.k() != k {
            return Err(FcsnError::ShapeMismatch(format!(
                "training set mixes k = {k} and k = {}",
                item.k()
            )));
        }
        for (m, z) in max_mod.iter_mut().zip(item.as_slice()) {
            *m = m.max(z.norm());
        }
    }
    Ok(max_mod
        .into_iter()
        .map(|m| (1.0 + 1.0 / (m + epsilon)).min(WEIGHT_CAP))
        .collect())
}

/// Loss contribution of one item together with the gradients needed to
/// back-propagate it.
#[derive(Debug, Clone)]
pub struct ItemGradient {
    /// Already divided by the batch size.
    pub loss: LossBreakdown,
    /// `dL/dRe + j dL/dIm` for each predicted coefficient.
    pub grad_pred: Vec<Complex64>,
    /// `dL/dp` for each heatmap with the Gaussian center held fixed. Empty
    /// when no heatmaps were supplied or JS is disabled.
    pub grad_probs: Vec<Vec<f64>>,
    /// `dL/d center` (unscaled frame) for each heatmap; zero when the
    /// Gaussian is centered on the truth.
    pub grad_center: Vec<Complex64>,
}

fn check_item(
    pred: &CoefficientVector,
    truth: &CoefficientVector,
    heatmaps: &[Heatmap],
    weights: &[f64],
    ranges: &CoefficientRanges,
) -> Result<()> {
    let n = pred.len();
    if truth.len() != n || weights.len() != n || ranges.as_slice().len() != n {
        return Err(FcsnError::ShapeMismatch(format!(
            "prediction has {n} coefficients, truth {}, weights {}, ranges {}",
            truth.len(),
            weights.len(),
            ranges.as_slice().len()
        )));
    }
    if !heatmaps.is_empty() && heatmaps.len() != n {
        return Err(FcsnError::ShapeMismatch(format!(
            "{} heatmaps for {n} coefficients",
            heatmaps.len()
        )));
    }
    Ok(())
}

/// Loss and gradients for a single item of a batch of `batch_size`.
pub fn item_gradient(
    pred: &CoefficientVector,
    truth: &CoefficientVector,
    heatmaps: &[Heatmap],
    weights: &[f64],
    ranges: &CoefficientRanges,
    cfg: &LossConfig,
    batch_size: usize,
) -> Result<ItemGradient> {
    check_item(pred, truth, heatmaps, weights, ranges)?;
    let inv_m = 1.0 / batch_size as f64;
    let mut loss = LossBreakdown::default();
    let mut grad_pred = Vec::with_capacity(pred.len());
    for ((&zp, &zt), &w) in pred.as_slice().iter().zip(truth.as_slice()).zip(weights) {
        let d = zp - zt;
        let modulus = d.norm();
        loss.l1 += w * modulus * inv_m;
        loss.l2 += w * modulus * modulus * inv_m;
        let unit = if modulus > 0.0 { d / modulus } else { Complex64::new(0.0, 0.0) };
        grad_pred.push((unit + d * 2.0) * (w * inv_m));
    }

    let mut grad_probs = Vec::new();
    let mut grad_center = Vec::new();
    if cfg.js_enabled && !heatmaps.is_empty() {
        for (i, h) in heatmaps.iter().enumerate() {
            let s = ranges.as_slice()[i];
            let center = match cfg.js_center {
                JsCenter::Prediction => pred.as_slice()[i] / s,
                JsCenter::Truth => truth.as_slice()[i] / s,
            };
            let js = js_to_gaussian(h, center, cfg.sigma);
            loss.js += js.value * inv_m;
            grad_probs.push(js.grad_p.into_iter().map(|g| g * inv_m).collect());
            grad_center.push(match cfg.js_center {
                JsCenter::Prediction => js.grad_center * inv_m,
                JsCenter::Truth => Complex64::new(0.0, 0.0),
            });
        }
    }
    loss.total = loss.l1 + loss.l2 + loss.js;
    Ok(ItemGradient {
        loss,
        grad_pred,
        grad_probs,
        grad_center,
    })
}

/// Batch loss. `heatmaps[m]` may be empty (e.g. a regression head without
/// heatmaps), in which case item `m` contributes no JS term.
pub fn loss(
    pred: &[CoefficientVector],
    truth: &[CoefficientVector],
    heatmaps: &[Vec<Heatmap>],
    weights: &[f64],
    ranges: &CoefficientRanges,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    if pred.len() != truth.len() || pred.len() != heatmaps.len() || pred.is_empty() {
        return Err(FcsnError::ShapeMismatch(format!(
            "batch sizes differ or are zero: {} predictions, {} targets, {} heatmap sets",
            pred.len(),
            truth.len(),
            heatmaps.len()
        )));
    }
    let m = pred.len();
    let mut total = LossBreakdown::default();
    for ((p, t), h) in pred.iter().zip(truth).zip(heatmaps) {
        total.add(&item_gradient(p, t, h, weights, ranges, cfg, m)?.loss);
    }
    Ok(total)
}
