//! The toy regressor: two strided convolutions, then either the F-DSNT head
//! (transposed convolution to one heatmap per coefficient, spatial softmax,
//! scaled soft-argmax) or a fully connected head.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{tanh_backward, tanh_in_place, Conv, Dense, TransposedConv};
use crate::error::{FcsnError, Result};
use crate::fourier::{CoefficientRanges, CoefficientVector};
use crate::grid::{col_center, row_center, Grid};
use crate::heatmap::{softmax_backward, softmax_in_place, Heatmap};
use crate::loss::{item_gradient, LossBreakdown, LossConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Dsnt,
    Fc,
}

impl std::str::FromStr for HeadKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dsnt" => Ok(HeadKind::Dsnt),
            "fc" => Ok(HeadKind::Fc),
            other => Err(format!("unknown head `{other}`, expected dsnt or fc")),
        }
    }
}

/// Layer sizes. Parameter layout in the flat vector follows field order:
/// conv1, conv2, then the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub k: usize,
    pub head: HeadKind,
    pub input_size: usize,
    pub conv_channels: [usize; 2],
    pub heatmap_size: usize,
    pub up_kernel: usize,
    pub fc_hidden: usize,
    /// Feed the pixel-center `x` and `y` maps as two extra input channels.
    pub coord_channels: bool,
}

impl Architecture {
    pub fn new(k: usize, head: HeadKind) -> Self {
        Architecture {
            k,
            head,
            input_size: 32,
            conv_channels: [8, 16],
            heatmap_size: 16,
            up_kernel: 16,
            fc_hidden: 128,
            coord_channels: true,
        }
    }

    pub fn n_coeffs(&self) -> usize {
        2 * self.k + 1
    }

    pub fn input_channels(&self) -> usize {
        if self.coord_channels {
            3
        } else {
            1
        }
    }

    fn conv1(&self) -> Conv {
        Conv {
            in_ch: self.input_channels(),
            out_ch: self.conv_channels[0],
            kernel: 3,
            stride: 2,
            padding: 1,
            in_size: self.input_size,
        }
    }

    fn conv2(&self) -> Conv {
        let c1 = self.conv1();
        Conv {
            in_ch: c1.out_ch,
            out_ch: self.conv_channels[1],
            kernel: 3,
            stride: 2,
            padding: 1,
            in_size: c1.out_size(),
        }
    }

    fn feature_size(&self) -> usize {
        self.conv2().out_size()
    }

    fn up(&self) -> Result<TransposedConv> {
        let n = self.feature_size();
        // Solve (n - 1) * 2 + kernel - 2 * padding = heatmap_size for padding.
        let full = (n - 1) * 2 + self.up_kernel;
        if full < self.heatmap_size || (full - self.heatmap_size) % 2 != 0 {
            return Err(FcsnError::InvalidParameter(format!(
                "kernel {} cannot upsample {n}x{n} to {}x{} with stride 2",
                self.up_kernel, self.heatmap_size, self.heatmap_size
            )));
        }
        Ok(TransposedConv {
            in_ch: self.conv_channels[1],
            out_ch: self.n_coeffs(),
            kernel: self.up_kernel,
            stride: 2,
            padding: (full - self.heatmap_size) / 2,
            in_size: n,
        })
    }

    fn fc1(&self) -> Dense {
        let n = self.feature_size();
        Dense {
            inputs: self.conv_channels[1] * n * n,
            outputs: self.fc_hidden,
        }
    }

    fn fc2(&self) -> Dense {
        Dense {
            inputs: self.fc_hidden,
            outputs: 2 * self.n_coeffs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size < 4 || self.conv_channels.contains(&0) || self.heatmap_size == 0 || self.fc_hidden == 0 {
            return Err(FcsnError::InvalidParameter(format!("invalid architecture {self:?}")));
        }
        if self.head == HeadKind::Dsnt {
            self.up()?;
        }
        Ok(())
    }

    /// Parameter blocks in layout order: `(weights, biases, fan_in, fan_out)`.
    fn blocks(&self) -> Vec<(usize, usize, usize, usize)> {
        let conv = |c: Conv| {
            let (fi, fo) = c.fan();
            (c.param_count() - c.out_ch, c.out_ch, fi, fo)
        };
        let mut out = vec![conv(self.conv1()), conv(self.conv2())];
        match self.head {
            HeadKind::Dsnt => {
                let up = self.up().expect("validated architecture");
                let (fi, fo) = up.fan();
                out.push((up.param_count() - up.out_ch, up.out_ch, fi, fo));
            }
            HeadKind::Fc => {
                for d in [self.fc1(), self.fc2()] {
                    out.push((d.inputs * d.outputs, d.outputs, d.inputs, d.outputs));
                }
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.blocks().iter().map(|b| b.0 + b.1).sum()
    }

    /// Index range of each layer (weights then biases) in the flat
    /// parameter vector.
    pub fn layer_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.blocks()
            .iter()
            .map(|b| {
                let r = start..start + b.0 + b.1;
                start = r.end;
                r
            })
            .collect()
    }
}

/// Output of a forward pass. `heatmaps` is empty for the FC head.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub coeffs: CoefficientVector,
    pub heatmaps: Vec<Heatmap>,
}

/// Intermediate activations kept for the backward pass.
struct Cache {
    input: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    /// FC head hidden layer.
    hidden: Vec<f64>,
    /// DSNT head softmax outputs, channel-major `[n][cells]`.
    probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    arch: Architecture,
    params: Vec<f64>,
    ranges: CoefficientRanges,
    seed: u64,
}

impl ToyModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(arch: Architecture, ranges: CoefficientRanges, seed: u64) -> Result<Self> {
        arch.validate()?;
        if ranges.k() != arch.k {
            return Err(FcsnError::ShapeMismatch(format!(
                "ranges have k = {}, architecture k = {}",
                ranges.k(),
                arch.k
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(arch.param_count());
        for (weights, biases, fan_in, fan_out) in arch.blocks() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..weights).map(|_| rng.random_range(-limit..=limit)));
            params.extend(std::iter::repeat_n(0.0, biases));
        }
        Ok(ToyModel {
            arch,
            params,
            ranges,
            seed,
        })
    }

    pub fn from_parts(arch: Architecture, params: Vec<f64>, ranges: CoefficientRanges, seed: u64) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(FcsnError::ShapeMismatch(format!(
                "{} parameters for an architecture with {}",
                params.len(),
                arch.param_count()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(FcsnError::InvalidParameter("non-finite parameter".into()));
        }
        if ranges.k() != arch.k {
            return Err(FcsnError::ShapeMismatch("ranges do not match k".into()));
        }
        Ok(ToyModel {
            arch,
            params,
            ranges,
            seed,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn ranges(&self) -> &CoefficientRanges {
        &self.ranges
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Zeroes every parameter of the last layer.
    pub fn zero_final_layer(&mut self) {
        let last = self.arch.blocks().last().map(|b| b.0 + b.1).expect("non-empty");
        let n = self.params.len();
        self.params[n - last..].fill(0.0);
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let c1 = self.arch.conv1().param_count();
        let c2 = self.arch.conv2().param_count();
        (c1, c1 + c2, c1 + c2 + if self.arch.head == HeadKind::Fc { self.arch.fc1().param_count() } else { 0 })
    }

    fn check_image(&self, image: &Grid) -> Result<()> {
        let n = self.arch.input_size;
        if image.shape() != (n, n) {
            return Err(FcsnError::ShapeMismatch(format!(
                "image is {:?}, model expects {n}x{n}",
                image.shape()
            )));
        }
        Ok(())
    }

    /// Image plane, then the coordinate planes when enabled.
    fn input_tensor(&self, image: &Grid) -> Vec<f64> {
        let n = self.arch.input_size;
        let mut input = image.as_slice().to_vec();
        if self.arch.coord_channels {
            input.extend((0..n * n).map(|i| col_center((i % n) as f64, n)));
            input.extend((0..n * n).map(|i| row_center((i / n) as f64, n)));
        }
        input
    }

    fn run(&self, image: &Grid) -> Result<(Prediction, Cache)> {
        self.check_image(image)?;
        let arch = &self.arch;
        let (c1, c2) = (arch.conv1(), arch.conv2());
        let (o1, o2, o3) = self.offsets();
        let input = self.input_tensor(image);
        let mut h1 = vec![0.0; c1.out_ch * c1.out_size().pow(2)];
        c1.forward(&self.params[..o1], &input, &mut h1);
        tanh_in_place(&mut h1);
        let mut h2 = vec![0.0; c2.out_ch * c2.out_size().pow(2)];
        c2.forward(&self.params[o1..o2], &h1, &mut h2);
        tanh_in_place(&mut h2);

        let n_coeffs = arch.n_coeffs();
        let scales = self.ranges.as_slice();
        match arch.head {
            HeadKind::Dsnt => {
                let up = arch.up()?;
                let m = up.out_size();
                let cells = m * m;
                let mut logits = vec![0.0; cells * n_coeffs];
                up.forward(&self.params[o2..], &h2, &mut logits);
                let mut probs = vec![vec![0.0; cells]; n_coeffs];
                let mut heatmaps = Vec::with_capacity(n_coeffs);
                let mut coeffs = Vec::with_capacity(n_coeffs);
                for (n, p) in probs.iter_mut().enumerate() {
                    for (cell, v) in p.iter_mut().enumerate() {
                        *v = logits[cell * n_coeffs + n];
                    }
                    softmax_in_place(p);
                    let mut x = 0.0;
                    let mut y = 0.0;
                    for r in 0..m {
                        let yr = row_center(r as f64, m);
                        for c in 0..m {
                            let w = p[r * m + c];
                            x += w * col_center(c as f64, m);
                            y += w * yr;
                        }
                    }
                    coeffs.push(Complex64::new(x, y) * scales[n]);
                    heatmaps.push(Heatmap::new(m, m, p.clone())?);
                }
                let prediction = Prediction {
                    coeffs: CoefficientVector::new(arch.k, coeffs)?,
                    heatmaps,
                };
                Ok((prediction, Cache { input, h1, h2, hidden: Vec::new(), probs }))
            }
            HeadKind::Fc => {
                let (f1, f2) = (arch.fc1(), arch.fc2());
                let mut hidden = vec![0.0; f1.outputs];
                f1.forward(&self.params[o2..o3], &h2, &mut hidden);
                tanh_in_place(&mut hidden);
                let mut out = vec![0.0; f2.outputs];
                f2.forward(&self.params[o3..], &hidden, &mut out);
                let coeffs = (0..n_coeffs)
                    .map(|n| Complex64::new(out[2 * n], out[2 * n + 1]) * scales[n])
                    .collect();
                let prediction = Prediction {
                    coeffs: CoefficientVector::new(arch.k, coeffs)?,
                    heatmaps: Vec::new(),
                };
                Ok((prediction, Cache { input, h1, h2, hidden, probs: Vec::new() }))
            }
        }
    }

    /// Deterministic forward pass. `image` must be `input_size` square.
    pub fn forward(&self, image: &Grid) -> Result<Prediction> {
        Ok(self.run(image)?.0)
    }

    /// Pulls output-side gradients back to parameters (added into
    /// `grad_params`) and optionally to the input pixels.
    fn backprop(
        &self,
        cache: &Cache,
        out: &OutputGradient,
        grad_params: &mut [f64],
        grad_input: Option<&mut [f64]>,
    ) -> Result<()> {
        let arch = &self.arch;
        let (c1, c2) = (arch.conv1(), arch.conv2());
        let (o1, o2, o3) = self.offsets();
        let scales = self.ranges.as_slice();
        let n_coeffs = arch.n_coeffs();
        let mut g_h2 = vec![0.0; cache.h2.len()];
        match arch.head {
            HeadKind::Dsnt => {
                let up = arch.up()?;
                let m = up.out_size();
                let cells = m * m;
                let mut g_logits = vec![0.0; cells * n_coeffs];
                let mut g_probs = vec![0.0; cells];
                let mut g_channel = vec![0.0; cells];
                for n in 0..n_coeffs {
                    // Soft-argmax (scaled) and the Gaussian center (unscaled)
                    // both read the same expectation.
                    let g_mean = out.pred[n] * scales[n] + out.center.get(n).copied().unwrap_or_default();
                    match out.probs.get(n) {
                        Some(direct) => g_probs.copy_from_slice(direct),
                        None => g_probs.fill(0.0),
                    }
                    for r in 0..m {
                        let gy = g_mean.im * row_center(r as f64, m);
                        for c in 0..m {
                            g_probs[r * m + c] += g_mean.re * col_center(c as f64, m) + gy;
                        }
                    }
                    softmax_backward(&cache.probs[n], &g_probs, &mut g_channel);
                    for (cell, &g) in g_channel.iter().enumerate() {
                        g_logits[cell * n_coeffs + n] = g;
                    }
                }
                up.backward(&self.params[o2..], &cache.h2, &g_logits, &mut grad_params[o2..], &mut g_h2);
            }
            HeadKind::Fc => {
                let (f1, f2) = (arch.fc1(), arch.fc2());
                let mut g_out = vec![0.0; f2.outputs];
                for n in 0..n_coeffs {
                    g_out[2 * n] = out.pred[n].re * scales[n];
                    g_out[2 * n + 1] = out.pred[n].im * scales[n];
                }
                let mut g_hidden = vec![0.0; f1.outputs];
                f2.backward(&self.params[o3..], &cache.hidden, &g_out, &mut grad_params[o3..], &mut g_hidden);
                tanh_backward(&cache.hidden, &mut g_hidden);
                f1.backward(&self.params[o2..o3], &cache.h2, &g_hidden, &mut grad_params[o2..o3], &mut g_h2);
            }
        }
        tanh_backward(&cache.h2, &mut g_h2);
        let mut g_h1 = vec![0.0; cache.h1.len()];
        c2.backward(&self.params[o1..o2], &cache.h1, &g_h2, &mut grad_params[o1..o2], Some(&mut g_h1));
        tanh_backward(&cache.h1, &mut g_h1);
        match grad_input {
            Some(g) if self.arch.coord_channels => {
                let mut full = vec![0.0; cache.input.len()];
                c1.backward(&self.params[..o1], &cache.input, &g_h1, &mut grad_params[..o1], Some(&mut full));
                for (dst, src) in g.iter_mut().zip(&full) {
                    *dst += src;
                }
            }
            g => c1.backward(&self.params[..o1], &cache.input, &g_h1, &mut grad_params[..o1], g),
        }
        Ok(())
    }

    /// Loss of one item (as part of a batch of `batch_size`) and its
    /// gradient, accumulated into `grad_params` and optionally `grad_input`.
    pub fn accumulate_gradient(
        &self,
        image: &Grid,
        truth: &CoefficientVector,
        weights: &[f64],
        cfg: &LossConfig,
        batch_size: usize,
        grad_params: &mut [f64],
        grad_input: Option<&mut [f64]>,
    ) -> Result<LossBreakdown> {
        if truth.k() != self.arch.k {
            return Err(FcsnError::ShapeMismatch(format!(
                "target has k = {}, model k = {}",
                truth.k(),
                self.arch.k
            )));
        }
        let (prediction, cache) = self.run(image)?;
        let item = item_gradient(
            &prediction.coeffs,
            truth,
            &prediction.heatmaps,
            weights,
            &self.ranges,
            cfg,
            batch_size,
        )?;
        let out = OutputGradient {
            pred: item.grad_pred,
            probs: item.grad_probs,
            center: item.grad_center,
        };
        self.backprop(&cache, &out, grad_params, grad_input)?;
        Ok(item.loss)
    }

    /// Loss and full parameter gradient for a single item.
    pub fn backward(
        &self,
        image: &Grid,
        truth: &CoefficientVector,
        weights: &[f64],
        cfg: &LossConfig,
    ) -> Result<(LossBreakdown, Vec<f64>)> {
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.accumulate_gradient(image, truth, weights, cfg, 1, &mut grad, None)?;
        Ok((loss, grad))
    }

    /// Loss and gradient w.r.t. both parameters and input pixels.
    pub fn backward_with_input(
        &self,
        image: &Grid,
        truth: &CoefficientVector,
        weights: &[f64],
        cfg: &LossConfig,
    ) -> Result<(LossBreakdown, Vec<f64>, Grid)> {
        let mut grad = vec![0.0; self.params.len()];
        let mut grad_input = vec![0.0; image.as_slice().len()];
        let loss = self.accumulate_gradient(image, truth, weights, cfg, 1, &mut grad, Some(&mut grad_input))?;
        Ok((loss, grad, Grid::from_vec(image.height(), image.width(), grad_input)?))
    }

    /// Loss of one item without gradients.
    pub fn item_loss(&self, image: &Grid, truth: &CoefficientVector, weights: &[f64], cfg: &LossConfig) -> Result<LossBreakdown> {
        let p = self.forward(image)?;
        Ok(item_gradient(&p.coeffs, truth, &p.heatmaps, weights, &self.ranges, cfg, 1)?.loss)
    }

    /// `d output / d pixel` for one real output unit.
    pub fn output_input_gradient(&self, image: &Grid, unit: OutputUnit) -> Result<Grid> {
        let k = self.arch.k as i64;
        if unit.n.abs() > k {
            return Err(FcsnError::InvalidParameter(format!("harmonic {} outside -{k}..={k}", unit.n)));
        }
        let (_, cache) = self.run(image)?;
        let mut pred = vec![Complex64::new(0.0, 0.0); self.arch.n_coeffs()];
        pred[(unit.n + k) as usize] = match unit.axis {
            Axis::Re => Complex64::new(1.0, 0.0),
            Axis::Im => Complex64::new(0.0, 1.0),
        };
        let out = OutputGradient { pred, probs: Vec::new(), center: Vec::new() };
        let mut scratch = vec![0.0; self.params.len()];
        let mut grad_input = vec![0.0; image.as_slice().len()];
        self.backprop(&cache, &out, &mut scratch, Some(&mut grad_input))?;
        Grid::from_vec(image.height(), image.width(), grad_input)
    }
}

/// Gradients arriving at the model outputs.
struct OutputGradient {
    pred: Vec<Complex64>,
    probs: Vec<Vec<f64>>,
    center: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Re,
    Im,
}

/// Selects one real output: the real or imaginary part of `z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputUnit {
    pub n: i64,
    pub axis: Axis,
}
