//! Forward and reverse-mode kernels for the toy network's layers.
//!
//! Feature maps are channel-major `[C][H][W]`. The transposed convolution
//! writes channel-last `[H][W][C]` so its innermost loop runs over output
//! channels.

/// Square 2D convolution geometry with zero padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_size: usize,
}

impl Conv {
    pub fn out_size(&self) -> usize {
        (self.in_size + 2 * self.padding - self.kernel) / self.stride + 1
    }

    /// Weights `[out][in][ky][kx]` followed by `out` biases.
    pub fn param_count(&self) -> usize {
        self.out_ch * self.in_ch * self.kernel * self.kernel + self.out_ch
    }

    pub fn fan(&self) -> (usize, usize) {
        let k2 = self.kernel * self.kernel;
        (self.in_ch * k2, self.out_ch * k2)
    }

    pub fn forward(&self, params: &[f64], input: &[f64], out: &mut [f64]) {
        let (n, m, k) = (self.in_size, self.out_size(), self.kernel);
        let (weights, bias) = params.split_at(self.out_ch * self.in_ch * k * k);
        for o in 0..self.out_ch {
            let plane = &mut out[o * m * m..(o + 1) * m * m];
            plane.fill(bias[o]);
            for i in 0..self.in_ch {
                let src = &input[i * n * n..(i + 1) * n * n];
                for ky in 0..k {
                    for kx in 0..k {
                        let w = weights[((o * self.in_ch + i) * k + ky) * k + kx];
                        for y in 0..m {
                            let iy = (y * self.stride + ky) as isize - self.padding as isize;
                            if iy < 0 || iy >= n as isize {
                                continue;
                            }
                            let row = &src[iy as usize * n..(iy as usize + 1) * n];
                            for x in 0..m {
                                let ix = (x * self.stride + kx) as isize - self.padding as isize;
                                if ix >= 0 && ix < n as isize {
                                    plane[y * m + x] += w * row[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Accumulates parameter gradients into `grad_params` and, when given,
    /// input gradients into `grad_input`.
    pub fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        grad_out: &[f64],
        grad_params: &mut [f64],
        mut grad_input: Option<&mut [f64]>,
    ) {
        let (n, m, k) = (self.in_size, self.out_size(), self.kernel);
        let n_weights = self.out_ch * self.in_ch * k * k;
        let weights = &params[..n_weights];
        let (grad_w, grad_b) = grad_params.split_at_mut(n_weights);
        for o in 0..self.out_ch {
            let g_plane = &grad_out[o * m * m..(o + 1) * m * m];
            grad_b[o] += g_plane.iter().sum::<f64>();
            for i in 0..self.in_ch {
                let src = &input[i * n * n..(i + 1) * n * n];
                for ky in 0..k {
                    for kx in 0..k {
                        let wi = ((o * self.in_ch + i) * k + ky) * k + kx;
                        let w = weights[wi];
                        let mut acc = 0.0;
                        for y in 0..m {
                            let iy = (y * self.stride + ky) as isize - self.padding as isize;
                            if iy < 0 || iy >= n as isize {
                                continue;
                            }
                            let iy = iy as usize;
                            for x in 0..m {
                                let ix = (x * self.stride + kx) as isize - self.padding as isize;
                                if ix < 0 || ix >= n as isize {
                                    continue;
                                }
                                let g = g_plane[y * m + x];
                                acc += g * src[iy * n + ix as usize];
                                if let Some(gi) = grad_input.as_deref_mut() {
                                    gi[i * n * n + iy * n + ix as usize] += w * g;
                                }
                            }
                        }
                        grad_w[wi] += acc;
                    }
                }
            }
        }
    }
}

/// Square transposed convolution, `out = (in - 1) * stride - 2 * padding + kernel`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransposedConv {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_size: usize,
}

impl TransposedConv {
    pub fn out_size(&self) -> usize {
        (self.in_size - 1) * self.stride + self.kernel - 2 * self.padding
    }

    /// Weights `[in][ky][kx][out]` followed by `out` biases.
    pub fn param_count(&self) -> usize {
        self.in_ch * self.kernel * self.kernel * self.out_ch + self.out_ch
    }

    pub fn fan(&self) -> (usize, usize) {
        let k2 = self.kernel * self.kernel;
        (self.in_ch * k2, self.out_ch * k2)
    }

    /// Valid `(kernel index, output index)` pairs for input position `p`.
    #[inline]
    fn taps(&self, p: usize) -> impl Iterator<Item = (usize, usize)> {
        let base = (p * self.stride) as isize - self.padding as isize;
        let size = self.out_size() as isize;
        (0..self.kernel).filter_map(move |t| {
            let q = base + t as isize;
            (q >= 0 && q < size).then_some((t, q as usize))
        })
    }

    /// `input` is `[in][n][n]`; `out` is channel-last `[M][M][out]`.
    pub fn forward(&self, params: &[f64], input: &[f64], out: &mut [f64]) {
        let (n, m, k, oc) = (self.in_size, self.out_size(), self.kernel, self.out_ch);
        let (weights, bias) = params.split_at(self.in_ch * k * k * oc);
        for cell in out.chunks_exact_mut(oc) {
            cell.copy_from_slice(bias);
        }
        for i in 0..self.in_ch {
            for y in 0..n {
                for x in 0..n {
                    let v = input[(i * n + y) * n + x];
                    if v == 0.0 {
                        continue;
                    }
                    for (ky, oy) in self.taps(y) {
                        for (kx, ox) in self.taps(x) {
                            let w = &weights[((i * k + ky) * k + kx) * oc..][..oc];
                            let dst = &mut out[(oy * m + ox) * oc..][..oc];
                            for (d, &wv) in dst.iter_mut().zip(w) {
                                *d += v * wv;
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        grad_out: &[f64],
        grad_params: &mut [f64],
        grad_input: &mut [f64],
    ) {
        let (n, m, k, oc) = (self.in_size, self.out_size(), self.kernel, self.out_ch);
        let n_weights = self.in_ch * k * k * oc;
        let weights = &params[..n_weights];
        let (grad_w, grad_b) = grad_params.split_at_mut(n_weights);
        for cell in grad_out.chunks_exact(oc) {
            for (b, &g) in grad_b.iter_mut().zip(cell) {
                *b += g;
            }
        }
        for i in 0..self.in_ch {
            for y in 0..n {
                for x in 0..n {
                    let v = input[(i * n + y) * n + x];
                    let mut acc = 0.0;
                    for (ky, oy) in self.taps(y) {
                        for (kx, ox) in self.taps(x) {
                            let off = ((i * k + ky) * k + kx) * oc;
                            let g = &grad_out[(oy * m + ox) * oc..][..oc];
                            let w = &weights[off..off + oc];
                            let gw = &mut grad_w[off..off + oc];
                            for ((gwv, &gv), &wv) in gw.iter_mut().zip(g).zip(w) {
                                *gwv += v * gv;
                                acc += wv * gv;
                            }
                        }
                    }
                    grad_input[(i * n + y) * n + x] += acc;
                }
            }
        }
    }
}

/// Fully connected layer, weights `[out][in]` then biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    pub fn param_count(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }

    pub fn forward(&self, params: &[f64], input: &[f64], out: &mut [f64]) {
        let (weights, bias) = params.split_at(self.inputs * self.outputs);
        for (o, dst) in out.iter_mut().enumerate() {
            let row = &weights[o * self.inputs..(o + 1) * self.inputs];
            *dst = bias[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    pub fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        grad_out: &[f64],
        grad_params: &mut [f64],
        grad_input: &mut [f64],
    ) {
        let n_weights = self.inputs * self.outputs;
        let weights = &params[..n_weights];
        let (grad_w, grad_b) = grad_params.split_at_mut(n_weights);
        for (o, &g) in grad_out.iter().enumerate() {
            grad_b[o] += g;
            if g == 0.0 {
                continue;
            }
            let row = &weights[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut grad_w[o * self.inputs..(o + 1) * self.inputs];
            for ((gw, gi), (&w, &x)) in grow.iter_mut().zip(grad_input.iter_mut()).zip(row.iter().zip(input)) {
                *gw += g * x;
                *gi += g * w;
            }
        }
    }
}

pub fn tanh_in_place(values: &mut [f64]) {
    for v in values {
        *v = v.tanh();
    }
}

/// Turns a gradient w.r.t. `tanh` outputs into one w.r.t. its inputs.
pub fn tanh_backward(outputs: &[f64], grad: &mut [f64]) {
    for (g, &y) in grad.iter_mut().zip(outputs) {
        *g *= 1.0 - y * y;
    }
}
