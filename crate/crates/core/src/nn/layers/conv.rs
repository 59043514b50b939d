use super::{LayerImpl, Mode, Param};
use crate::nn::linalg::gemm;
use crate::nn::{init, Rng, Tensor};

/// 3×3 convolution, stride 1, zero "same" padding. Input `[n, c_in, h, w]`,
/// weight `[c_out, c_in, 3, 3]`.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: Param,
    pub bias: Param,
    cache: Option<ConvCache>,
}

#[derive(Debug, Clone)]
struct ConvCache {
    input_shape: Vec<usize>,
    // one im2col matrix [c_in * 9, h * w] per sample, concatenated
    cols: Vec<f64>,
}

impl Conv2d {
    pub fn new(in_channels: usize, out_channels: usize, rng: &mut Rng) -> Self {
        let w = init::glorot_uniform(
            &[out_channels, in_channels, 3, 3],
            in_channels * 9,
            out_channels * 9,
            rng,
        );
        Self::from_weights(w, Tensor::zeros(&[out_channels]))
    }

    pub fn from_weights(weight: Tensor, bias: Tensor) -> Self {
        Self {
            weight: Param::new("weight", weight),
            bias: Param::new("bias", bias),
            cache: None,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape()[0]
    }
}

fn im2col(img: &[f64], c: usize, h: usize, w: usize, cols: &mut [f64]) {
    let hw = h * w;
    for ch in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = (ch * 9 + ky * 3 + kx) * hw;
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    for x in 0..w {
                        let sx = x as isize + kx as isize - 1;
                        cols[row + y * w + x] = if sy < 0 || sy >= h as isize || sx < 0 || sx >= w as isize {
                            0.0
                        } else {
                            img[ch * hw + sy as usize * w + sx as usize]
                        };
                    }
                }
            }
        }
    }
}

fn col2im(cols: &[f64], c: usize, h: usize, w: usize, img: &mut [f64]) {
    let hw = h * w;
    for ch in 0..c {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = (ch * 9 + ky * 3 + kx) * hw;
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for x in 0..w {
                        let sx = x as isize + kx as isize - 1;
                        if sx >= 0 && sx < w as isize {
                            img[ch * hw + sy as usize * w + sx as usize] += cols[row + y * w + x];
                        }
                    }
                }
            }
        }
    }
}

impl LayerImpl for Conv2d {
    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut Rng) -> Result<Tensor, String> {
        let s = input.shape();
        if s.len() != 4 || s[1] != self.in_channels() {
            return Err(format!("[n, {}, h, w]", self.in_channels()));
        }
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        let (oc, hw, k) = (self.out_channels(), h * w, c * 9);
        let mut cols = vec![0.0; n * k * hw];
        let mut out = Tensor::zeros(&[n, oc, h, w]);
        let bias = self.bias.value.data();
        for i in 0..n {
            let col = &mut cols[i * k * hw..(i + 1) * k * hw];
            im2col(input.row(i), c, h, w, col);
            let o = out.row_mut(i);
            for (ch, b) in bias.iter().enumerate() {
                o[ch * hw..(ch + 1) * hw].fill(*b);
            }
            gemm(oc, k, hw, self.weight.value.data(), false, col, false, 1.0, o);
        }
        self.cache = Some(ConvCache {
            input_shape: s.to_vec(),
            cols,
        });
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let cache = self.cache.as_ref()?;
        let s = &cache.input_shape;
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        let (oc, hw, k) = (self.out_channels(), h * w, c * 9);
        self.weight.grad.data_mut().fill(0.0);
        self.bias.grad.data_mut().fill(0.0);
        let mut dx = Tensor::zeros(s);
        let mut dcols = vec![0.0; k * hw];
        for i in 0..n {
            let g = upstream.row(i);
            let col = &cache.cols[i * k * hw..(i + 1) * k * hw];
            gemm(oc, hw, k, g, false, col, true, 1.0, self.weight.grad.data_mut());
            for (ch, gb) in self.bias.grad.data_mut().iter_mut().enumerate() {
                *gb += g[ch * hw..(ch + 1) * hw].iter().sum::<f64>();
            }
            gemm(k, oc, hw, self.weight.value.data(), true, g, false, 0.0, &mut dcols);
            col2im(&dcols, c, h, w, dx.row_mut(i));
        }
        Some(dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}

/// 2×2 max pooling with stride 2; odd trailing rows/columns are dropped.
#[derive(Debug, Clone, Default)]
pub struct MaxPool2d {
    cache: Option<PoolCache>,
}

#[derive(Debug, Clone)]
struct PoolCache {
    input_shape: Vec<usize>,
    argmax: Vec<usize>,
}

impl MaxPool2d {
    pub fn new() -> Self {
        Self::default()
    }
}

impl LayerImpl for MaxPool2d {
    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut Rng) -> Result<Tensor, String> {
        let s = input.shape();
        if s.len() != 4 || s[2] < 2 || s[3] < 2 {
            return Err("[n, c, h >= 2, w >= 2]".into());
        }
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        let (oh, ow) = (h / 2, w / 2);
        let mut out = Tensor::zeros(&[n, c, oh, ow]);
        let mut argmax = vec![0; n * c * oh * ow];
        let x = input.data();
        let o = out.data_mut();
        for plane in 0..n * c {
            let base = plane * h * w;
            for y in 0..oh {
                for xx in 0..ow {
                    let mut best = base + 2 * y * w + 2 * xx;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = base + (2 * y + dy) * w + 2 * xx + dx;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                    let oi = plane * oh * ow + y * ow + xx;
                    o[oi] = x[best];
                    argmax[oi] = best;
                }
            }
        }
        self.cache = Some(PoolCache {
            input_shape: s.to_vec(),
            argmax,
        });
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let cache = self.cache.as_ref()?;
        let mut dx = Tensor::zeros(&cache.input_shape);
        let d = dx.data_mut();
        for (g, &src) in upstream.data().iter().zip(&cache.argmax) {
            d[src] += g;
        }
        Some(dx)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}
