use super::layers::{Layer, LayerKind, Mode, Param};
use super::{Rng, Tensor};
use crate::error::Result;

/// Rows per chunk when predicting on large inputs.
pub const PREDICT_CHUNK: usize = 128;

/// A shared trunk followed by one or more output heads.
///
/// Classifiers have a single head ending in softmax (or an RBF head);
/// regression models have a mean head and an optional variance head.
#[derive(Debug, Clone)]
pub struct Model {
    pub body: Vec<Layer>,
    pub heads: Vec<Vec<Layer>>,
}

/// Gradient fed into a head during backward.
#[derive(Debug, Clone)]
pub enum HeadGrad {
    /// Gradient w.r.t. the head output.
    Output(Tensor),
    /// Gradient w.r.t. the input of the head's last layer, skipping it
    /// (softmax fused with cross-entropy).
    BeforeLast(Tensor),
}

impl Model {
    pub fn new(body: Vec<Layer>, heads: Vec<Vec<Layer>>) -> Self {
        assert!(!heads.is_empty(), "a model needs at least one head");
        Self { body, heads }
    }

    pub fn sequential(layers: Vec<Layer>) -> Self {
        Self::new(Vec::new(), vec![layers])
    }

    /// Layers in forward order: body first, then each head.
    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.body.iter().chain(self.heads.iter().flatten())
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        self.body.iter_mut().chain(self.heads.iter_mut().flatten())
    }

    pub fn find(&self, kind: LayerKind) -> Option<&Layer> {
        self.layers().find(|l| l.kind() == kind)
    }

    pub fn is_stochastic(&self, mode: Mode) -> bool {
        self.layers().any(|l| l.is_stochastic(mode))
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    /// Stable name of every parameter and buffer, paired with its tensor.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        let groups = std::iter::once(("body".to_string(), &self.body))
            .chain(self.heads.iter().enumerate().map(|(h, l)| (format!("head{h}"), l)));
        for (prefix, layers) in groups {
            for (i, layer) in layers.iter().enumerate() {
                for p in layer.params() {
                    out.push((format!("{prefix}.{i}.{}", p.name), &p.value));
                }
                for b in layer.buffers() {
                    out.push((format!("{prefix}.{i}.{}", b.name), &b.value));
                }
            }
        }
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        let body = std::iter::once(("body".to_string(), &mut self.body));
        let heads = self.heads.iter_mut().enumerate().map(|(h, l)| (format!("head{h}"), l));
        for (prefix, layers) in body.chain(heads) {
            for (i, layer) in layers.iter_mut().enumerate() {
                for (name, t) in layer.tensors_mut() {
                    out.push((format!("{prefix}.{i}.{name}"), t));
                }
            }
        }
        out
    }

    /// Forward pass through body and every head; returns one tensor per head.
    pub fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Vec<Tensor>> {
        let mut x = input.clone();
        for (i, layer) in self.body.iter_mut().enumerate() {
            x = layer.forward(i, &x, mode, rng)?;
        }
        let mut index = self.body.len();
        let mut outs = Vec::with_capacity(self.heads.len());
        for head in &mut self.heads {
            let mut h = x.clone();
            for layer in head.iter_mut() {
                h = layer.forward(index, &h, mode, rng)?;
                index += 1;
            }
            outs.push(h);
        }
        Ok(outs)
    }

    /// Backward pass; fills every parameter's `grad` and returns the input gradient.
    pub fn backward(&mut self, grads: Vec<HeadGrad>) -> Result<Tensor> {
        assert_eq!(grads.len(), self.heads.len(), "one gradient per head");
        let mut starts = Vec::with_capacity(self.heads.len());
        let mut index = self.body.len();
        for head in &self.heads {
            starts.push(index);
            index += head.len();
        }
        let mut trunk_grad: Option<Tensor> = None;
        for ((head, grad), start) in self.heads.iter_mut().zip(grads).zip(starts) {
            let (mut g, skip) = match grad {
                HeadGrad::Output(g) => (g, 0),
                HeadGrad::BeforeLast(g) => (g, 1),
            };
            let keep = head.len().saturating_sub(skip);
            for (j, layer) in head.iter_mut().enumerate().take(keep).rev() {
                g = layer.backward(start + j, &g)?;
            }
            trunk_grad = Some(match trunk_grad {
                None => g,
                Some(mut acc) => {
                    for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += b;
                    }
                    acc
                }
            });
        }
        let mut g = trunk_grad.expect("at least one head");
        for (i, layer) in self.body.iter_mut().enumerate().rev() {
            g = layer.backward(i, &g)?;
        }
        Ok(g)
    }

    /// Chunked forward pass for inference; layer caches are dropped afterwards.
    pub fn predict(&mut self, input: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Vec<Tensor>> {
        let n = input.rows();
        let mut parts: Vec<Vec<Tensor>> = vec![Vec::new(); self.heads.len()];
        let mut start = 0;
        while start < n {
            let end = (start + PREDICT_CHUNK).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let outs = self.forward(&input.select_rows(&idx), mode, rng)?;
            for (p, o) in parts.iter_mut().zip(outs) {
                p.push(o);
            }
            start = end;
        }
        self.clear_cache();
        if n == 0 {
            return Ok(vec![Tensor::zeros(&[0, 0]); self.heads.len()]);
        }
        parts
            .iter()
            .map(|p| Tensor::concat_rows(&p.iter().collect::<Vec<_>>()))
            .collect()
    }

    pub fn clear_cache(&mut self) {
        self.layers_mut().for_each(Layer::clear_cache);
    }
}
