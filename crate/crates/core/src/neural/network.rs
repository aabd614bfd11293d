//! Feed-forward networks built from dense and 1-D convolution layers.
//!
//! Activations flow as row-major `batch × dim` buffers. A conv layer sees
//! each sample as `length × channels` (position-major), so the flat state
//! `[re₀, im₀, re₁, im₁, …]` is already a 2-channel sequence.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    /// ReLU uses the subgradient 0 at the kink.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Dense {
        units: usize,
        activation: Activation,
    },
    /// Same-padded (`kernel / 2` zeros each side) strided convolution.
    Conv1d {
        filters: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
    },
}

/// Shape of one sample as `(length, channels)`; dense layers produce length 1.
pub type Shape = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    spec: LayerSpec,
    input: Shape,
    output: Shape,
    weight_offset: usize,
    bias_offset: usize,
}

impl Layer {
    fn in_dim(&self) -> usize {
        self.input.0 * self.input.1
    }

    fn out_dim(&self) -> usize {
        self.output.0 * self.output.1
    }

    fn activation(&self) -> Activation {
        match self.spec {
            LayerSpec::Dense { activation, .. } | LayerSpec::Conv1d { activation, .. } => {
                activation
            }
        }
    }

    /// Rows of the weight matrix (fan-in).
    fn fan_in(&self) -> usize {
        match self.spec {
            LayerSpec::Dense { .. } => self.in_dim(),
            LayerSpec::Conv1d { kernel, .. } => kernel * self.input.1,
        }
    }

    fn fan_out(&self) -> usize {
        self.output.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    input: Shape,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

/// Per-layer inputs (and conv patch matrices) saved by the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    activations: Vec<Vec<f64>>,
    patches: Vec<Option<Vec<f64>>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache holds the input at least")
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// `C = α·op(A)·op(B) + β·C` with row-major buffers.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_transposed: bool,
    b: &[f64],
    b_transposed: bool,
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_transposed { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_transposed { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the callers size `a` as m×k, `b` as k×n and `c` as m×n (or their
    // transposes), matching the strides passed here.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn conv_geometry(input: Shape, kernel: usize, stride: usize) -> usize {
    let pad = kernel / 2;
    (input.0 + 2 * pad - kernel) / stride + 1
}

/// Unrolls every receptive field into a row: `(batch·out_len) × (kernel·channels)`.
fn im2col(x: &[f64], batch: usize, input: Shape, out_len: usize, kernel: usize, stride: usize) -> Vec<f64> {
    let (len, ch) = input;
    let pad = kernel / 2;
    let row = kernel * ch;
    let mut cols = vec![0.0; batch * out_len * row];
    for b in 0..batch {
        let sample = &x[b * len * ch..(b + 1) * len * ch];
        for o in 0..out_len {
            let dst = &mut cols[(b * out_len + o) * row..(b * out_len + o + 1) * row];
            for t in 0..kernel {
                let pos = (o * stride + t) as isize - pad as isize;
                if pos >= 0 && (pos as usize) < len {
                    let p = pos as usize;
                    dst[t * ch..(t + 1) * ch].copy_from_slice(&sample[p * ch..(p + 1) * ch]);
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], batch: usize, input: Shape, out_len: usize, kernel: usize, stride: usize) -> Vec<f64> {
    let (len, ch) = input;
    let pad = kernel / 2;
    let row = kernel * ch;
    let mut x = vec![0.0; batch * len * ch];
    for b in 0..batch {
        for o in 0..out_len {
            let src = &cols[(b * out_len + o) * row..(b * out_len + o + 1) * row];
            for t in 0..kernel {
                let pos = (o * stride + t) as isize - pad as isize;
                if pos >= 0 && (pos as usize) < len {
                    let base = (b * len + pos as usize) * ch;
                    for c in 0..ch {
                        x[base + c] += src[t * ch + c];
                    }
                }
            }
        }
    }
    x
}

impl Network {
    /// Lays out the layers; parameters start at zero.
    pub fn new(input: Shape, specs: &[LayerSpec]) -> Result<Self> {
        if input.0 == 0 || input.1 == 0 {
            return Err(Error::shape("network input must be non-empty"));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut shape = input;
        let mut offset = 0;
        for (i, spec) in specs.iter().enumerate() {
            let output = match *spec {
                LayerSpec::Dense { units, .. } => {
                    if units == 0 {
                        return Err(Error::shape(format!("layer {i} has zero units")));
                    }
                    (1, units)
                }
                LayerSpec::Conv1d {
                    filters,
                    kernel,
                    stride,
                    ..
                } => {
                    if filters == 0 || stride == 0 || kernel % 2 == 0 {
                        return Err(Error::shape(format!(
                            "layer {i}: conv needs filters > 0, stride > 0 and an odd kernel"
                        )));
                    }
                    (conv_geometry(shape, kernel, stride), filters)
                }
            };
            let mut layer = Layer {
                spec: *spec,
                input: shape,
                output,
                weight_offset: offset,
                bias_offset: 0,
            };
            offset += layer.fan_in() * layer.fan_out();
            layer.bias_offset = offset;
            offset += layer.fan_out();
            layers.push(layer);
            shape = output;
        }
        Ok(Self {
            input,
            layers,
            params: vec![0.0; offset],
        })
    }

    /// Uniform fan-in initialization (`√(6/fan_in)` before ReLU, `√(3/fan_in)`
    /// otherwise); biases zero.
    pub fn init<R: Rng + ?Sized>(input: Shape, specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        let mut net = Self::new(input, specs)?;
        for layer in &net.layers {
            let gain = if layer.activation() == Activation::Relu { 6.0 } else { 3.0 };
            let limit = (gain / layer.fan_in() as f64).sqrt();
            let n = layer.fan_in() * layer.fan_out();
            for w in &mut net.params[layer.weight_offset..layer.weight_offset + n] {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    /// Multiplies the last layer's weights by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        if let Some(layer) = self.layers.last() {
            let n = layer.fan_in() * layer.fan_out();
            for w in &mut self.params[layer.weight_offset..layer.weight_offset + n] {
                *w *= factor;
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input.0 * self.input.1
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim(), Layer::out_dim)
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::shape(format!(
                "network has {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Layer specs in order.
    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    /// Weight matrix of layer `i` as a `fan_in × fan_out` row-major slice.
    pub fn weights(&self, i: usize) -> &[f64] {
        let l = &self.layers[i];
        &self.params[l.weight_offset..l.weight_offset + l.fan_in() * l.fan_out()]
    }

    pub fn bias(&self, i: usize) -> &[f64] {
        let l = &self.layers[i];
        &self.params[l.bias_offset..l.bias_offset + l.fan_out()]
    }

    pub fn forward(&self, input: &[f64], batch: usize) -> Result<ForwardCache> {
        if input.len() != batch * self.input_dim() {
            return Err(Error::shape(format!(
                "expected {batch}×{} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut patches = Vec::with_capacity(self.layers.len());
        activations.push(input.to_vec());
        for layer in &self.layers {
            let x = activations.last().unwrap();
            let w = &self.params[layer.weight_offset..layer.bias_offset];
            let b = &self.params[layer.bias_offset..layer.bias_offset + layer.fan_out()];
            let rows = batch * layer.output.0;
            let mut y = vec![0.0; rows * layer.fan_out()];
            for r in y.chunks_mut(layer.fan_out()) {
                r.copy_from_slice(b);
            }
            match layer.spec {
                LayerSpec::Dense { .. } => {
                    gemm(batch, layer.fan_in(), layer.fan_out(), x, false, w, false, 1.0, &mut y);
                    patches.push(None);
                }
                LayerSpec::Conv1d { kernel, stride, .. } => {
                    let cols = im2col(x, batch, layer.input, layer.output.0, kernel, stride);
                    gemm(rows, layer.fan_in(), layer.fan_out(), &cols, false, w, false, 1.0, &mut y);
                    patches.push(Some(cols));
                }
            }
            let act = layer.activation();
            if act != Activation::Identity {
                for v in &mut y {
                    *v = act.apply(*v);
                }
            }
            activations.push(y);
        }
        Ok(ForwardCache {
            batch,
            activations,
            patches,
        })
    }

    /// Convenience forward that keeps only the output.
    pub fn predict(&self, input: &[f64], batch: usize) -> Result<Vec<f64>> {
        let mut cache = self.forward(input, batch)?;
        Ok(cache.activations.pop().unwrap())
    }

    /// Reverse pass. Returns `(parameter gradients, input gradient)` for
    /// `d_output = ∂loss/∂output`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let batch = cache.batch;
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::shape("forward cache does not belong to this network"));
        }
        if d_output.len() != batch * self.output_dim() {
            return Err(Error::shape(format!(
                "expected {} output gradients, got {}",
                batch * self.output_dim(),
                d_output.len()
            )));
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = d_output.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let y = &cache.activations[i + 1];
            let act = layer.activation();
            if act != Activation::Identity {
                for (d, &v) in delta.iter_mut().zip(y) {
                    *d *= act.derivative_from_output(v);
                }
            }
            let (fi, fo) = (layer.fan_in(), layer.fan_out());
            let rows = batch * layer.output.0;
            let (gw, rest) = grads[layer.weight_offset..].split_at_mut(fi * fo);
            let gb = &mut rest[..fo];
            for r in delta.chunks(fo) {
                for (g, d) in gb.iter_mut().zip(r) {
                    *g += d;
                }
            }
            let w = &self.params[layer.weight_offset..layer.bias_offset];
            let x_rows: &[f64] = match &cache.patches[i] {
                Some(cols) => cols,
                None => &cache.activations[i],
            };
            gemm(fi, rows, fo, x_rows, true, &delta, false, 0.0, gw);
            let mut d_rows = vec![0.0; rows * fi];
            gemm(rows, fo, fi, &delta, false, w, true, 0.0, &mut d_rows);
            delta = match layer.spec {
                LayerSpec::Dense { .. } => d_rows,
                LayerSpec::Conv1d { kernel, stride, .. } => {
                    col2im(&d_rows, batch, layer.input, layer.output.0, kernel, stride)
                }
            };
        }
        Ok((grads, delta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense(units: usize, activation: Activation) -> LayerSpec {
        LayerSpec::Dense { units, activation }
    }

    #[test]
    fn zero_weights_give_bias() {
        let mut net = Network::new((1, 3), &[dense(2, Activation::Identity)]).unwrap();
        let n = net.num_params();
        net.params_mut()[n - 2..].copy_from_slice(&[0.5, -1.5]);
        let out = net.predict(&[1.0, 2.0, 3.0, -4.0, 0.0, 9.0], 2).unwrap();
        assert_eq!(out, vec![0.5, -1.5, 0.5, -1.5]);
    }

    #[test]
    fn relu_values() {
        assert_eq!(Activation::Relu.apply(-1.0), 0.0);
        assert_eq!(Activation::Relu.apply(2.0), 2.0);
    }

    #[test]
    fn relu_kink_uses_zero_subgradient() {
        // Zero weights and bias put every pre-activation exactly at 0.
        let net = Network::new((1, 2), &[dense(3, Activation::Relu)]).unwrap();
        let cache = net.forward(&[1.0, -2.0], 1).unwrap();
        let (g, dx) = net.backward(&cache, &[1.0, 1.0, 1.0]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_layer_weight_gradient_is_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::init((1, 3), &[dense(2, Activation::Identity)], &mut rng).unwrap();
        let x = [0.3, -1.2, 2.0];
        let cache = net.forward(&x, 1).unwrap();
        let (g, _) = net.backward(&cache, &[1.0, 1.0]).unwrap();
        for i in 0..3 {
            assert_eq!(g[i * 2], x[i]);
            assert_eq!(g[i * 2 + 1], x[i]);
        }
        assert_eq!(&g[6..], &[1.0, 1.0]);
    }

    #[test]
    fn conv_output_length_uses_same_padding() {
        let net = Network::new(
            (27, 2),
            &[
                LayerSpec::Conv1d {
                    filters: 4,
                    kernel: 3,
                    stride: 2,
                    activation: Activation::Relu,
                },
                LayerSpec::Conv1d {
                    filters: 4,
                    kernel: 3,
                    stride: 2,
                    activation: Activation::Relu,
                },
            ],
        )
        .unwrap();
        assert_eq!(net.output_dim(), 7 * 4);
        assert!(Network::new(
            (5, 1),
            &[LayerSpec::Conv1d {
                filters: 1,
                kernel: 2,
                stride: 1,
                activation: Activation::Relu
            }]
        )
        .is_err());
    }

    #[test]
    fn shape_errors() {
        let net = Network::new((1, 3), &[dense(2, Activation::Tanh)]).unwrap();
        assert!(net.forward(&[1.0; 4], 1).is_err());
        let cache = net.forward(&[1.0; 3], 1).unwrap();
        assert!(net.backward(&cache, &[1.0]).is_err());
        assert!(net.clone().set_params(&[0.0]).is_err());
    }
}
