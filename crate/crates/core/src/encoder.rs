//! Four-layer 1D convolutional metric encoder.
//!
//! ```text
//! input (1 x 42)
//!   conv(32, k=3) -> relu -> maxpool(2)   40 -> 20
//!   conv(32, k=3) -> relu -> maxpool(2)   18 -> 9
//!   conv(64, k=3) -> relu                 7
//!   conv(64, k=3) -> relu                 5
//!   flatten (channel-major, 64 x 5 = 320)
//!   dense(320 -> 64) -> L2 normalize
//! ```
//!
//! Convolutions are unpadded with stride 1. Pooling uses window 2, stride 2,
//! and routes ties to the lower index.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasim::ENCODER_INPUT_DIM;
use crate::error::{Error, Result};
use crate::seed;

pub const EMBEDDING_DIM: usize = 64;
pub const CONV_UNITS: [usize; 4] = [32, 32, 64, 64];
pub const KERNEL_SIZE: usize = 3;
const POOL_AFTER: [bool; 4] = [true, true, false, false];
/// Below this pre-normalization norm the output falls back to `e1`.
pub const NORM_GUARD: f64 = 1e-12;

const FORMAT_VERSION: &str = "1.0";
const FORMAT_MAJOR: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    /// `out_channels x in_channels x KERNEL_SIZE`, row-major.
    pub kernels: Vec<f64>,
    pub biases: Vec<f64>,
}

impl ConvLayer {
    fn zeros(in_channels: usize, out_channels: usize) -> Self {
        ConvLayer {
            in_channels,
            out_channels,
            kernels: vec![0.0; out_channels * in_channels * KERNEL_SIZE],
            biases: vec![0.0; out_channels],
        }
    }

    #[inline]
    fn w(&self, o: usize, c: usize, j: usize) -> f64 {
        self.kernels[(o * self.in_channels + c) * KERNEL_SIZE + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_features: usize,
    pub out_features: usize,
    /// `in_features x out_features`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Encoder weights. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub input_len: usize,
    pub conv: Vec<ConvLayer>,
    pub dense: DenseLayer,
}

pub type ParamGrads = EncoderParams;

/// Sequence lengths after each conv stage (post pooling where applicable).
fn stage_lengths(input_len: usize) -> Result<[usize; 4]> {
    let mut len = input_len;
    let mut out = [0; 4];
    for (i, pool) in POOL_AFTER.iter().enumerate() {
        if len < KERNEL_SIZE {
            return Err(Error::Shape(format!("input length {input_len} too short for the encoder")));
        }
        len -= KERNEL_SIZE - 1;
        if *pool {
            len /= 2;
        }
        out[i] = len;
    }
    if len == 0 {
        return Err(Error::Shape(format!("input length {input_len} too short for the encoder")));
    }
    Ok(out)
}

impl EncoderParams {
    pub fn zeros(input_len: usize) -> Result<Self> {
        let lengths = stage_lengths(input_len)?;
        let mut conv = Vec::with_capacity(4);
        let mut in_ch = 1;
        for &units in &CONV_UNITS {
            conv.push(ConvLayer::zeros(in_ch, units));
            in_ch = units;
        }
        let flat = CONV_UNITS[3] * lengths[3];
        Ok(EncoderParams {
            input_len,
            conv,
            dense: DenseLayer {
                in_features: flat,
                out_features: EMBEDDING_DIM,
                weights: vec![0.0; flat * EMBEDDING_DIM],
                biases: vec![0.0; EMBEDDING_DIM],
            },
        })
    }

    pub fn zeros_like(&self) -> Self {
        EncoderParams::zeros(self.input_len).expect("existing params have a valid shape")
    }

    pub fn flattened_dim(&self) -> usize {
        self.dense.in_features
    }

    /// Parameter tensors in a fixed order: per conv layer (kernels, biases),
    /// then dense (weights, biases).
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(10);
        for layer in &self.conv {
            out.push(&layer.kernels);
            out.push(&layer.biases);
        }
        out.push(&self.dense.weights);
        out.push(&self.dense.biases);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(10);
        for layer in &mut self.conv {
            out.push(&mut layer.kernels);
            out.push(&mut layer.biases);
        }
        out.push(&mut self.dense.weights);
        out.push(&mut self.dense.biases);
        out
    }

    pub fn tensor_names() -> Vec<String> {
        let mut names = Vec::with_capacity(10);
        for i in 1..=4 {
            names.push(format!("conv{i}.kernels"));
            names.push(format!("conv{i}.biases"));
        }
        names.push("dense.weights".into());
        names.push("dense.biases".into());
        names
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn add_scaled(&mut self, other: &EncoderParams, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    fn fan_ins(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(10);
        for layer in &self.conv {
            let fan_in = layer.in_channels * KERNEL_SIZE;
            out.push(fan_in);
            out.push(fan_in);
        }
        out.push(self.dense.in_features);
        out.push(self.dense.in_features);
        out
    }
}

/// Fan-in scaled uniform initialization: weights in `[-sqrt(6/fan_in), sqrt(6/fan_in)]`, biases zero.
pub fn init_params(seed: u64) -> EncoderParams {
    init_params_with_len(seed, ENCODER_INPUT_DIM).expect("default input length is valid")
}

pub fn init_params_with_len(seed: u64, input_len: usize) -> Result<EncoderParams> {
    let mut params = EncoderParams::zeros(input_len)?;
    let mut rng = seed::named_rng(seed, "encoder-init");
    let fan_ins = params.fan_ins();
    for (i, (tensor, fan_in)) in params.tensors_mut().into_iter().zip(fan_ins).enumerate() {
        if i % 2 == 1 {
            continue;
        }
        let bound = (6.0 / fan_in as f64).sqrt();
        for w in tensor.iter_mut() {
            *w = rng.random_range(-bound..=bound);
        }
    }
    Ok(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
    /// Set when the pre-normalization output vanished and `e1` was returned.
    pub fallback: bool,
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input to each conv layer, channel-major.
    layer_inputs: Vec<Vec<f64>>,
    layer_input_lens: Vec<usize>,
    /// Pre-activation output of each conv layer.
    preacts: Vec<Vec<f64>>,
    /// For pooled layers, the source index (within the conv output) of each pooled value.
    pool_argmax: Vec<Option<Vec<usize>>>,
    flat: Vec<f64>,
    pre_norm: Vec<f64>,
    norm: f64,
    pub embedding: Embedding,
}

fn check_input(params: &EncoderParams, input: &[f64]) -> Result<()> {
    if input.len() != params.input_len {
        return Err(Error::Shape(format!(
            "encoder expects {} inputs, got {}",
            params.input_len,
            input.len()
        )));
    }
    if let Some(i) = input.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("encoder input {i} is not finite")));
    }
    Ok(())
}

fn conv_forward(layer: &ConvLayer, input: &[f64], len: usize) -> Vec<f64> {
    let out_len = len + 1 - KERNEL_SIZE;
    let mut out = vec![0.0; layer.out_channels * out_len];
    for o in 0..layer.out_channels {
        let row = &mut out[o * out_len..(o + 1) * out_len];
        row.fill(layer.biases[o]);
        for c in 0..layer.in_channels {
            let x = &input[c * len..(c + 1) * len];
            let base = (o * layer.in_channels + c) * KERNEL_SIZE;
            let (w0, w1, w2) = (
                layer.kernels[base],
                layer.kernels[base + 1],
                layer.kernels[base + 2],
            );
            for (t, r) in row.iter_mut().enumerate() {
                *r += w0 * x[t] + w1 * x[t + 1] + w2 * x[t + 2];
            }
        }
    }
    out
}

pub fn forward_trace(params: &EncoderParams, input: &[f64]) -> Result<ForwardTrace> {
    check_input(params, input)?;
    let mut layer_inputs = Vec::with_capacity(4);
    let mut layer_input_lens = Vec::with_capacity(4);
    let mut preacts = Vec::with_capacity(4);
    let mut pool_argmax = Vec::with_capacity(4);

    let mut x = input.to_vec();
    let mut len = input.len();
    for (layer, pool) in params.conv.iter().zip(POOL_AFTER) {
        let pre = conv_forward(layer, &x, len);
        let out_len = len + 1 - KERNEL_SIZE;
        let act: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        layer_inputs.push(std::mem::take(&mut x));
        layer_input_lens.push(len);
        preacts.push(pre);
        if pool {
            let pooled_len = out_len / 2;
            let mut pooled = vec![0.0; layer.out_channels * pooled_len];
            let mut arg = vec![0; layer.out_channels * pooled_len];
            for c in 0..layer.out_channels {
                for t in 0..pooled_len {
                    let a = c * out_len + 2 * t;
                    let pick = if act[a] >= act[a + 1] { a } else { a + 1 };
                    pooled[c * pooled_len + t] = act[pick];
                    arg[c * pooled_len + t] = pick;
                }
            }
            pool_argmax.push(Some(arg));
            x = pooled;
            len = pooled_len;
        } else {
            pool_argmax.push(None);
            x = act;
            len = out_len;
        }
    }

    let flat = x;
    let dense = &params.dense;
    let mut pre_norm = dense.biases.clone();
    for (f, &v) in flat.iter().enumerate() {
        if v != 0.0 {
            let row = &dense.weights[f * dense.out_features..(f + 1) * dense.out_features];
            for (z, w) in pre_norm.iter_mut().zip(row) {
                *z += v * w;
            }
        }
    }
    let norm = pre_norm.iter().map(|v| v * v).sum::<f64>().sqrt();
    let embedding = if norm < NORM_GUARD {
        let mut e1 = vec![0.0; dense.out_features];
        e1[0] = 1.0;
        Embedding {
            values: e1,
            fallback: true,
        }
    } else {
        Embedding {
            values: pre_norm.iter().map(|v| v / norm).collect(),
            fallback: false,
        }
    };

    Ok(ForwardTrace {
        layer_inputs,
        layer_input_lens,
        preacts,
        pool_argmax,
        flat,
        pre_norm,
        norm,
        embedding,
    })
}

pub fn forward(params: &EncoderParams, input: &[f64]) -> Result<Embedding> {
    forward_trace(params, input).map(|t| t.embedding)
}

pub fn forward_batch<S: AsRef<[f64]>>(params: &EncoderParams, inputs: &[S]) -> Result<Vec<Embedding>> {
    inputs.iter().map(|x| forward(params, x.as_ref())).collect()
}

/// Signature of the piecewise-linear region an input falls in: every ReLU
/// on/off state and every pooling choice. Two parameter settings with the
/// same pattern are connected by a smooth path through the network.
pub fn activation_pattern(trace: &ForwardTrace) -> Vec<u32> {
    let mut out = Vec::new();
    for (pre, arg) in trace.preacts.iter().zip(&trace.pool_argmax) {
        out.extend(pre.iter().map(|v| (*v > 0.0) as u32));
        if let Some(arg) = arg {
            out.extend(arg.iter().map(|&a| a as u32));
        }
    }
    out.push(trace.embedding.fallback as u32);
    out
}

/// Accumulates the gradient of one sample into `grads`.
pub fn backward_trace(
    params: &EncoderParams,
    trace: &ForwardTrace,
    output_grad: &[f64],
    grads: &mut ParamGrads,
) -> Result<()> {
    if output_grad.len() != EMBEDDING_DIM {
        return Err(Error::Shape(format!(
            "output gradient has length {}, expected {EMBEDDING_DIM}",
            output_grad.len()
        )));
    }
    if trace.embedding.fallback {
        // The fallback output is constant in the parameters.
        return Ok(());
    }

    // d(z/|z|) = (I - y y^T) / |z|
    let y = &trace.embedding.values;
    let proj: f64 = y.iter().zip(output_grad).map(|(a, b)| a * b).sum();
    let dz: Vec<f64> = output_grad
        .iter()
        .zip(y)
        .map(|(g, yi)| (g - yi * proj) / trace.norm)
        .collect();
    debug_assert_eq!(dz.len(), trace.pre_norm.len());

    let dense = &params.dense;
    let out_f = dense.out_features;
    let mut dflat = vec![0.0; dense.in_features];
    for (f, &v) in trace.flat.iter().enumerate() {
        let w_row = &dense.weights[f * out_f..(f + 1) * out_f];
        let g_row = &mut grads.dense.weights[f * out_f..(f + 1) * out_f];
        let mut acc = 0.0;
        for o in 0..out_f {
            g_row[o] += v * dz[o];
            acc += w_row[o] * dz[o];
        }
        dflat[f] = acc;
    }
    for (g, d) in grads.dense.biases.iter_mut().zip(&dz) {
        *g += d;
    }

    let mut dout = dflat;
    for l in (0..params.conv.len()).rev() {
        let layer = &params.conv[l];
        let pre = &trace.preacts[l];
        let len = trace.layer_input_lens[l];
        let out_len = len + 1 - KERNEL_SIZE;

        // Undo pooling, then the ReLU.
        let mut dpre = match &trace.pool_argmax[l] {
            Some(arg) => {
                let mut full = vec![0.0; pre.len()];
                for (g, &src) in dout.iter().zip(arg) {
                    full[src] += g;
                }
                full
            }
            None => dout,
        };
        for (g, p) in dpre.iter_mut().zip(pre) {
            if *p <= 0.0 {
                *g = 0.0;
            }
        }

        let x = &trace.layer_inputs[l];
        let glayer = &mut grads.conv[l];
        let mut dx = vec![0.0; layer.in_channels * len];
        for o in 0..layer.out_channels {
            let drow = &dpre[o * out_len..(o + 1) * out_len];
            glayer.biases[o] += drow.iter().sum::<f64>();
            for c in 0..layer.in_channels {
                let xin = &x[c * len..(c + 1) * len];
                let base = (o * layer.in_channels + c) * KERNEL_SIZE;
                let mut g = [0.0; KERNEL_SIZE];
                for (t, &d) in drow.iter().enumerate() {
                    if d != 0.0 {
                        g[0] += d * xin[t];
                        g[1] += d * xin[t + 1];
                        g[2] += d * xin[t + 2];
                    }
                }
                for j in 0..KERNEL_SIZE {
                    glayer.kernels[base + j] += g[j];
                }
                if l > 0 {
                    let dxin = &mut dx[c * len..(c + 1) * len];
                    let (w0, w1, w2) = (layer.w(o, c, 0), layer.w(o, c, 1), layer.w(o, c, 2));
                    for (t, &d) in drow.iter().enumerate() {
                        if d != 0.0 {
                            dxin[t] += w0 * d;
                            dxin[t + 1] += w1 * d;
                            dxin[t + 2] += w2 * d;
                        }
                    }
                }
            }
        }
        dout = dx;
    }
    Ok(())
}

/// Gradient of `sum_i <output_grads[i], f(batch[i])>` with respect to every parameter.
pub fn backward<S: AsRef<[f64]>>(
    params: &EncoderParams,
    batch: &[S],
    output_grads: &[Vec<f64>],
) -> Result<ParamGrads> {
    if batch.len() != output_grads.len() {
        return Err(Error::Shape(format!(
            "{} inputs but {} output gradients",
            batch.len(),
            output_grads.len()
        )));
    }
    let mut grads = params.zeros_like();
    for (x, g) in batch.iter().zip(output_grads) {
        let trace = forward_trace(params, x.as_ref())?;
        backward_trace(params, &trace, g, &mut grads)?;
    }
    Ok(grads)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        relu: bool,
        max_pool: Option<usize>,
    },
    Dense {
        in_features: usize,
        out_features: usize,
        l2_normalize: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderDocument {
    pub version: String,
    pub input_len: usize,
    pub layer_specs: Vec<LayerSpec>,
    pub arrays: Vec<NamedArray>,
}

/// Rejects documents written by a newer major format version.
pub fn check_version(version: &str, supported: u32) -> Result<()> {
    let major = version
        .split('.')
        .next()
        .and_then(|m| m.parse::<u32>().ok())
        .ok_or_else(|| Error::Format(format!("malformed version {version:?}")))?;
    if major > supported {
        return Err(Error::Version {
            found: version.to_string(),
            supported,
        });
    }
    Ok(())
}

impl EncoderParams {
    pub fn to_document(&self) -> EncoderDocument {
        let mut layer_specs = Vec::new();
        for (layer, pool) in self.conv.iter().zip(POOL_AFTER) {
            layer_specs.push(LayerSpec::Conv1d {
                in_channels: layer.in_channels,
                out_channels: layer.out_channels,
                kernel_size: KERNEL_SIZE,
                stride: 1,
                relu: true,
                max_pool: pool.then_some(2),
            });
        }
        layer_specs.push(LayerSpec::Dense {
            in_features: self.dense.in_features,
            out_features: self.dense.out_features,
            l2_normalize: true,
        });
        let mut shapes = Vec::new();
        for layer in &self.conv {
            shapes.push(vec![layer.out_channels, layer.in_channels, KERNEL_SIZE]);
            shapes.push(vec![layer.out_channels]);
        }
        shapes.push(vec![self.dense.in_features, self.dense.out_features]);
        shapes.push(vec![self.dense.out_features]);
        let arrays = Self::tensor_names()
            .into_iter()
            .zip(shapes)
            .zip(self.tensors())
            .map(|((name, shape), data)| NamedArray {
                name,
                shape,
                data: data.to_vec(),
            })
            .collect();
        EncoderDocument {
            version: FORMAT_VERSION.to_string(),
            input_len: self.input_len,
            layer_specs,
            arrays,
        }
    }

    pub fn from_document(doc: &EncoderDocument) -> Result<Self> {
        check_version(&doc.version, FORMAT_MAJOR)?;
        let mut params = EncoderParams::zeros(doc.input_len)?;
        let names = Self::tensor_names();
        if doc.arrays.len() != names.len() {
            return Err(Error::Format(format!(
                "expected {} arrays, found {}",
                names.len(),
                doc.arrays.len()
            )));
        }
        for ((dst, name), array) in params.tensors_mut().into_iter().zip(&names).zip(&doc.arrays) {
            if &array.name != name || array.data.len() != dst.len() {
                return Err(Error::Format(format!(
                    "array {:?} does not match expected {name} with {} values",
                    array.name,
                    dst.len()
                )));
            }
            if array.shape.iter().product::<usize>() != dst.len() {
                return Err(Error::Format(format!("array {name} has an inconsistent shape")));
            }
            dst.copy_from_slice(&array.data);
        }
        if !params.is_finite() {
            return Err(Error::Numeric("encoder parameters contain non-finite values".into()));
        }
        Ok(params)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.to_document())?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let doc: EncoderDocument = serde_json::from_reader(reader)?;
        Self::from_document(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_input(seed: u64) -> Vec<f64> {
        let mut rng = seed::rng(seed);
        (0..ENCODER_INPUT_DIM).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn stage_lengths_follow_valid_convolutions() {
        assert_eq!(stage_lengths(42).unwrap(), [20, 9, 7, 5]);
        assert_eq!(stage_lengths(43).unwrap(), [20, 9, 7, 5]);
        let p = EncoderParams::zeros(42).unwrap();
        assert_eq!(p.flattened_dim(), 320);
        assert!(stage_lengths(8).is_err());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_params(1);
        assert_eq!(a, init_params(1));
        assert_ne!(a, init_params(2));
        for (t, fan_in) in a.tensors().iter().zip(a.fan_ins()) {
            let bound = (6.0 / fan_in as f64).sqrt();
            assert!(t.iter().all(|w| w.abs() <= bound));
        }
        for layer in &a.conv {
            assert!(layer.biases.iter().all(|b| *b == 0.0));
        }
    }

    #[test]
    fn zero_weights_hit_the_guard() {
        let p = EncoderParams::zeros(ENCODER_INPUT_DIM).unwrap();
        let e = forward(&p, &random_input(3)).unwrap();
        assert!(e.fallback);
        assert_eq!(e.values[0], 1.0);
        assert!(e.values[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn output_is_unit_norm() {
        let p = init_params(4);
        for s in 0..10 {
            let e = forward(&p, &random_input(100 + s)).unwrap();
            let n: f64 = e.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = init_params(4);
        assert!(matches!(forward(&p, &[0.0; 10]), Err(Error::Shape(_))));
        let mut x = random_input(1);
        x[7] = f64::NAN;
        assert!(matches!(forward(&p, &x), Err(Error::Numeric(_))));
        let g = vec![vec![0.0; EMBEDDING_DIM]];
        assert!(matches!(backward(&p, &[x.clone(), x], &g), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_output_grads_give_zero_param_grads() {
        let p = init_params(5);
        let xs = vec![random_input(1), random_input(2)];
        let g = backward(&p, &xs, &vec![vec![0.0; EMBEDDING_DIM]; 2]).unwrap();
        assert!(g.tensors().iter().all(|t| t.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn batch_gradients_sum() {
        let p = init_params(6);
        let x = random_input(9);
        let mut rng = seed::rng(10);
        let g: Vec<f64> = (0..EMBEDDING_DIM).map(|_| rng.sample(StandardNormal)).collect();
        let single = backward(&p, &[x.clone()], &[g.clone()]).unwrap();
        let triple = backward(&p, &vec![x; 3], &vec![g; 3]).unwrap();
        for (a, b) in single.tensors().iter().zip(triple.tensors()) {
            for (s, t) in a.iter().zip(b) {
                assert!((3.0 * s - t).abs() <= 1e-12 * (1.0 + t.abs()));
            }
        }
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let p = init_params(12);
        let mut buf = Vec::new();
        p.write_json(&mut buf).unwrap();
        let q = EncoderParams::read_json(&buf[..]).unwrap();
        for (a, b) in p.tensors().iter().zip(q.tensors()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn newer_major_version_rejected() {
        let mut doc = init_params(1).to_document();
        doc.version = "2.0".into();
        assert!(matches!(EncoderParams::from_document(&doc), Err(Error::Version { .. })));
        doc.version = "1.3".into();
        assert!(EncoderParams::from_document(&doc).is_ok());
    }
}
