use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelConfig;
use crate::error::{Error, Result};

/// Weights of one encoder layer. Projections carry no bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// One `d_model × d_k` matrix per head.
    pub w_query: Vec<Array2<f64>>,
    pub w_key: Vec<Array2<f64>>,
    /// One `d_model × d_v` matrix per head.
    pub w_value: Vec<Array2<f64>>,
    /// `(n_heads · d_v) × d_model`.
    pub w_out: Array2<f64>,
    pub norm1_gain: Array1<f64>,
    pub norm1_bias: Array1<f64>,
    pub ff_w1: Array2<f64>,
    pub ff_b1: Array1<f64>,
    pub ff_w2: Array2<f64>,
    pub ff_b2: Array1<f64>,
    pub norm2_gain: Array1<f64>,
    pub norm2_bias: Array1<f64>,
}

/// All learnable tensors. The same type doubles as a gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// `token_width × d_model`.
    pub embed_w: Array2<f64>,
    pub embed_b: Array1<f64>,
    pub layers: Vec<LayerParams>,
    /// `conv_kernel × d_model × conv_channels`.
    pub conv_w: Array3<f64>,
    pub conv_b: Array1<f64>,
    /// `conv_channels × n_classes`.
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
}

/// Tensor names and shapes implied by `config`, in storage order.
pub fn expected_shapes(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let c = config;
    let mut out = vec![
        ("embed.weight".to_string(), vec![c.token_width(), c.d_model]),
        ("embed.bias".to_string(), vec![c.d_model]),
    ];
    for l in 0..c.n_layers {
        let p = format!("layers.{l}");
        for (kind, width) in [("query", c.d_k), ("key", c.d_k), ("value", c.d_v)] {
            for h in 0..c.n_heads {
                out.push((format!("{p}.attn.{kind}.{h}"), vec![c.d_model, width]));
            }
        }
        out.push((format!("{p}.attn.out"), vec![c.n_heads * c.d_v, c.d_model]));
        out.push((format!("{p}.norm1.gain"), vec![c.d_model]));
        out.push((format!("{p}.norm1.bias"), vec![c.d_model]));
        out.push((format!("{p}.ff.w1"), vec![c.d_model, c.d_ff]));
        out.push((format!("{p}.ff.b1"), vec![c.d_ff]));
        out.push((format!("{p}.ff.w2"), vec![c.d_ff, c.d_model]));
        out.push((format!("{p}.ff.b2"), vec![c.d_model]));
        out.push((format!("{p}.norm2.gain"), vec![c.d_model]));
        out.push((format!("{p}.norm2.bias"), vec![c.d_model]));
    }
    out.push(("head.conv.weight".into(), vec![c.conv_kernel, c.d_model, c.conv_channels]));
    out.push(("head.conv.bias".into(), vec![c.conv_channels]));
    out.push(("head.out.weight".into(), vec![c.conv_channels, c.n_classes]));
    out.push(("head.out.bias".into(), vec![c.n_classes]));
    out
}

fn slice<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> &[f64] {
    a.as_slice().expect("parameter tensors are contiguous")
}

fn slice_mut<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
    a.as_slice_mut().expect("parameter tensors are contiguous")
}

impl ModelParams {
    /// All-zero tensors (LayerNorm gains included).
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let c = config;
        let layer = || LayerParams {
            w_query: vec![Array2::zeros((c.d_model, c.d_k)); c.n_heads],
            w_key: vec![Array2::zeros((c.d_model, c.d_k)); c.n_heads],
            w_value: vec![Array2::zeros((c.d_model, c.d_v)); c.n_heads],
            w_out: Array2::zeros((c.n_heads * c.d_v, c.d_model)),
            norm1_gain: Array1::zeros(c.d_model),
            norm1_bias: Array1::zeros(c.d_model),
            ff_w1: Array2::zeros((c.d_model, c.d_ff)),
            ff_b1: Array1::zeros(c.d_ff),
            ff_w2: Array2::zeros((c.d_ff, c.d_model)),
            ff_b2: Array1::zeros(c.d_model),
            norm2_gain: Array1::zeros(c.d_model),
            norm2_bias: Array1::zeros(c.d_model),
        };
        let params = Self {
            config: c.clone(),
            embed_w: Array2::zeros((c.token_width(), c.d_model)),
            embed_b: Array1::zeros(c.d_model),
            layers: (0..c.n_layers).map(|_| layer()).collect(),
            conv_w: Array3::zeros((c.conv_kernel, c.d_model, c.conv_channels)),
            conv_b: Array1::zeros(c.conv_channels),
            out_w: Array2::zeros((c.conv_channels, c.n_classes)),
            out_b: Array1::zeros(c.n_classes),
        };
        params.audit_shapes()?;
        Ok(params)
    }

    /// Seeded initialization: weights uniform in ±1/√fan_in, biases zero,
    /// LayerNorm gains one.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = config.clone();
        let mut fill = |t: &mut [f64], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in t {
                *v = rng.gen_range(-bound..bound);
            }
        };
        fill(slice_mut(&mut p.embed_w), c.token_width());
        for layer in &mut p.layers {
            for w in layer.w_query.iter_mut().chain(&mut layer.w_key).chain(&mut layer.w_value) {
                fill(slice_mut(w), c.d_model);
            }
            fill(slice_mut(&mut layer.w_out), c.n_heads * c.d_v);
            fill(slice_mut(&mut layer.ff_w1), c.d_model);
            fill(slice_mut(&mut layer.ff_w2), c.d_ff);
            layer.norm1_gain.fill(1.0);
            layer.norm2_gain.fill(1.0);
        }
        fill(slice_mut(&mut p.conv_w), c.conv_kernel * c.d_model);
        fill(slice_mut(&mut p.out_w), c.conv_channels);
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config).expect("config already validated")
    }

    /// `(name, shape, values)` for every tensor, in [`expected_shapes`] order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let names = expected_shapes(&self.config);
        let mut data: Vec<(Vec<usize>, &[f64])> = vec![
            (self.embed_w.shape().to_vec(), slice(&self.embed_w)),
            (self.embed_b.shape().to_vec(), slice(&self.embed_b)),
        ];
        for l in &self.layers {
            for w in l.w_query.iter().chain(&l.w_key).chain(&l.w_value) {
                data.push((w.shape().to_vec(), slice(w)));
            }
            data.push((l.w_out.shape().to_vec(), slice(&l.w_out)));
            for v in [&l.norm1_gain, &l.norm1_bias] {
                data.push((v.shape().to_vec(), slice(v)));
            }
            data.push((l.ff_w1.shape().to_vec(), slice(&l.ff_w1)));
            data.push((l.ff_b1.shape().to_vec(), slice(&l.ff_b1)));
            data.push((l.ff_w2.shape().to_vec(), slice(&l.ff_w2)));
            for v in [&l.ff_b2, &l.norm2_gain, &l.norm2_bias] {
                data.push((v.shape().to_vec(), slice(v)));
            }
        }
        data.push((self.conv_w.shape().to_vec(), slice(&self.conv_w)));
        data.push((self.conv_b.shape().to_vec(), slice(&self.conv_b)));
        data.push((self.out_w.shape().to_vec(), slice(&self.out_w)));
        data.push((self.out_b.shape().to_vec(), slice(&self.out_b)));
        names
            .into_iter()
            .zip(data)
            .map(|((name, _), (shape, values))| (name, shape, values))
            .collect()
    }

    /// Mutable views in the same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![slice_mut(&mut self.embed_w), slice_mut(&mut self.embed_b)];
        for l in &mut self.layers {
            for w in l.w_query.iter_mut().chain(&mut l.w_key).chain(&mut l.w_value) {
                out.push(slice_mut(w));
            }
            out.push(slice_mut(&mut l.w_out));
            out.push(slice_mut(&mut l.norm1_gain));
            out.push(slice_mut(&mut l.norm1_bias));
            out.push(slice_mut(&mut l.ff_w1));
            out.push(slice_mut(&mut l.ff_b1));
            out.push(slice_mut(&mut l.ff_w2));
            out.push(slice_mut(&mut l.ff_b2));
            out.push(slice_mut(&mut l.norm2_gain));
            out.push(slice_mut(&mut l.norm2_bias));
        }
        out.push(slice_mut(&mut self.conv_w));
        out.push(slice_mut(&mut self.conv_b));
        out.push(slice_mut(&mut self.out_w));
        out.push(slice_mut(&mut self.out_b));
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, _, v)| v.len()).sum()
    }

    /// Check every tensor against the shapes implied by the config.
    pub fn audit_shapes(&self) -> Result<()> {
        let expected = expected_shapes(&self.config);
        if self.layers.len() != self.config.n_layers
            || self.layers.iter().any(|l| {
                l.w_query.len() != self.config.n_heads
                    || l.w_key.len() != self.config.n_heads
                    || l.w_value.len() != self.config.n_heads
            })
        {
            return Err(Error::invalid("layer or head count does not match config"));
        }
        for ((name, shape, _), (_, want)) in self.tensors().iter().zip(&expected) {
            if shape != want {
                return Err(Error::invalid(format!("{name}: shape {shape:?}, expected {want:?}")));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, _, v)| v.iter().all(|x| x.is_finite()))
    }

    pub fn add_assign(&mut self, other: &Self) {
        let src = other.tensors();
        for (dst, (_, _, s)) in self.tensors_mut().into_iter().zip(src) {
            dst.iter_mut().zip(s).for_each(|(d, v)| *d += v);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }
}
