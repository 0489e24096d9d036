use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{LayerParams, ModelParams};
use crate::error::{Error, Result};
use crate::par;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Sinusoidal position table, `seq_len × d_model`.
pub fn positional_encoding(seq_len: usize, d_model: usize) -> Result<Array2<f64>> {
    if d_model == 0 || d_model % 2 != 0 {
        return Err(Error::invalid(format!("d_model must be even and positive, got {d_model}")));
    }
    Ok(Array2::from_shape_fn((seq_len, d_model), |(pos, j)| {
        let i = (j / 2) as f64;
        let arg = pos as f64 / 10000f64.powf(2.0 * i / d_model as f64);
        if j % 2 == 0 {
            arg.sin()
        } else {
            arg.cos()
        }
    }))
}

/// Row-wise softmax with max subtraction, in place.
pub(crate) fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        softmax_in_place(row.as_slice_mut().expect("rows of owned arrays are contiguous"));
    }
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    v.iter_mut().for_each(|x| *x /= sum);
}

pub(crate) struct HeadCache {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    pub weights: Array2<f64>,
}

fn attention_parts(q: Array2<f64>, k: Array2<f64>, v: Array2<f64>) -> Result<(Array2<f64>, HeadCache)> {
    if q.ncols() != k.ncols() {
        return Err(Error::invalid(format!(
            "query width {} != key width {}",
            q.ncols(),
            k.ncols()
        )));
    }
    if k.nrows() != v.nrows() {
        return Err(Error::invalid(format!("{} keys but {} values", k.nrows(), v.nrows())));
    }
    let mut weights = q.dot(&k.t()) / (q.ncols() as f64).sqrt();
    softmax_rows(&mut weights);
    let out = weights.dot(&v);
    Ok((out, HeadCache { q, k, v, weights }))
}

/// `softmax(Q Kᵀ / √d_k) V`.
pub fn scaled_dot_attention(
    q: ArrayView2<'_, f64>,
    k: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    attention_parts(q.to_owned(), k.to_owned(), v.to_owned()).map(|(o, _)| o)
}

pub(crate) struct AttentionCache {
    pub heads: Vec<HeadCache>,
    pub concat: Array2<f64>,
}

pub(crate) fn attention_forward(x: &Array2<f64>, p: &LayerParams) -> Result<(Array2<f64>, AttentionCache)> {
    let d_model = p.w_out.ncols();
    if x.ncols() != d_model {
        return Err(Error::invalid(format!("input width {} != d_model {d_model}", x.ncols())));
    }
    let mut heads = Vec::with_capacity(p.w_query.len());
    let mut outs = Vec::with_capacity(p.w_query.len());
    for ((wq, wk), wv) in p.w_query.iter().zip(&p.w_key).zip(&p.w_value) {
        let (o, c) = attention_parts(x.dot(wq), x.dot(wk), x.dot(wv))?;
        outs.push(o);
        heads.push(c);
    }
    let views: Vec<_> = outs.iter().map(|o| o.view()).collect();
    let concat = concatenate(Axis(1), &views).map_err(|e| Error::invalid(e.to_string()))?;
    if concat.ncols() != p.w_out.nrows() {
        return Err(Error::invalid("concatenated heads do not match output projection"));
    }
    Ok((concat.dot(&p.w_out), AttentionCache { heads, concat }))
}

/// Per-head projections, attention, concatenation, output projection.
pub fn multi_head_attention(x: &Array2<f64>, p: &LayerParams) -> Result<Array2<f64>> {
    attention_forward(x, p).map(|(o, _)| o)
}

pub(crate) struct NormCache {
    pub normalized: Array2<f64>,
    pub inv_std: Array1<f64>,
}

pub(crate) fn layer_norm_forward(x: &Array2<f64>, gain: &Array1<f64>, bias: &Array1<f64>) -> (Array2<f64>, NormCache) {
    let n = x.ncols() as f64;
    let mut normalized = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, is) in normalized.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        *is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        row.mapv_inplace(|v| (v - mean) * *is);
    }
    let out = &normalized * gain + bias;
    (out, NormCache { normalized, inv_std })
}

/// LayerNorm over the feature axis with learned gain and bias.
pub fn layer_norm(x: &Array2<f64>, gain: &Array1<f64>, bias: &Array1<f64>) -> Array2<f64> {
    layer_norm_forward(x, gain, bias).0
}

/// Inverted dropout mask: entries are 0 or `1 / (1 - p)`.
pub(crate) fn dropout_mask(rng: &mut ChaCha8Rng, shape: (usize, usize), p: f64) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_simple_fn(shape, || if rng.gen::<f64>() < p { 0.0 } else { keep })
}

fn apply_mask(x: &mut Array2<f64>, mask: &Option<Array2<f64>>) {
    if let Some(m) = mask {
        *x *= m;
    }
}

pub(crate) struct LayerCache {
    pub input: Array2<f64>,
    pub attention: AttentionCache,
    pub attention_mask: Option<Array2<f64>>,
    pub norm1: NormCache,
    pub mid: Array2<f64>,
    pub ff_pre: Array2<f64>,
    pub ff_act: Array2<f64>,
    pub ff_mask: Option<Array2<f64>>,
    pub norm2: NormCache,
}

/// Dropout state for a training pass.
pub(crate) struct Dropout<'a> {
    pub rng: &'a mut ChaCha8Rng,
    pub p: f64,
}

impl Dropout<'_> {
    fn mask(&mut self, shape: (usize, usize)) -> Option<Array2<f64>> {
        (self.p > 0.0).then(|| dropout_mask(self.rng, shape, self.p))
    }
}

fn check_finite(m: &Array2<f64>, layer: usize) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteActivation { layer })
    }
}

pub(crate) fn encoder_forward(
    x: Array2<f64>,
    p: &LayerParams,
    index: usize,
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<(Array2<f64>, LayerCache)> {
    let (mut attn, attention) = attention_forward(&x, p)?;
    let attention_mask = dropout.as_mut().and_then(|d| d.mask(attn.dim()));
    apply_mask(&mut attn, &attention_mask);
    let (mid, norm1) = layer_norm_forward(&(&x + &attn), &p.norm1_gain, &p.norm1_bias);
    check_finite(&mid, index)?;

    let ff_pre = mid.dot(&p.ff_w1) + &p.ff_b1;
    let ff_act = ff_pre.mapv(|v| v.max(0.0));
    let mut ff = ff_act.dot(&p.ff_w2) + &p.ff_b2;
    let ff_mask = dropout.as_mut().and_then(|d| d.mask(ff.dim()));
    apply_mask(&mut ff, &ff_mask);
    let (out, norm2) = layer_norm_forward(&(&mid + &ff), &p.norm2_gain, &p.norm2_bias);
    check_finite(&out, index)?;
    Ok((
        out,
        LayerCache { input: x, attention, attention_mask, norm1, mid, ff_pre, ff_act, ff_mask, norm2 },
    ))
}

/// `y = LN(x + MHA(x))`, `z = LN(y + FFN(y))` with a ReLU feed-forward block.
/// `index` only labels a non-finite activation error.
pub fn encoder_layer(x: &Array2<f64>, p: &LayerParams, index: usize) -> Result<Array2<f64>> {
    encoder_forward(x.clone(), p, index, None).map(|(o, _)| o)
}

/// Cut a flat input into `seq_len` tokens.
pub(crate) fn tokenize(x: ArrayView1<'_, f64>, params: &ModelParams) -> Result<Array2<f64>> {
    let c = &params.config;
    if x.len() != c.input_len {
        return Err(Error::invalid(format!(
            "input has {} values, model expects {}",
            x.len(),
            c.input_len
        )));
    }
    x.to_owned()
        .into_shape_with_order((c.seq_len, c.token_width()))
        .map_err(|e| Error::invalid(e.to_string()))
}

/// Zero-padded "same" convolution over the sequence axis.
pub(crate) fn conv_forward(z: &Array2<f64>, params: &ModelParams) -> Array2<f64> {
    let (t_len, _) = z.dim();
    let k = params.config.conv_kernel;
    let half = (k / 2) as isize;
    let mut out = Array2::zeros((t_len, params.config.conv_channels));
    out += &params.conv_b;
    for j in 0..k {
        let offset = j as isize - half;
        let (lo, hi) = conv_range(t_len, offset);
        if lo >= hi {
            continue;
        }
        let src = z.slice(s![(lo as isize + offset) as usize..(hi as isize + offset) as usize, ..]);
        let w = params.conv_w.index_axis(Axis(0), j);
        let mut dst = out.slice_mut(s![lo..hi, ..]);
        dst += &src.dot(&w);
    }
    out
}

/// Output rows `lo..hi` whose input row `t + offset` is in range.
pub(crate) fn conv_range(t_len: usize, offset: isize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (t_len as isize - offset).clamp(0, t_len as isize) as usize;
    (lo.min(t_len), hi)
}

pub(crate) struct SampleCache {
    pub tokens: Array2<f64>,
    pub embed_mask: Option<Array2<f64>>,
    pub layers: Vec<LayerCache>,
    pub encoded: Array2<f64>,
    pub pooled: Array1<f64>,
    pub logits: Array1<f64>,
}

pub(crate) fn sample_forward(
    x: ArrayView1<'_, f64>,
    params: &ModelParams,
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<SampleCache> {
    let c = &params.config;
    let tokens = tokenize(x, params)?;
    let mut h = tokens.dot(&params.embed_w) + &params.embed_b + positional_encoding(c.seq_len, c.d_model)?;
    let embed_mask = dropout.as_mut().and_then(|d| d.mask(h.dim()));
    apply_mask(&mut h, &embed_mask);
    let mut layers = Vec::with_capacity(params.layers.len());
    for (i, lp) in params.layers.iter().enumerate() {
        let (next, cache) = encoder_forward(h, lp, i, dropout.as_deref_mut())?;
        layers.push(cache);
        h = next;
    }
    let conv = conv_forward(&h, params);
    let pooled = conv.mean_axis(Axis(0)).expect("sequence is non-empty");
    let logits = pooled.dot(&params.out_w) + &params.out_b;
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteActivation { layer: params.layers.len() });
    }
    Ok(SampleCache { tokens, embed_mask, layers, encoded: h, pooled, logits })
}

/// Encoder output for one input vector, before the head.
pub fn encode(x: ArrayView1<'_, f64>, params: &ModelParams) -> Result<Array2<f64>> {
    sample_forward(x, params, None).map(|c| c.encoded)
}

/// Pre-softmax scores, `batch × n_classes`.
pub fn logits(x: &Array2<f64>, params: &ModelParams) -> Result<Array2<f64>> {
    let rows = par::map_range(x.nrows(), |i| sample_forward(x.row(i), params, None).map(|c| c.logits));
    let mut out = Array2::zeros((x.nrows(), params.config.n_classes));
    for (mut dst, r) in out.rows_mut().into_iter().zip(rows) {
        dst.assign(&r?);
    }
    Ok(out)
}

/// Class probabilities, `batch × n_classes`. Dropout is off.
pub fn forward(x: &Array2<f64>, params: &ModelParams) -> Result<Array2<f64>> {
    let mut out = logits(x, params)?;
    softmax_rows(&mut out);
    Ok(out)
}

/// Most probable class per row; ties go to the lower index.
pub fn predict(x: &Array2<f64>, params: &ModelParams) -> Result<Vec<usize>> {
    Ok(logits(x, params)?
        .rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                .0
        })
        .collect())
}

/// Elementwise `a * b` for two same-shape arrays, used by backprop.
pub(crate) fn hadamard(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    Zip::from(&mut out).and(b).for_each(|o, &v| *o *= v);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use ndarray::array;
    use rand::SeedableRng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn positional_encoding_values() {
        let pe = positional_encoding(6, 8).unwrap();
        for i in 0..4 {
            assert_eq!(pe[[0, 2 * i]], 0.0);
            assert_eq!(pe[[0, 2 * i + 1]], 1.0);
        }
        let pe2 = positional_encoding(2, 2).unwrap();
        assert_eq!(pe2[[1, 0]], 1f64.sin());
        assert_eq!(pe2[[1, 1]], 1f64.cos());
        assert!(positional_encoding(3, 5).is_err());
    }

    #[test]
    fn attention_trivial_cases() {
        let q = array![[1.0, 2.0]];
        let v = array![[3.0, -4.0, 5.0]];
        let out = scaled_dot_attention(q.view(), q.view(), v.view()).unwrap();
        assert_eq!(out, v);

        let k = Array2::<f64>::eye(3);
        let v = array![[1.0, 0.0], [0.0, 1.0], [5.0, 5.0]];
        let q = array![[0.0, 0.0, 1e4]];
        let out = scaled_dot_attention(q.view(), k.view(), v.view()).unwrap();
        assert!((out[[0, 0]] - 5.0).abs() < 1e-12 && (out[[0, 1]] - 5.0).abs() < 1e-12);

        assert!(scaled_dot_attention(q.view(), v.view(), v.view()).is_err());
    }

    #[test]
    fn attention_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (q, k, v) = (random(3, 4, &mut rng), random(3, 4, &mut rng), random(3, 5, &mut rng));
        let out = scaled_dot_attention(q.view(), k.view(), v.view()).unwrap();
        for i in 0..3 {
            let scores: Vec<f64> = (0..3)
                .map(|j| (0..4).map(|d| q[[i, d]] * k[[j, d]]).sum::<f64>() / 2.0)
                .collect();
            let z: f64 = scores.iter().map(|s| s.exp()).sum();
            for c in 0..5 {
                let want: f64 = (0..3).map(|j| scores[j].exp() / z * v[[j, c]]).sum();
                assert!((out[[i, c]] - want).abs() < 1e-12);
            }
        }
    }

    fn tiny_layer(cfg: &ModelConfig, seed: u64) -> LayerParams {
        ModelParams::init(cfg, seed).unwrap().layers.remove(0)
    }

    #[test]
    fn single_identity_head_is_plain_attention() {
        let cfg = ModelConfig { input_len: 8, seq_len: 2, d_model: 4, n_layers: 1, n_heads: 1, d_k: 4, d_v: 4, ..Default::default() };
        let mut layer = tiny_layer(&cfg, 1);
        let eye = Array2::<f64>::eye(4);
        layer.w_query[0] = eye.clone();
        layer.w_key[0] = eye.clone();
        layer.w_value[0] = eye.clone();
        layer.w_out = eye;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(5, 4, &mut rng);
        let got = multi_head_attention(&x, &layer).unwrap();
        let want = scaled_dot_attention(x.view(), x.view(), x.view()).unwrap();
        assert!((&got - &want).iter().all(|d| d.abs() < 1e-15));
        assert!(multi_head_attention(&Array2::zeros((5, 4)), &layer).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heads_glued_by_concatenation() {
        let cfg = ModelConfig { input_len: 8, seq_len: 2, d_model: 6, n_layers: 1, n_heads: 2, d_k: 3, d_v: 2, ..Default::default() };
        let layer = tiny_layer(&cfg, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(4, 6, &mut rng);
        let got = multi_head_attention(&x, &layer).unwrap();
        let mut glued = Array2::zeros((4, 4));
        for h in 0..2 {
            let o = scaled_dot_attention(
                x.dot(&layer.w_query[h]).view(),
                x.dot(&layer.w_key[h]).view(),
                x.dot(&layer.w_value[h]).view(),
            )
            .unwrap();
            for r in 0..4 {
                for c in 0..2 {
                    glued[[r, 2 * h + c]] = o[[r, c]];
                }
            }
        }
        let want = glued.dot(&layer.w_out);
        assert!((&got - &want).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn layer_norm_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random(5, 16, &mut rng) * 7.0 + 3.0;
        let gain = Array1::from_shape_fn(16, |i| 0.5 + i as f64 * 0.1);
        let bias = Array1::from_shape_fn(16, |i| i as f64 - 4.0);
        let y = layer_norm(&x, &gain, &bias);
        let plain = layer_norm(&x, &Array1::ones(16), &Array1::zeros(16));
        for r in 0..5 {
            let row = plain.row(r);
            let mean = row.sum() / 16.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 16.0;
            assert!(mean.abs() < 1e-12);
            assert!((var.sqrt() - 1.0).abs() < 1e-6);
            for c in 0..16 {
                assert!((y[[r, c]] - (plain[[r, c]] * gain[c] + bias[c])).abs() < 1e-12);
            }
        }
        let constant = Array2::from_elem((2, 4), 3.0);
        let out = layer_norm(&constant, &Array1::ones(4), &Array1::from_elem(4, 0.25));
        assert!(out.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn zero_sublayers_give_double_norm() {
        let cfg = ModelConfig { input_len: 8, seq_len: 2, d_model: 4, n_layers: 1, n_heads: 2, d_k: 2, d_v: 2, d_ff: 6, ..Default::default() };
        let layer = LayerParams { norm1_gain: Array1::ones(4), norm2_gain: Array1::ones(4), ..ModelParams::zeros(&cfg).unwrap().layers.remove(0) };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(3, 4, &mut rng);
        let got = encoder_layer(&x, &layer, 0).unwrap();
        let once = layer_norm(&x, &layer.norm1_gain, &layer.norm1_bias);
        let want = layer_norm(&once, &layer.norm2_gain, &layer.norm2_bias);
        assert!((&got - &want).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn non_finite_input_is_reported() {
        let cfg = ModelConfig { input_len: 8, seq_len: 2, d_model: 4, n_layers: 1, n_heads: 2, d_k: 2, d_v: 2, d_ff: 6, ..Default::default() };
        let layer = tiny_layer(&cfg, 1);
        let mut x = Array2::zeros((2, 4));
        x[[0, 0]] = f64::NAN;
        assert!(matches!(encoder_layer(&x, &layer, 3), Err(Error::NonFiniteActivation { layer: 3 })));
    }

    #[test]
    fn conv_ranges() {
        assert_eq!(conv_range(5, -1), (1, 5));
        assert_eq!(conv_range(5, 0), (0, 5));
        assert_eq!(conv_range(5, 1), (0, 4));
        assert_eq!(conv_range(2, 3), (0, 0));
    }
}
