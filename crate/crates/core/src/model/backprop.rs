use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{conv_range, hadamard, sample_forward, Dropout, LayerCache, NormCache, SampleCache};
use super::{LayerParams, ModelParams};
use crate::error::{Error, Result};
use crate::par;

/// Samples per gradient partial. Fixed so the reduction order never depends
/// on the thread count.
pub(crate) const GRAD_CHUNK: usize = 8;

fn outer(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Array2<f64> {
    a.insert_axis(Axis(1)).dot(&b.insert_axis(Axis(0)))
}

fn layer_norm_backward(
    dy: &Array2<f64>,
    cache: &NormCache,
    gain: &Array1<f64>,
    d_gain: &mut Array1<f64>,
    d_bias: &mut Array1<f64>,
) -> Array2<f64> {
    *d_bias += &dy.sum_axis(Axis(0));
    *d_gain += &hadamard(dy, &cache.normalized).sum_axis(Axis(0));
    let d_norm = dy * gain;
    let n = dy.ncols() as f64;
    let mut dx = Array2::zeros(dy.dim());
    for (((mut out, g), xh), &is) in dx
        .rows_mut()
        .into_iter()
        .zip(d_norm.rows())
        .zip(cache.normalized.rows())
        .zip(&cache.inv_std)
    {
        let m1 = g.sum() / n;
        let m2 = g.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / n;
        for ((o, &gv), &xv) in out.iter_mut().zip(g).zip(xh) {
            *o = is * (gv - m1 - xv * m2);
        }
    }
    dx
}

fn layer_backward(dz: &Array2<f64>, cache: &LayerCache, p: &LayerParams, g: &mut LayerParams) -> Array2<f64> {
    let dr2 = layer_norm_backward(dz, &cache.norm2, &p.norm2_gain, &mut g.norm2_gain, &mut g.norm2_bias);
    let d_ff = match &cache.ff_mask {
        Some(m) => hadamard(&dr2, m),
        None => dr2.clone(),
    };
    g.ff_w2 += &cache.ff_act.t().dot(&d_ff);
    g.ff_b2 += &d_ff.sum_axis(Axis(0));
    let mut d_pre = d_ff.dot(&p.ff_w2.t());
    d_pre.zip_mut_with(&cache.ff_pre, |d, &pre| {
        if pre <= 0.0 {
            *d = 0.0;
        }
    });
    g.ff_w1 += &cache.mid.t().dot(&d_pre);
    g.ff_b1 += &d_pre.sum_axis(Axis(0));
    let d_mid = dr2 + d_pre.dot(&p.ff_w1.t());

    let dr1 = layer_norm_backward(&d_mid, &cache.norm1, &p.norm1_gain, &mut g.norm1_gain, &mut g.norm1_bias);
    let d_attn = match &cache.attention_mask {
        Some(m) => hadamard(&dr1, m),
        None => dr1.clone(),
    };
    let mut dx = dr1;
    g.w_out += &cache.attention.concat.t().dot(&d_attn);
    let d_concat = d_attn.dot(&p.w_out.t());
    let x = &cache.input;
    for (h, head) in cache.attention.heads.iter().enumerate() {
        let dv_width = head.v.ncols();
        let d_out = d_concat.slice(s![.., h * dv_width..(h + 1) * dv_width]);
        let d_weights = d_out.dot(&head.v.t());
        let d_v = head.weights.t().dot(&d_out);
        let mut d_scores = hadamard(&head.weights, &d_weights);
        for (mut row, w) in d_scores.rows_mut().into_iter().zip(head.weights.rows()) {
            let dot = row.sum();
            row.zip_mut_with(&w, |d, &wv| *d -= wv * dot);
        }
        let scale = 1.0 / (head.q.ncols() as f64).sqrt();
        let d_q = d_scores.dot(&head.k) * scale;
        let d_k = d_scores.t().dot(&head.q) * scale;
        g.w_query[h] += &x.t().dot(&d_q);
        g.w_key[h] += &x.t().dot(&d_k);
        g.w_value[h] += &x.t().dot(&d_v);
        dx += &d_q.dot(&p.w_query[h].t());
        dx += &d_k.dot(&p.w_key[h].t());
        dx += &d_v.dot(&p.w_value[h].t());
    }
    dx
}

/// Cross-entropy of one sample and its gradients accumulated into `g`.
fn sample_backward(cache: &SampleCache, label: usize, p: &ModelParams, g: &mut ModelParams) -> f64 {
    let logits = &cache.logits;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let loss = lse - logits[label];

    let mut d_logits = logits.mapv(|v| (v - lse).exp());
    d_logits[label] -= 1.0;
    g.out_b += &d_logits;
    g.out_w += &outer(cache.pooled.view(), d_logits.view());
    let d_pooled = p.out_w.dot(&d_logits);

    let t_len = cache.encoded.nrows();
    g.conv_b += &d_pooled;
    let d_conv_row = &d_pooled / t_len as f64;
    let d_conv = d_conv_row.broadcast((t_len, d_conv_row.len())).expect("row broadcast").to_owned();
    let half = (p.config.conv_kernel / 2) as isize;
    let mut dz = Array2::zeros(cache.encoded.dim());
    for j in 0..p.config.conv_kernel {
        let offset = j as isize - half;
        let (lo, hi) = conv_range(t_len, offset);
        if lo >= hi {
            continue;
        }
        let (slo, shi) = ((lo as isize + offset) as usize, (hi as isize + offset) as usize);
        let src = cache.encoded.slice(s![slo..shi, ..]);
        let dc = d_conv.slice(s![lo..hi, ..]);
        let mut gw = g.conv_w.index_axis_mut(Axis(0), j);
        gw += &src.t().dot(&dc);
        let mut dst = dz.slice_mut(s![slo..shi, ..]);
        dst += &dc.dot(&p.conv_w.index_axis(Axis(0), j).t());
    }

    for ((cache_l, p_l), g_l) in cache.layers.iter().zip(&p.layers).zip(g.layers.iter_mut()).rev() {
        dz = layer_backward(&dz, cache_l, p_l, g_l);
    }
    if let Some(m) = &cache.embed_mask {
        dz = hadamard(&dz, m);
    }
    g.embed_w += &cache.tokens.t().dot(&dz);
    g.embed_b += &dz.sum_axis(Axis(0));
    loss
}

fn check_labels(x: &Array2<f64>, labels: &[usize], params: &ModelParams) -> Result<()> {
    if x.nrows() != labels.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.nrows(), labels.len())));
    }
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= params.config.n_classes) {
        return Err(Error::invalid(format!("label {l} out of range")));
    }
    Ok(())
}

/// Summed loss and summed gradients over `rows`. With `dropout_seed`, chunk
/// `i` draws its masks from stream `i` of that seed.
pub(crate) fn summed_gradients(
    x: &Array2<f64>,
    labels: &[usize],
    rows: &[usize],
    params: &ModelParams,
    dropout_seed: Option<u64>,
) -> Result<(f64, ModelParams)> {
    let chunks: Vec<(usize, &[usize])> = rows.chunks(GRAD_CHUNK).enumerate().collect();
    let partials = par::map(&chunks, |&(ci, idx)| -> Result<(f64, ModelParams)> {
        let mut g = params.zeros_like();
        let mut rng = dropout_seed.map(|s| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            r.set_stream(ci as u64);
            r
        });
        let mut loss = 0.0;
        for &i in idx {
            let mut dropout = rng.as_mut().map(|rng| Dropout { rng, p: params.config.dropout });
            let cache = sample_forward(x.row(i), params, dropout.as_mut())?;
            loss += sample_backward(&cache, labels[i], params, &mut g);
        }
        Ok((loss, g))
    });
    let mut total = params.zeros_like();
    let mut loss = 0.0;
    for p in partials {
        let (l, g) = p?;
        loss += l;
        total.add_assign(&g);
    }
    Ok((loss, total))
}

/// Mean cross-entropy over the batch and its gradient for every tensor.
/// Dropout is off.
pub fn loss_and_gradients(x: &Array2<f64>, labels: &[usize], params: &ModelParams) -> Result<(f64, ModelParams)> {
    check_labels(x, labels, params)?;
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let (sum, mut g) = summed_gradients(x, labels, &rows, params, None)?;
    let n = x.nrows() as f64;
    let loss = sum / n;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    g.scale(1.0 / n);
    Ok((loss, g))
}

/// Mean cross-entropy without gradients.
pub fn mean_loss(x: &Array2<f64>, labels: &[usize], params: &ModelParams) -> Result<f64> {
    check_labels(x, labels, params)?;
    let logits = super::layers::logits(x, params)?;
    let mut sum = 0.0;
    for (row, &l) in logits.rows().into_iter().zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        sum += max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() - row[l];
    }
    let loss = sum / x.nrows() as f64;
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFiniteLoss)
    }
}

/// Agreement between analytic and central-difference gradients for one tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub tensor: String,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
    /// `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖)`, 0 when both vanish.
    pub relative_error: f64,
    pub max_abs_error: f64,
}

/// Compare every gradient entry against `(L(θ+h) − L(θ−h)) / 2h`.
pub fn gradient_check(params: &ModelParams, x: &Array2<f64>, labels: &[usize], step: f64) -> Result<Vec<GradientCheck>> {
    if !(step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let (_, analytic) = loss_and_gradients(x, labels, params)?;
    let mut probe = params.clone();
    let mut out = Vec::new();
    for (ti, (name, _, grad)) in analytic.tensors().into_iter().enumerate() {
        let mut diff2 = 0.0;
        let mut a2 = 0.0;
        let mut n2 = 0.0;
        let mut max_abs: f64 = 0.0;
        for (j, &a) in grad.iter().enumerate() {
            let orig = probe.tensors_mut()[ti][j];
            probe.tensors_mut()[ti][j] = orig + step;
            let up = mean_loss(x, labels, &probe)?;
            probe.tensors_mut()[ti][j] = orig - step;
            let down = mean_loss(x, labels, &probe)?;
            probe.tensors_mut()[ti][j] = orig;
            let numeric = (up - down) / (2.0 * step);
            diff2 += (a - numeric).powi(2);
            a2 += a * a;
            n2 += numeric * numeric;
            max_abs = max_abs.max((a - numeric).abs());
        }
        let denom = a2.sqrt().max(n2.sqrt());
        out.push(GradientCheck {
            tensor: name,
            analytic_norm: a2.sqrt(),
            numeric_norm: n2.sqrt(),
            relative_error: if denom > 0.0 { diff2.sqrt() / denom } else { 0.0 },
            max_abs_error: max_abs,
        });
    }
    Ok(out)
}
