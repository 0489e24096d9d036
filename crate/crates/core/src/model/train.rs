use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backprop::summed_gradients;
use super::{predict, ModelConfig, ModelParams, TrainConfig};
use crate::error::{Error, Result};

/// Feature rows with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<usize>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::invalid(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn class_counts(&self, n_classes: usize) -> Vec<usize> {
        let mut c = vec![0; n_classes];
        for &l in &self.y {
            if l < n_classes {
                c[l] += 1;
            }
        }
        c
    }
}

/// Per-feature affine rescaling fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation per column; constant columns
    /// keep scale 1.
    pub fn fit(x: &Array2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let scale = x
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(col, &m)| {
                let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean: mean.to_vec(), scale })
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::invalid(format!(
                "standardizer fitted on {} columns, got {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainingLog {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for e in &self.epochs {
            wtr.serialize(e)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let epochs: Vec<EpochRecord> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        let best_epoch = epochs
            .iter()
            .fold((0, f64::NEG_INFINITY), |b, e| if e.val_accuracy > b.1 { (e.epoch, e.val_accuracy) } else { b })
            .0;
        Ok(Self { epochs, best_epoch })
    }
}

pub fn accuracy(params: &ModelParams, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let pred = predict(&data.x, params)?;
    let hits = pred.iter().zip(&data.y).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / data.len() as f64)
}

struct Adam {
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

impl Adam {
    fn new(p: &ModelParams) -> Self {
        Self { m: p.zeros_like(), v: p.zeros_like(), t: 0 }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &ModelParams, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let grads = grads.tensors();
        for (((p, m), v), (_, _, g)) in params
            .tensors_mut()
            .into_iter()
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
            .zip(grads)
        {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                p[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.adam_eps);
            }
        }
    }
}

/// Mini-batch Adam on cross-entropy. Returns the parameters of the epoch with
/// the best validation accuracy (earliest on ties) and the per-epoch log.
///
/// Parameter init uses `cfg.seed`; shuffling and dropout use separate streams
/// of the same seed, so two calls with equal inputs give identical results.
pub fn train(
    train_set: &Dataset,
    val_set: &Dataset,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainingLog)> {
    let params = ModelParams::init(model, cfg.seed)?;
    train_from(params, train_set, val_set, cfg)
}

/// [`train`] starting from given parameters.
pub fn train_from(
    mut params: ModelParams,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainingLog)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if val_set.is_empty() {
        return Err(Error::invalid("validation set is empty"));
    }
    let n_classes = params.config.n_classes;
    if train_set.y.iter().chain(&val_set.y).any(|&l| l >= n_classes) {
        return Err(Error::invalid("label out of range"));
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(2);

    let mut adam = Adam::new(&params);
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, ModelParams)> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let seed = dropout_rng.next_u64();
            let (sum, mut grads) = summed_gradients(&train_set.x, &train_set.y, batch, &params, Some(seed))?;
            let batch_loss = sum / batch.len() as f64;
            if !batch_loss.is_finite() || batch_loss > cfg.divergence_loss {
                return Err(Error::DivergedTraining { epoch, loss: batch_loss, log });
            }
            loss_sum += sum;
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut params, &grads, cfg);
            if !params.is_finite() {
                return Err(Error::DivergedTraining { epoch, loss: f64::NAN, log });
            }
        }
        let val_accuracy = accuracy(&params, val_set)?;
        let train_loss = loss_sum / train_set.len() as f64;
        log::debug!("epoch {epoch}: loss {train_loss:.5}, val accuracy {val_accuracy:.4}");
        log.epochs.push(EpochRecord { epoch, train_loss, val_accuracy });
        if best.as_ref().map_or(true, |(b, _)| val_accuracy > *b) {
            best = Some((val_accuracy, params.clone()));
            log.best_epoch = epoch;
        }
    }
    let (_, best_params) = best.expect("at least one epoch");
    Ok((best_params, log))
}
