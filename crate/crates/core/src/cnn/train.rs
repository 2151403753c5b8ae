use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{nmse_db, EnhancerModel};
use crate::rng::{purpose, stream};
use crate::{ComplexMatrix, Error, Result};

/// One training pair: normalised LS estimate and normalised true CSI.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: ComplexMatrix,
    pub target: ComplexMatrix,
}

/// Adam hyper-parameters and the epoch/batch schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Shuffling stream; set by the caller, not read from config files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            lr_decay: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epoch: usize,
    pub train_nmse_db: f64,
    pub eval_nmse_db: f64,
}

/// Summed loss and summed flat gradient over a batch.
///
/// Implementations must reduce in sample order so results do not depend
/// on scheduling.
pub trait BatchGradient {
    fn batch_gradient(&self, model: &EnhancerModel, batch: &[&Sample]) -> Result<(f64, Vec<f64>)>;

    /// Energy-weighted NMSE of the model over `samples`, as `(Σ err, Σ energy)`.
    fn evaluate(&self, model: &EnhancerModel, samples: &[Sample]) -> Result<(f64, f64)> {
        let mut err = 0.0;
        let mut energy = 0.0;
        for s in samples {
            err += s.target.sub(&model.forward(&s.input)?).frobenius_norm_sqr();
            energy += s.target.frobenius_norm_sqr();
        }
        Ok((err, energy))
    }
}

/// Single-threaded reference implementation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl BatchGradient for Sequential {
    fn batch_gradient(&self, model: &EnhancerModel, batch: &[&Sample]) -> Result<(f64, Vec<f64>)> {
        let mut grad = model.zeros_like();
        let mut loss = 0.0;
        for s in batch {
            loss += model.accumulate_gradient(&s.input, &s.target, &mut grad)?;
        }
        Ok((loss, grad.to_flat()))
    }
}

/// Adam state over the flat parameter vector.
#[derive(Clone, Debug)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(len: usize, cfg: &TrainConfig) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
    }
}

/// Mini-batch Adam on the mean batch loss. Batches are reshuffled every
/// epoch from the stream `(seed, SHUFFLE, epoch)`; after each epoch both
/// sets are evaluated.
pub fn train(
    model: &EnhancerModel,
    train_set: &[Sample],
    eval_set: &[Sample],
    cfg: &TrainConfig,
    engine: &dyn BatchGradient,
) -> Result<(EnhancerModel, Vec<TrainRecord>)> {
    if train_set.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let mut model = model.clone();
    let mut params = model.to_flat();
    let mut adam = Adam::new(params.len(), cfg);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream(cfg.seed, &[purpose::SHUFFLE, epoch as u64]));
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (_, mut grad) = engine.batch_gradient(&model, &batch)?;
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut params, &grad);
            model.load_flat(&params)?;
        }
        adam.lr *= cfg.lr_decay;
        let (e, n) = engine.evaluate(&model, train_set)?;
        let train_nmse_db = nmse_db(e, n);
        let eval_nmse_db = if eval_set.is_empty() {
            f64::NAN
        } else {
            let (e, n) = engine.evaluate(&model, eval_set)?;
            nmse_db(e, n)
        };
        if !train_nmse_db.is_finite() {
            return Err(Error::Degenerate(alloc::format!("training diverged at epoch {epoch}")));
        }
        records.push(TrainRecord {
            epoch,
            train_nmse_db,
            eval_nmse_db,
        });
    }
    Ok((model, records))
}
