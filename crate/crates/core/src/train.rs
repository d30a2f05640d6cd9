//! Mini-batch Adam training with validation-loss early stopping.

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::eval::stratified_holdout;
use crate::model::{Document, HiCnnLstmModel};
use crate::rng::{self, stream};
use crate::tensor::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(shapes: &[usize], learning_rate: f64) -> Self {
        AdamState {
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_model(model: &HiCnnLstmModel, learning_rate: f64) -> Self {
        let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
        Self::new(&shapes, learning_rate)
    }
}

/// One bias-corrected Adam update:
/// `m ← β1 m + (1-β1) g`, `v ← β2 v + (1-β2) g²`,
/// `θ ← θ - lr · m̂ / (√v̂ + ε)` with `m̂ = m / (1-β1ᵗ)`, `v̂ = v / (1-β2ᵗ)`.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::Contract(format!(
            "adam_step: {} parameter tensors, {} gradients, {} accumulators",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.first_moment[i].len() {
            return Err(Error::Contract(format!(
                "adam_step: tensor {i} has {} values, gradient {}, accumulator {}",
                p.len(),
                g.len(),
                state.first_moment[i].len()
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        for j in 0..p.len() {
            let gj = g[j];
            m[j] = b1 * m[j] + (1.0 - b1) * gj;
            v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            p[j] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            max_epochs: 50,
            patience: 5,
            val_fraction: 0.1,
            learning_rate: 1e-3,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size and max_epochs must be positive".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 0.5) {
            return Err(Error::Config(format!("val_fraction must be in (0, 0.5), got {}", self.val_fraction)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch with the lowest validation loss (earliest on ties).
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.records.get(self.best_epoch.checked_sub(1)?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,val_acc\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{:.10},{:.10},{:.6}", r.epoch, r.train_loss, r.val_loss, r.val_acc);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Tracks the best validation loss and signals a stop after `patience`
/// consecutive epochs without strict improvement.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best_loss: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best_loss {
            self.best_loss = val_loss;
            self.best_epoch = epoch;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

pub const MIN_TRAIN_DOCS: usize = 10;

/// Trains `model` on `docs` and returns the parameters from the epoch with
/// the lowest validation loss. The validation slice is a stratified,
/// seeded `val_fraction` of `docs`; the remainder is shuffled every epoch.
pub fn fit(
    model: HiCnnLstmModel,
    docs: &[&Document],
    lookup: &Matrix,
    config: &TrainConfig,
) -> Result<(HiCnnLstmModel, TrainHistory)> {
    fit_observed(model, docs, lookup, config, |_, _| {})
}

/// [`fit`], calling `observer` with each epoch's record and the current
/// weights. The observer cannot change the course of training.
pub fn fit_observed(
    mut model: HiCnnLstmModel,
    docs: &[&Document],
    lookup: &Matrix,
    config: &TrainConfig,
    mut observer: impl FnMut(&EpochRecord, &HiCnnLstmModel),
) -> Result<(HiCnnLstmModel, TrainHistory)> {
    config.validate()?;
    if docs.len() < MIN_TRAIN_DOCS {
        return Err(Error::Config(format!(
            "training set has {} documents; at least {MIN_TRAIN_DOCS} are needed",
            docs.len()
        )));
    }
    let labels = docs
        .iter()
        .map(|d| d.label.ok_or_else(|| Error::Contract("training document has no label".into())))
        .collect::<Result<Vec<usize>>>()?;

    let mut split_rng = rng::seeded(config.seed, stream::VAL_SPLIT, 0);
    let (train_idx, val_idx) = stratified_holdout(&labels, config.val_fraction, &mut split_rng)?;
    let val_docs: Vec<&Document> = val_idx.iter().map(|&i| docs[i]).collect();

    let mut shuffle_rng = rng::seeded(config.seed, stream::SHUFFLE, 0);
    let mut adam = AdamState::for_model(&model, config.learning_rate);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut history = TrainHistory::default();
    let mut best = model.clone();
    let mut order = train_idx.clone();
    let mut batch_counter = 0u64;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Document> = chunk.iter().map(|&i| docs[i]).collect();
            let dropout_seed = rng::derive_seed(config.seed, stream::DROPOUT, batch_counter);
            batch_counter += 1;
            let (loss, grads) = model.loss_and_grads(&batch, lookup, Some(dropout_seed))?;
            loss_sum += loss * batch.len() as f64;
            let mut params = model.tensors_mut();
            adam_step(&mut params, &grads.tensors(), &mut adam)?;
        }
        let train_loss = loss_sum / order.len() as f64;
        let (val_loss, val_acc) = model.evaluate(&val_docs, lookup)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_acc,
        };
        observer(&record, &model);
        history.records.push(record);
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best = model.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }
    history.best_epoch = stopper.best_epoch();
    Ok((best, history))
}
