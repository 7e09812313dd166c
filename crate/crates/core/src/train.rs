//! Mini-batch SGD with momentum and weight decay.

use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{Gradient, ModelState};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.05, batch_size: 64, epochs: 30, momentum: 0.9, weight_decay: 0.01, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config(format!("learning_rate must be finite and >= 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay must be >= 0"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        Ok(())
    }
}

/// Optimiser state carried across epochs.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    velocity: Gradient,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, model: &ModelState) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { velocity: Gradient::zeros_like(model), cfg })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// One pass over `selected` in an epoch-seeded shuffled order.
    ///
    /// Returns the loss of every visited row, measured in the forward pass
    /// before that batch's update. `weights`, when given, is aligned with
    /// `selected` and scales each row's contribution to the gradient.
    pub fn sgd_epoch(
        &mut self,
        model: &mut ModelState,
        dataset: &Dataset,
        selected: &[usize],
        weights: Option<&[f64]>,
        epoch: usize,
    ) -> Result<Vec<(usize, f64)>> {
        if selected.is_empty() {
            return Err(Error::usage("cannot train on an empty selection"));
        }
        if let Some(w) = weights {
            if w.len() != selected.len() {
                return Err(Error::Shape(format!("{} weights for {} selected rows", w.len(), selected.len())));
            }
        }
        if let Some(&id) = selected.iter().find(|&&id| id >= dataset.len()) {
            return Err(Error::IdOutOfRange { id, len: dataset.len() });
        }

        let mut order: Vec<usize> = (0..selected.len()).collect();
        order.shuffle(&mut rng::stream(self.cfg.seed, Purpose::Shuffle, epoch as u64));

        let mut observations = Vec::with_capacity(selected.len());
        for (batch_idx, batch) in order.chunks(self.cfg.batch_size).enumerate() {
            let rows: Vec<usize> = batch.iter().map(|&i| selected[i]).collect();
            let x = dataset.features.select(Axis(0), &rows);
            let labels: Vec<usize> = rows.iter().map(|&r| dataset.labels[r]).collect();
            let batch_weights: Option<Vec<f64>> = weights.map(|w| batch.iter().map(|&i| w[i]).collect());

            let (losses, grad) = model.loss_and_gradient(x.view(), &labels, batch_weights.as_deref())?;
            if let Some((row, loss)) = rows.iter().zip(&losses).find(|(_, l)| !l.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_idx,
                    detail: format!("non-finite loss {loss} on row {row}"),
                });
            }
            observations.extend(rows.iter().copied().zip(losses));
            self.step(model, &grad);
            if !model.is_finite() {
                return Err(Error::Diverged { epoch, batch: batch_idx, detail: "non-finite parameters".into() });
            }
        }
        Ok(observations)
    }

    fn step(&mut self, model: &mut ModelState, grad: &Gradient) {
        let TrainConfig { learning_rate: lr, momentum, weight_decay: wd, .. } = self.cfg;
        for ((layer, g), v) in model.layers.iter_mut().zip(&grad.layers).zip(&mut self.velocity.layers) {
            // weight decay applies to weights, not biases
            ndarray::Zip::from(&mut layer.w).and(&g.w).and(&mut v.w).for_each(|p, &g, v| {
                *v = momentum * *v + g + wd * *p;
                *p -= lr * *v;
            });
            ndarray::Zip::from(&mut layer.b).and(&g.b).and(&mut v.b).for_each(|p, &g, v| {
                *v = momentum * *v + g;
                *p -= lr * *v;
            });
        }
    }
}
