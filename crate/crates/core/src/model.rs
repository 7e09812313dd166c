//! Dense classifiers trained with softmax cross-entropy.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SoftmaxLinear,
    /// One tanh hidden layer.
    Mlp1Hidden,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `inputs x outputs`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { w: Array2::zeros((inputs, outputs)), b: Array1::zeros(outputs) }
    }

    fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let scale = (1.0 / inputs as f64).sqrt();
        let w = Array2::from_shape_simple_fn((inputs, outputs), || scale * rng.sample::<f64, _>(StandardNormal));
        Self { w, b: Array1::zeros(outputs) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub kind: ModelKind,
    pub layers: Vec<Dense>,
    pub hidden: Option<usize>,
    pub seed: u64,
}

/// Gradients with the same layout as [`ModelState::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Dense>,
}

impl ModelState {
    pub fn new(kind: ModelKind, dim: usize, classes: usize, hidden: usize, seed: u64) -> Result<Self> {
        if dim == 0 || classes < 2 {
            return Err(Error::config("model needs dim >= 1 and at least 2 classes"));
        }
        let mut init = rng::stream(seed, Purpose::ModelInit, 0);
        let (layers, hidden) = match kind {
            ModelKind::SoftmaxLinear => (vec![Dense::init(dim, classes, &mut init)], None),
            ModelKind::Mlp1Hidden => {
                if hidden == 0 {
                    return Err(Error::config("hidden width must be positive"));
                }
                (vec![Dense::init(dim, hidden, &mut init), Dense::init(hidden, classes, &mut init)], Some(hidden))
            }
        };
        Ok(Self { kind, layers, hidden, seed })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().unwrap().w.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All parameters flattened layer by layer, weights (row-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(l.b.iter()).copied()).collect()
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", self.num_params(), values.len())));
        }
        let mut it = values.iter();
        for layer in &mut self.layers {
            for x in layer.w.iter_mut().chain(layer.b.iter_mut()) {
                *x = *it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(l.b.iter()).all(|x| x.is_finite()))
    }

    fn check_input(&self, x: &ArrayView2<'_, f64>, labels: &[usize]) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!("model expects {} features, got {}", self.input_dim(), x.ncols())));
        }
        if x.nrows() != labels.len() {
            return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), labels.len())));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= self.classes()) {
            return Err(Error::Shape(format!("label {y} out of range for {} classes", self.classes())));
        }
        Ok(())
    }

    /// Hidden activations (MLP only) and logits.
    fn forward(&self, x: &ArrayView2<'_, f64>) -> (Option<Array2<f64>>, Array2<f64>) {
        match self.kind {
            ModelKind::SoftmaxLinear => (None, affine(x, &self.layers[0])),
            ModelKind::Mlp1Hidden => {
                let mut h = affine(x, &self.layers[0]);
                h.mapv_inplace(f64::tanh);
                let logits = affine(&h.view(), &self.layers[1]);
                (Some(h), logits)
            }
        }
    }

    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.forward(&x).1
    }

    /// Per-row losses and the gradient of `mean_i(weight_i * loss_i)`.
    pub fn loss_and_gradient(
        &self,
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        weights: Option<&[f64]>,
    ) -> Result<(Vec<f64>, Gradient)> {
        self.check_input(&x, labels)?;
        if let Some(w) = weights {
            if w.len() != labels.len() {
                return Err(Error::Shape(format!("{} weights for {} rows", w.len(), labels.len())));
            }
        }
        let batch = labels.len() as f64;
        let (hidden, logits) = self.forward(&x);
        let (losses, mut delta) = softmax_cross_entropy(&logits, labels);
        for (i, mut row) in delta.axis_iter_mut(Axis(0)).enumerate() {
            let scale = weights.map_or(1.0, |w| w[i]) / batch;
            row *= scale;
        }

        let layers = match (self.kind, hidden) {
            (ModelKind::Mlp1Hidden, Some(h)) => {
                let out = Dense { w: h.t().dot(&delta), b: delta.sum_axis(Axis(0)) };
                let mut dh = delta.dot(&self.layers[1].w.t());
                Zip::from(&mut dh).and(&h).for_each(|g, &a| *g *= 1.0 - a * a);
                let first = Dense { w: x.t().dot(&dh), b: dh.sum_axis(Axis(0)) };
                vec![first, out]
            }
            _ => vec![Dense { w: x.t().dot(&delta), b: delta.sum_axis(Axis(0)) }],
        };
        Ok((losses, Gradient { layers }))
    }
}

impl Gradient {
    pub fn zeros_like(model: &ModelState) -> Self {
        Self { layers: model.layers.iter().map(|l| Dense::zeros(l.w.nrows(), l.w.ncols())).collect() }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(l.b.iter()).copied()).collect()
    }
}

fn affine(x: &ArrayView2<'_, f64>, layer: &Dense) -> Array2<f64> {
    let mut out = x.dot(&layer.w);
    out += &layer.b;
    out
}

/// Per-row cross-entropy and `softmax - onehot`.
fn softmax_cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> (Vec<f64>, Array2<f64>) {
    let mut probs = logits.clone();
    let mut losses = Vec::with_capacity(labels.len());
    for (mut row, &y) in probs.axis_iter_mut(Axis(0)).zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let target = row[y] - max;
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        losses.push((sum.ln() - target).max(0.0));
        row /= sum;
        row[y] -= 1.0;
    }
    (losses, probs)
}

/// Softmax cross-entropy of every row in the batch.
pub fn per_sample_loss(model: &ModelState, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<Vec<f64>> {
    model.check_input(&x, labels)?;
    Ok(softmax_cross_entropy(&model.logits(x), labels).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub mean_loss: f64,
}

const EVAL_CHUNK: usize = 1024;

/// Top-1 accuracy and mean loss over the rows of `dataset` tagged `split`.
pub fn evaluate(model: &ModelState, dataset: &Dataset, split: Split) -> Result<Evaluation> {
    let rows = dataset.rows(split);
    if rows.is_empty() {
        return Err(Error::usage(format!("no {split:?} rows to evaluate")));
    }
    let mut correct = 0usize;
    let mut loss_sum = 0.0;
    for chunk in rows.chunks(EVAL_CHUNK) {
        let contiguous = chunk.last().unwrap() - chunk[0] + 1 == chunk.len();
        let owned;
        let x = if contiguous {
            dataset.features.slice(s![chunk[0]..=*chunk.last().unwrap(), ..])
        } else {
            owned = dataset.features.select(Axis(0), chunk);
            owned.view()
        };
        let labels: Vec<usize> = chunk.iter().map(|&i| dataset.labels[i]).collect();
        model.check_input(&x, &labels)?;
        let logits = model.logits(x);
        let (losses, _) = softmax_cross_entropy(&logits, &labels);
        loss_sum += losses.iter().sum::<f64>();
        for (row, &y) in logits.axis_iter(Axis(0)).zip(&labels) {
            let pred = row.iter().enumerate().fold(0, |best, (j, &z)| if z > row[best] { j } else { best });
            correct += usize::from(pred == y);
        }
    }
    Ok(Evaluation { accuracy: correct as f64 / rows.len() as f64, mean_loss: loss_sum / rows.len() as f64 })
}
