//! Datasets: a synthetic classification generator and a CSV loader.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    /// Labels before noise injection, for synthetic data.
    pub clean_labels: Option<Vec<usize>>,
    pub split: Vec<Split>,
    pub num_classes: usize,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn rows(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == split).collect()
    }

    /// Rows `rows` as a new dataset, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            clean_labels: self.clean_labels.as_ref().map(|c| rows.iter().map(|&i| c[i]).collect()),
            split: rows.iter().map(|&i| self.split[i]).collect(),
            num_classes: self.num_classes,
            provenance: self.provenance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if n == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if self.features.nrows() != n || self.split.len() != n {
            return Err(Error::Shape(format!(
                "{} feature rows, {} labels, {} split tags",
                self.features.nrows(),
                n,
                self.split.len()
            )));
        }
        if let Some(i) = self.labels.iter().position(|&y| y >= self.num_classes) {
            return Err(Error::Data(format!("row {i}: label {} out of range", self.labels[i])));
        }
        if self.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("features contain non-finite values".into()));
        }
        Ok(())
    }
}

/// Gaussian class blobs with near-duplicates and label noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub classes: usize,
    pub dim: usize,
    pub base_per_class: usize,
    /// Copies of every base training sample, the original included.
    pub duplication_factor: usize,
    /// Std-dev of the jitter added to each copy.
    pub duplicate_jitter: f64,
    /// Fraction of training labels flipped to a wrong class.
    pub label_noise: f64,
    /// Std-dev of the class centres around the origin.
    pub separation: f64,
    pub validation_per_class: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: 10,
            dim: 20,
            base_per_class: 500,
            duplication_factor: 4,
            duplicate_jitter: 0.05,
            label_noise: 0.1,
            separation: 0.6,
            validation_per_class: 200,
            seed: 2024,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.dim == 0 || self.base_per_class == 0 || self.duplication_factor == 0 {
            return Err(Error::config(
                "synthetic spec needs >= 2 classes and positive dim, base count and duplication",
            ));
        }
        if self.validation_per_class == 0 {
            return Err(Error::config("validation_per_class must be positive"));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::config(format!("label_noise must lie in [0, 1), got {}", self.label_noise)));
        }
        if !(self.duplicate_jitter >= 0.0) || !(self.separation > 0.0) {
            return Err(Error::config("duplicate_jitter must be >= 0 and separation > 0"));
        }
        Ok(())
    }

    pub fn train_rows(&self) -> usize {
        self.classes * self.base_per_class * self.duplication_factor
    }
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let (c, d) = (spec.classes, spec.dim);
    let n_train = spec.train_rows();
    let n_val = c * spec.validation_per_class;
    let n = n_train + n_val;

    let mut centre_rng = rng::stream(spec.seed, Purpose::Synthetic, 0);
    let centres: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..d).map(|_| spec.separation * centre_rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();

    let mut features = Array2::<f64>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut split = Vec::with_capacity(n);

    let mut train_rng = rng::stream(spec.seed, Purpose::Synthetic, 1);
    let mut row = 0;
    for (class, centre) in centres.iter().enumerate() {
        for _ in 0..spec.base_per_class {
            let base: Vec<f64> = centre.iter().map(|&m| m + train_rng.sample::<f64, _>(StandardNormal)).collect();
            for copy in 0..spec.duplication_factor {
                for (j, &b) in base.iter().enumerate() {
                    let jitter = if copy == 0 {
                        0.0
                    } else {
                        spec.duplicate_jitter * train_rng.sample::<f64, _>(StandardNormal)
                    };
                    features[[row, j]] = b + jitter;
                }
                labels.push(class);
                split.push(Split::Train);
                row += 1;
            }
        }
    }

    let mut val_rng = rng::stream(spec.seed, Purpose::Synthetic, 2);
    for (class, centre) in centres.iter().enumerate() {
        for _ in 0..spec.validation_per_class {
            for (j, &m) in centre.iter().enumerate() {
                features[[row, j]] = m + val_rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(class);
            split.push(Split::Validation);
            row += 1;
        }
    }

    let clean = labels.clone();
    let flips = (spec.label_noise * n_train as f64).round() as usize;
    let mut noise_rng = rng::stream(spec.seed, Purpose::Synthetic, 3);
    let mut flipped = rand::seq::index::sample(&mut noise_rng, n_train, flips).into_vec();
    flipped.sort_unstable();
    for i in flipped {
        let offset = noise_rng.random_range(1..c);
        labels[i] = (labels[i] + offset) % c;
    }

    let dataset = Dataset {
        features,
        labels,
        clean_labels: Some(clean),
        split,
        num_classes: c,
        provenance: Provenance::Synthetic,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Loads a CSV with a header row.
///
/// Every column except `label_column` (and an optional `split` column with
/// values `train` / `validation`) is a numeric feature. Labels are mapped to
/// `0..C` by order of first appearance. Without a `split` column every row is
/// a training row.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let csv_err = |line: u64, msg: String| Error::Csv { path: path.to_path_buf(), line, msg };

    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e.to_string())),
        _ => csv_err(1, e.to_string()),
    })?;
    let headers = reader.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();

    let mut seen = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        if let Some(prev) = seen.insert(name.trim(), i) {
            return Err(csv_err(1, format!("duplicate column name {name:?} (columns {} and {})", prev + 1, i + 1)));
        }
    }
    let label_idx =
        *seen.get(label_column).ok_or_else(|| csv_err(1, format!("no label column named {label_column:?}")))?;
    let split_idx = seen.get("split").copied().filter(|&i| i != label_idx);
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != label_idx && Some(i) != split_idx).collect();
    if feature_idx.is_empty() {
        return Err(csv_err(1, "no feature columns".into()));
    }

    let mut values: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut split = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for &i in &feature_idx {
            let raw = record[i].trim();
            let x: f64 =
                raw.parse().map_err(|_| csv_err(line, format!("column {:?}: {raw:?} is not a number", &headers[i])))?;
            if !x.is_finite() {
                return Err(csv_err(line, format!("column {:?}: non-finite value {raw:?}", &headers[i])));
            }
            values.push(x);
        }
        let next = label_ids.len();
        labels.push(*label_ids.entry(record[label_idx].trim().to_string()).or_insert(next));
        split.push(match split_idx.map(|i| record[i].trim()) {
            None | Some("train") => Split::Train,
            Some("validation") | Some("val") => Split::Validation,
            Some(other) => return Err(csv_err(line, format!("unknown split {other:?}"))),
        });
    }
    if labels.is_empty() {
        return Err(csv_err(2, "no data rows".into()));
    }
    let features =
        Array2::from_shape_vec((labels.len(), feature_idx.len()), values).map_err(|e| Error::Shape(e.to_string()))?;
    let dataset = Dataset {
        features,
        labels,
        clean_labels: None,
        split,
        num_classes: label_ids.len(),
        provenance: Provenance::Csv,
    };
    dataset.validate()?;
    Ok(dataset)
}
