//! Config-driven experiment runs.
//!
//! A run wires dataset → model → selection policy → SGD and writes one
//! metrics JSONL file per seed. Every line is a JSON object with a `type`
//! key:
//!
//! - `epoch`: `epoch`, `phase`, `selected`, `subset_size`, `rho_t`,
//!   `rho_bar` (cumulative through this epoch), `window` (`{n,w,s,e}` or
//!   null), `train_loss`, `val_acc`, `val_loss`.
//! - `footer`: `status`, `method`, `seed`, `epochs`, `dataset_size`,
//!   `rho_bar`, `final_acc`, `final_val_loss`, `config_hash`.
//! - `aborted`: `epoch`, `error`; written instead of a footer when a run
//!   fails part-way.
//!
//! Wall-clock figures go to a separate `timing_seed<N>.json` so the metrics
//! file is a pure function of the configuration.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{plan_epoch_baseline, BaselineConfig, BaselineMethod};
use crate::data::{generate_synthetic, load_csv, Dataset, Split, SynthSpec};
use crate::error::{Error, Result};
use crate::ledger::LossLedger;
use crate::model::{evaluate, ModelKind, ModelState};
use crate::scheduler::{
    cumulative_pruned_from_sizes, estimate_time_saving, EpochPlan, Phase, SchedulerConfig, SetaScheduler, WindowState,
};
use crate::train::{TrainConfig, Trainer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Seta,
    Full,
    StaticRandom,
    DynamicRandom,
    MeanLossPrune,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Seta => "seta",
            MethodName::Full => "full",
            MethodName::StaticRandom => "static_random",
            MethodName::DynamicRandom => "dynamic_random",
            MethodName::MeanLossPrune => "mean_loss_prune",
        }
    }

    pub fn baseline(self) -> Option<BaselineMethod> {
        match self {
            MethodName::Seta => None,
            MethodName::Full => Some(BaselineMethod::Full),
            MethodName::StaticRandom => Some(BaselineMethod::StaticRandom),
            MethodName::DynamicRandom => Some(BaselineMethod::DynamicRandom),
            MethodName::MeanLossPrune => Some(BaselineMethod::MeanLossPrune),
        }
    }
}

impl std::str::FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::config(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SynthSpec),
    Csv {
        path: PathBuf,
        #[serde(default = "default_label_column")]
        label_column: String,
    },
}

fn default_label_column() -> String {
    "label".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: ModelKind::Mlp1Hidden, hidden: 64 }
    }
}

/// Optimiser settings; epochs and seed come from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            momentum: t.momentum,
            weight_decay: t.weight_decay,
        }
    }
}

/// SeTa hyperparameters; epochs and seed come from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SetaSection {
    pub r: f64,
    pub k: usize,
    pub alpha: f64,
    pub ordering: crate::scheduler::CurriculumOrder,
    pub window_policy: crate::scheduler::WindowPolicy,
    pub anneal_fraction: f64,
    pub clusterer: crate::clustering::ClusterMethod,
}

impl Default for SetaSection {
    fn default() -> Self {
        let s = SchedulerConfig::default();
        Self {
            r: s.r,
            k: s.k,
            alpha: s.alpha,
            ordering: s.ordering,
            window_policy: s.window_policy,
            anneal_fraction: s.anneal_fraction,
            clusterer: s.clusterer,
        }
    }
}

/// Baseline hyperparameters; the method is [`ExperimentConfig::method`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub r: f64,
    pub p: f64,
    pub rescale: bool,
    pub anneal_fraction: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let b = BaselineConfig::default();
        Self { r: b.r, p: b.p, rescale: b.rescale, anneal_fraction: b.anneal_fraction }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub method: MethodName,
    pub seta: SetaSection,
    pub baseline: BaselineSection,
    pub epochs: usize,
    /// One run per seed; the seed drives model init, shuffling and selection.
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic(SynthSpec::default()),
            model: ModelConfig::default(),
            optimizer: OptimizerConfig::default(),
            method: MethodName::Seta,
            seta: SetaSection::default(),
            baseline: BaselineSection::default(),
            epochs: 30,
            seeds: vec![1],
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid experiment config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn scheduler_config(&self, seed: u64) -> SchedulerConfig {
        let s = &self.seta;
        SchedulerConfig {
            r: s.r,
            k: s.k,
            alpha: s.alpha,
            ordering: s.ordering,
            window_policy: s.window_policy,
            anneal_fraction: s.anneal_fraction,
            epochs: self.epochs,
            seed,
            clusterer: s.clusterer,
        }
    }

    pub fn baseline_config(&self, seed: u64) -> Option<BaselineConfig> {
        let b = &self.baseline;
        self.method.baseline().map(|method| BaselineConfig {
            method,
            r: b.r,
            p: b.p,
            rescale: b.rescale,
            anneal_fraction: b.anneal_fraction,
            epochs: self.epochs,
            seed,
        })
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let o = &self.optimizer;
        TrainConfig {
            learning_rate: o.learning_rate,
            batch_size: o.batch_size,
            momentum: o.momentum,
            weight_decay: o.weight_decay,
            epochs: self.epochs,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seed list is empty"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if let DatasetSource::Synthetic(spec) = &self.dataset {
            spec.validate()?;
        }
        if self.model.kind == ModelKind::Mlp1Hidden && self.model.hidden == 0 {
            return Err(Error::config("hidden width must be positive"));
        }
        self.train_config(0).validate()?;
        match self.baseline_config(0) {
            Some(b) => b.validate(),
            None => self.scheduler_config(0).validate(),
        }
    }

    /// Stable digest of everything that affects a run with `seed`.
    ///
    /// The output directory is excluded so that identical runs written to
    /// different places hash the same.
    pub fn run_hash(&self, seed: u64) -> String {
        let resolved = ExperimentConfig { seeds: vec![seed], output_dir: PathBuf::new(), ..self.clone() };
        let bytes = serde_json::to_vec(&resolved).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSource::Synthetic(spec) => generate_synthetic(spec),
            DatasetSource::Csv { path, label_column } => load_csv(path, label_column),
        }
    }
}

/// Training and evaluation views of a dataset.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    /// Validation rows; falls back to the training rows when there are none.
    pub eval: Dataset,
    pub eval_split: Split,
}

impl PreparedData {
    pub fn new(dataset: &Dataset) -> Result<Self> {
        let train_rows = dataset.rows(Split::Train);
        if train_rows.is_empty() {
            return Err(Error::Data("dataset has no training rows".into()));
        }
        let train = dataset.subset(&train_rows);
        let val_rows = dataset.rows(Split::Validation);
        let (eval, eval_split) = if val_rows.is_empty() {
            (train.clone(), Split::Train)
        } else {
            (dataset.subset(&val_rows), Split::Validation)
        };
        Ok(Self { train, eval, eval_split })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub selected: usize,
    pub subset_size: usize,
    pub rho_t: f64,
    pub rho_bar: f64,
    pub window: Option<WindowState>,
    pub train_loss: f64,
    pub val_acc: f64,
    pub val_loss: f64,
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFooter {
    pub status: String,
    pub method: MethodName,
    pub seed: u64,
    pub epochs: usize,
    pub dataset_size: usize,
    pub rho_bar: f64,
    pub final_acc: f64,
    pub final_val_loss: f64,
    pub config_hash: String,
    /// Time-saving estimate from measured per-sample costs; kept out of the
    /// metrics file because it depends on wall-clock time.
    #[serde(skip)]
    pub time_saving: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MetricsLine {
    Epoch(EpochRecord),
    Footer(RunFooter),
    Aborted { epoch: usize, error: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub records: Vec<EpochRecord>,
    pub footer: RunFooter,
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    wall_ms: Vec<f64>,
    o_data: f64,
    o_model: f64,
    time_saving: f64,
}

pub fn metrics_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("metrics_seed{seed}.jsonl"))
}

/// Parses a metrics file, ignoring a trailing partial line.
pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsLine>> {
    let text = fs::read_to_string(path)?;
    let complete = match text.rfind('\n') {
        Some(end) => &text[..end],
        None => "",
    };
    complete.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(Error::from)).collect()
}

enum Policy {
    Seta(SetaScheduler),
    Baseline(BaselineConfig),
}

impl Policy {
    fn plan(&mut self, ledger: &LossLedger, epoch: usize) -> Result<EpochPlan> {
        match self {
            Policy::Seta(s) => s.plan(ledger, epoch),
            Policy::Baseline(cfg) => plan_epoch_baseline(cfg, ledger, epoch),
        }
    }
}

struct MetricsWriter {
    out: Option<BufWriter<File>>,
}

impl MetricsWriter {
    fn write(&mut self, line: &MetricsLine) -> Result<()> {
        if let Some(out) = &mut self.out {
            serde_json::to_writer(&mut *out, line)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        Ok(())
    }
}

/// Runs one seed. Files are written under `out_dir` when it is given.
pub fn run_seed(cfg: &ExperimentConfig, data: &PreparedData, seed: u64, out_dir: Option<&Path>) -> Result<RunMetrics> {
    let mut writer = MetricsWriter {
        out: match out_dir {
            Some(dir) => Some(BufWriter::new(File::create(metrics_path(dir, seed))?)),
            None => None,
        },
    };
    let mut current_epoch = 0;
    let result = run_epochs(cfg, data, seed, &mut writer, &mut current_epoch);
    match result {
        Ok((metrics, timing)) => {
            if let Some(dir) = out_dir {
                let path = dir.join(format!("timing_seed{seed}.json"));
                fs::write(path, serde_json::to_vec_pretty(&timing)?)?;
            }
            Ok(metrics)
        }
        Err(err) => {
            // best effort: the original error matters more than a failed marker write
            let _ = writer.write(&MetricsLine::Aborted { epoch: current_epoch, error: err.to_string() });
            Err(err)
        }
    }
}

fn run_epochs(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    seed: u64,
    writer: &mut MetricsWriter,
    current_epoch: &mut usize,
) -> Result<(RunMetrics, Timing)> {
    let train = &data.train;
    let size = train.len();
    let mut model = ModelState::new(cfg.model.kind, train.dim(), train.num_classes, cfg.model.hidden, seed)?;
    let mut trainer = Trainer::new(cfg.train_config(seed), &model)?;
    let mut policy = match cfg.baseline_config(seed) {
        Some(b) => Policy::Baseline(b),
        None => Policy::Seta(SetaScheduler::new(cfg.scheduler_config(seed))?),
    };
    let mut ledger = LossLedger::new(size);

    let mut records = Vec::with_capacity(cfg.epochs);
    let mut sizes = Vec::with_capacity(cfg.epochs);
    let (mut plan_secs, mut train_secs) = (0.0, 0.0);
    let mut last_eval = None;
    for epoch in 0..cfg.epochs {
        *current_epoch = epoch;
        let started = Instant::now();
        let plan = policy.plan(&ledger, epoch)?;
        let planned = Instant::now();
        plan_secs += (planned - started).as_secs_f64();

        let observations = trainer.sgd_epoch(&mut model, train, &plan.selected, plan.weights.as_deref(), epoch)?;
        train_secs += planned.elapsed().as_secs_f64();
        ledger.record_losses(epoch, &observations)?;
        let eval = evaluate(&model, &data.eval, data.eval_split)?;
        last_eval = Some(eval);

        sizes.push(plan.selected.len());
        let train_loss = observations.iter().map(|o| o.1).sum::<f64>() / observations.len() as f64;
        let record = EpochRecord {
            epoch,
            phase: plan.phase,
            selected: plan.selected.len(),
            subset_size: plan.subset_size,
            rho_t: plan.pruned_fraction,
            rho_bar: cumulative_pruned_from_sizes(&sizes, size),
            window: plan.window,
            train_loss,
            val_acc: eval.accuracy,
            val_loss: eval.mean_loss,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        writer.write(&MetricsLine::Epoch(record.clone()))?;
        records.push(record);
    }

    let rho_bar = cumulative_pruned_from_sizes(&sizes, size);
    let total_selected: usize = sizes.iter().sum();
    let o_data = plan_secs / (cfg.epochs * size) as f64;
    let o_model = train_secs / total_selected.max(1) as f64;
    let time_saving = if o_model > 0.0 { estimate_time_saving(rho_bar, o_data, o_model)? } else { rho_bar };
    let eval = last_eval.expect("at least one epoch");
    let footer = RunFooter {
        status: "complete".into(),
        method: cfg.method,
        seed,
        epochs: cfg.epochs,
        dataset_size: size,
        rho_bar,
        final_acc: eval.accuracy,
        final_val_loss: eval.mean_loss,
        config_hash: cfg.run_hash(seed),
        time_saving,
    };
    writer.write(&MetricsLine::Footer(footer.clone()))?;
    let timing = Timing { wall_ms: records.iter().map(|r| r.wall_ms).collect(), o_data, o_model, time_saving };
    Ok((RunMetrics { records, footer }, timing))
}

fn prepare_output(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.json"), serde_json::to_vec_pretty(cfg)?)?;
    Ok(())
}

/// Runs every seed of `cfg`, writing `config.json` and per-seed metrics
/// into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunMetrics>> {
    cfg.validate()?;
    let data = PreparedData::new(&cfg.load_dataset()?)?;
    prepare_output(cfg)?;
    cfg.seeds.iter().map(|&seed| run_seed(cfg, &data, seed, Some(&cfg.output_dir))).collect()
}

/// One row of the sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: MethodName,
    pub r: f64,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: u64,
    /// `Err` holds the failure message of a run that did not complete.
    pub outcome: std::result::Result<(f64, f64), String>,
}

impl SweepRow {
    fn new(cfg: &ExperimentConfig, seed: u64, outcome: std::result::Result<(f64, f64), String>) -> Self {
        let seta = cfg.method == MethodName::Seta;
        let r = match cfg.method {
            MethodName::Seta => cfg.seta.r,
            MethodName::Full => 1.0,
            _ => cfg.baseline.r,
        };
        Self {
            method: cfg.method,
            r,
            k: seta.then_some(cfg.seta.k),
            alpha: seta.then_some(cfg.seta.alpha),
            seed,
            outcome,
        }
    }
}

/// Runs every `(config, seed)` pair on up to `jobs` worker threads.
///
/// Configuration errors abort the sweep before anything runs; a run that
/// fails later becomes a failed row.
pub fn sweep(configs: &[ExperimentConfig], jobs: usize) -> Result<Vec<SweepRow>> {
    if configs.is_empty() {
        return Err(Error::config("sweep has no configurations"));
    }
    for cfg in configs {
        cfg.validate()?;
    }
    let mut datasets: Vec<(DatasetSource, std::result::Result<PreparedData, String>)> = Vec::new();
    let mut data_index = Vec::with_capacity(configs.len());
    for cfg in configs {
        let idx = match datasets.iter().position(|(src, _)| *src == cfg.dataset) {
            Some(i) => i,
            None => {
                let prepared = cfg.load_dataset().and_then(|d| PreparedData::new(&d)).map_err(|e| e.to_string());
                datasets.push((cfg.dataset.clone(), prepared));
                datasets.len() - 1
            }
        };
        data_index.push(idx);
    }

    let jobs_list: Vec<(usize, u64)> =
        configs.iter().enumerate().flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s))).collect();
    let prepared: Vec<std::result::Result<(), String>> =
        configs.iter().map(|c| prepare_output(c).map_err(|e| e.to_string())).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|&(i, seed)| {
                let cfg = &configs[i];
                let outcome = prepared[i].clone().and_then(|_| {
                    let data = datasets[data_index[i]].1.as_ref().map_err(Clone::clone)?;
                    run_seed(cfg, data, seed, Some(&cfg.output_dir))
                        .map(|m| (m.footer.rho_bar, m.footer.final_acc))
                        .map_err(|e| e.to_string())
                });
                SweepRow::new(cfg, seed, outcome)
            })
            .collect()
    });
    Ok(rows)
}

pub const SUMMARY_HEADER: [&str; 7] = ["method", "r", "k", "alpha", "seed", "rho_bar", "final_acc"];

/// Writes the sweep summary CSV; failed runs carry `failed` in both result columns.
pub fn write_summary<W: std::io::Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for row in rows {
        let (rho, acc) = match &row.outcome {
            Ok((rho, acc)) => (rho.to_string(), acc.to_string()),
            Err(_) => ("failed".to_string(), "failed".to_string()),
        };
        w.write_record([
            row.method.as_str().to_string(),
            row.r.to_string(),
            row.k.map(|k| k.to_string()).unwrap_or_default(),
            row.alpha.map(|a| a.to_string()).unwrap_or_default(),
            row.seed.to_string(),
            rho,
            acc,
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Sweep file: explicit configs and/or a grid expanded around a base config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub base: Option<ExperimentConfig>,
    pub grid: SweepGrid,
    pub configs: Vec<ExperimentConfig>,
}

/// Axes left empty keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    pub method: Vec<MethodName>,
    pub r: Vec<f64>,
    pub k: Vec<usize>,
    pub alpha: Vec<f64>,
}

impl SweepSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read sweep file {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("invalid sweep file: {e}")))
    }

    /// Expanded configs. Grid runs get a subdirectory of the base output
    /// directory named after their grid point.
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        let mut out = self.configs.clone();
        if let Some(base) = &self.base {
            let or = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
            let methods = if self.grid.method.is_empty() { vec![base.method] } else { self.grid.method.clone() };
            let ks = if self.grid.k.is_empty() { vec![base.seta.k] } else { self.grid.k.clone() };
            let base_r = if base.method == MethodName::Seta { base.seta.r } else { base.baseline.r };
            for &method in &methods {
                for &r in &or(&self.grid.r, base_r) {
                    for &k in &ks {
                        for &alpha in &or(&self.grid.alpha, base.seta.alpha) {
                            let mut cfg = base.clone();
                            cfg.method = method;
                            cfg.seta.r = r;
                            cfg.baseline.r = r;
                            cfg.seta.k = k;
                            cfg.seta.alpha = alpha;
                            cfg.output_dir =
                                base.output_dir.join(format!("{}_r{r}_k{k}_alpha{alpha}", method.as_str()));
                            out.push(cfg);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Reads a metrics file and checks it against the scheduler accounting:
/// cumulative ratios, per-epoch ratios and cyclic window positions.
pub fn replay_check(lines: &[MetricsLine]) -> Result<RunFooter> {
    let mut sizes = Vec::new();
    let mut footer = None;
    for line in lines {
        match line {
            MetricsLine::Epoch(rec) => {
                if rec.epoch != sizes.len() {
                    return Err(Error::Data(format!("epoch {} out of order", rec.epoch)));
                }
                sizes.push(rec.selected);
                let size = lines
                    .iter()
                    .find_map(|l| match l {
                        MetricsLine::Footer(f) => Some(f.dataset_size),
                        _ => None,
                    })
                    .ok_or_else(|| Error::Data("metrics file has no footer".into()))?;
                if rec.rho_t != crate::scheduler::pruned_fraction(rec.selected, size) {
                    return Err(Error::Data(format!("epoch {}: rho_t mismatch", rec.epoch)));
                }
                if rec.rho_bar != cumulative_pruned_from_sizes(&sizes, size) {
                    return Err(Error::Data(format!("epoch {}: cumulative rho_bar mismatch", rec.epoch)));
                }
            }
            MetricsLine::Footer(f) => footer = Some(f.clone()),
            MetricsLine::Aborted { epoch, error } => {
                return Err(Error::Data(format!("run aborted at epoch {epoch}: {error}")));
            }
        }
    }
    let footer = footer.ok_or_else(|| Error::Data("metrics file has no footer".into()))?;
    if sizes.len() != footer.epochs || footer.rho_bar != cumulative_pruned_from_sizes(&sizes, footer.dataset_size) {
        return Err(Error::Data("footer rho_bar does not match the per-epoch log".into()));
    }
    Ok(footer)
}
