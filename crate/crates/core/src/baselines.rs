//! Comparator selection policies.
//!
//! All of them emit [`EpochPlan`]s so their pruning ratios are accounted
//! exactly like SeTa's. `anneal_fraction` switches the final epochs of the
//! pruning baselines to the full dataset.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::LossLedger;
use crate::rng::{self, Purpose};
use crate::scheduler::{anneal_start, check_ratio, downsample, EpochPlan, Phase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    /// Every sample, every epoch.
    Full,
    /// One random `r`-subset drawn once and reused.
    StaticRandom,
    /// A fresh random `r`-subset each epoch.
    DynamicRandom,
    /// Keep above-mean-loss samples, drop below-mean ones with probability `p`.
    MeanLossPrune,
}

impl BaselineMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMethod::Full => "full",
            BaselineMethod::StaticRandom => "static_random",
            BaselineMethod::DynamicRandom => "dynamic_random",
            BaselineMethod::MeanLossPrune => "mean_loss_prune",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    /// Subset ratio for the random baselines.
    pub r: f64,
    /// Prune probability for below-mean samples.
    pub p: f64,
    /// Scale kept below-mean losses by `1 / (1 - p)`.
    pub rescale: bool,
    pub anneal_fraction: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            method: BaselineMethod::Full,
            r: 0.6,
            p: 0.5,
            rescale: true,
            anneal_fraction: 0.125,
            epochs: 30,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        check_ratio("r", self.r)?;
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::config(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if self.rescale && self.p == 1.0 && self.method == BaselineMethod::MeanLossPrune {
            return Err(Error::config("p = 1 with rescaling divides by zero"));
        }
        if !(0.0..1.0).contains(&self.anneal_fraction) {
            return Err(Error::config(format!("anneal_fraction must lie in [0, 1), got {}", self.anneal_fraction)));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        Ok(())
    }
}

/// Plans `epoch` for a baseline; the dataset size is the ledger length.
pub fn plan_epoch_baseline(cfg: &BaselineConfig, ledger: &LossLedger, epoch: usize) -> Result<EpochPlan> {
    cfg.validate()?;
    if epoch >= cfg.epochs {
        return Err(Error::usage(format!("epoch {epoch} is past the last epoch {}", cfg.epochs - 1)));
    }
    let size = ledger.len();
    if size == 0 {
        return Err(Error::usage("empty dataset"));
    }
    let all = || (0..size).collect::<Vec<_>>();
    if cfg.method == BaselineMethod::Full {
        return Ok(EpochPlan::new(epoch, Phase::Standard, all(), None, size, size));
    }
    if epoch >= anneal_start(cfg.epochs, cfg.anneal_fraction) {
        return Ok(EpochPlan::new(epoch, Phase::Anneal, all(), None, size, size));
    }

    let plan = match cfg.method {
        BaselineMethod::StaticRandom => {
            let subset = downsample(size, cfg.r, &mut rng::stream(cfg.seed, Purpose::StaticSubset, 0))?;
            let m = subset.len();
            EpochPlan::new(epoch, Phase::Standard, subset, None, m, size)
        }
        BaselineMethod::DynamicRandom => {
            let mut stream = rng::stream(cfg.seed, Purpose::DynamicSubset, epoch as u64);
            let subset = downsample(size, cfg.r, &mut stream)?;
            let m = subset.len();
            EpochPlan::new(epoch, Phase::Standard, subset, None, m, size)
        }
        BaselineMethod::MeanLossPrune => mean_loss_prune(cfg, ledger, epoch)?,
        BaselineMethod::Full => unreachable!(),
    };
    Ok(plan)
}

fn mean_loss_prune(cfg: &BaselineConfig, ledger: &LossLedger, epoch: usize) -> Result<EpochPlan> {
    let size = ledger.len();
    let mean = ledger.global_mean();
    let mut stream = rng::stream(cfg.seed, Purpose::MeanLossPrune, epoch as u64);
    let scale = if cfg.rescale { 1.0 / (1.0 - cfg.p) } else { 1.0 };
    let mut selected = Vec::with_capacity(size);
    let mut weights = Vec::with_capacity(size);
    for id in 0..size {
        // one draw per id keeps the stream aligned with ids
        let u: f64 = stream.random();
        match ledger.latest_loss(id) {
            Some(loss) if loss < mean => {
                if u >= cfg.p {
                    selected.push(id);
                    weights.push(scale);
                }
            }
            _ => {
                selected.push(id);
                weights.push(1.0);
            }
        }
    }
    let mut plan = EpochPlan::new(epoch, Phase::Standard, selected, None, size, size);
    if cfg.rescale {
        plan.weights = Some(weights);
    }
    Ok(plan)
}
