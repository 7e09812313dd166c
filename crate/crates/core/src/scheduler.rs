//! The SeTa epoch scheduler.
//!
//! Each epoch falls into one of three phases:
//!
//! - **bootstrap** (epoch 0): train on a uniform random subset of ratio `r`
//!   so the ledger gets a first loss for every candidate.
//! - **curriculum**: draw a fresh random subset of ratio `r`, cluster it by
//!   ledger loss into `k` groups sorted by centroid, and keep the groups
//!   inside a window of `w = ceil(alpha * k)` clusters. The window start
//!   moves one cluster per curriculum epoch and wraps back to the easiest
//!   group once it reaches the hardest.
//! - **anneal** (the last `anneal_fraction` of epochs): include every sample
//!   independently with probability `r`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_losses, ClusterMethod, ClusterRequest};
use crate::error::{Error, Result};
use crate::ledger::LossLedger;
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurriculumOrder {
    #[default]
    EasyToHard,
    HardToEasy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Start at `n mod (k - w + 1)`; the window never wraps.
    #[default]
    Cyclic,
    /// Start at `n mod k`; the window wraps around past the hardest cluster.
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerConfig {
    /// Down-sampling ratio, reused as the anneal inclusion probability.
    pub r: f64,
    /// Number of difficulty clusters.
    pub k: usize,
    /// Window scale; the window spans `ceil(alpha * k)` clusters.
    pub alpha: f64,
    pub ordering: CurriculumOrder,
    pub window_policy: WindowPolicy,
    /// Fraction of the final epochs spent in the anneal phase.
    pub anneal_fraction: f64,
    pub epochs: usize,
    pub seed: u64,
    pub clusterer: ClusterMethod,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            r: 0.6,
            k: 10,
            alpha: 0.5,
            ordering: CurriculumOrder::EasyToHard,
            window_policy: WindowPolicy::Cyclic,
            anneal_fraction: 0.125,
            epochs: 30,
            seed: 0,
            clusterer: ClusterMethod::ExactDp,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        check_ratio("r", self.r)?;
        compute_window_size(self.k, self.alpha)?;
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.anneal_fraction) {
            return Err(Error::config(format!("anneal_fraction must lie in [0, 1), got {}", self.anneal_fraction)));
        }
        Ok(())
    }

    pub fn window_size(&self) -> Result<usize> {
        compute_window_size(self.k, self.alpha)
    }

    /// First anneal epoch, `ceil((1 - anneal_fraction) * T)`.
    pub fn anneal_start(&self) -> usize {
        anneal_start(self.epochs, self.anneal_fraction)
    }

    pub fn phase_of(&self, epoch: usize) -> Phase {
        if epoch == 0 {
            Phase::Bootstrap
        } else if epoch >= self.anneal_start() {
            Phase::Anneal
        } else {
            Phase::Curriculum
        }
    }
}

pub(crate) fn anneal_start(epochs: usize, anneal_fraction: f64) -> usize {
    ((1.0 - anneal_fraction) * epochs as f64).ceil() as usize
}

pub(crate) fn check_ratio(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must lie in (0, 1], got {value}")))
    }
}

/// Window position over the sorted clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowState {
    /// Curriculum rounds completed before this one.
    pub n: usize,
    pub w: usize,
    pub s: usize,
    pub e: usize,
}

impl WindowState {
    pub fn initial(w: usize) -> Self {
        Self { n: 0, w, s: 0, e: w.saturating_sub(1) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Bootstrap,
    Curriculum,
    Anneal,
    /// Regular epoch of a baseline policy.
    Standard,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Bootstrap => "bootstrap",
            Phase::Curriculum => "curriculum",
            Phase::Anneal => "anneal",
            Phase::Standard => "standard",
        }
    }
}

/// Samples selected for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochPlan {
    pub epoch: usize,
    pub phase: Phase,
    /// Ascending, unique sample ids.
    pub selected: Vec<usize>,
    /// Per-sample loss scale aligned with `selected`, when the policy rescales.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub window: Option<WindowState>,
    /// Size of the random candidate subset drawn this epoch.
    pub subset_size: usize,
    pub dataset_size: usize,
    /// `1 - |selected| / |D|`.
    pub pruned_fraction: f64,
}

impl EpochPlan {
    pub fn new(
        epoch: usize,
        phase: Phase,
        selected: Vec<usize>,
        window: Option<WindowState>,
        subset_size: usize,
        dataset_size: usize,
    ) -> Self {
        let pruned_fraction = pruned_fraction(selected.len(), dataset_size);
        Self { epoch, phase, selected, weights: None, window, subset_size, dataset_size, pruned_fraction }
    }
}

pub fn pruned_fraction(selected: usize, dataset_size: usize) -> f64 {
    1.0 - selected as f64 / dataset_size as f64
}

/// `ceil(alpha * k)`.
pub fn compute_window_size(k: usize, alpha: f64) -> Result<usize> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    check_ratio("alpha", alpha)?;
    let scaled = alpha * k as f64;
    // products like 0.7 * 10 must not round up past the integer
    let w = if (scaled - scaled.round()).abs() < 1e-9 { scaled.round() } else { scaled.ceil() };
    Ok((w as usize).clamp(1, k))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowBounds {
    pub start: usize,
    pub end: usize,
    /// Cluster indices covered, in traversal order.
    pub clusters: Vec<usize>,
}

pub fn window_bounds(n: usize, k_eff: usize, w: usize, policy: WindowPolicy) -> Result<WindowBounds> {
    if w == 0 || w > k_eff {
        return Err(Error::usage(format!("window width {w} must lie in 1..={k_eff}")));
    }
    Ok(match policy {
        WindowPolicy::Cyclic => {
            let start = n % (k_eff - w + 1);
            let end = start + w - 1;
            WindowBounds { start, end, clusters: (start..=end).collect() }
        }
        WindowPolicy::Continuous => {
            let start = n % k_eff;
            let clusters: Vec<usize> = (0..w).map(|i| (start + i) % k_eff).collect();
            WindowBounds { start, end: *clusters.last().unwrap(), clusters }
        }
    })
}

/// Draws `max(1, floor(r * population))` distinct ids uniformly, sorted.
pub fn downsample<R: Rng + ?Sized>(population: usize, r: f64, rng: &mut R) -> Result<Vec<usize>> {
    if population == 0 {
        return Err(Error::usage("cannot down-sample an empty population"));
    }
    check_ratio("r", r)?;
    let m = ((r * population as f64).floor() as usize).clamp(1, population);
    if m == population {
        return Ok((0..population).collect());
    }
    let mut ids = rand::seq::index::sample(rng, population, m).into_vec();
    ids.sort_unstable();
    Ok(ids)
}

/// Includes every id independently with probability `r`.
pub fn anneal_select<R: Rng + ?Sized>(population: usize, r: f64, rng: &mut R) -> Result<Vec<usize>> {
    check_ratio("r", r)?;
    Ok((0..population).filter(|_| rng.random::<f64>() < r).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputedLosses {
    pub losses: Vec<f64>,
    pub imputed: usize,
}

/// Ledger losses for `subset`; unseen samples get the ledger's global mean.
pub fn impute_losses(subset: &[usize], ledger: &LossLedger) -> Result<ImputedLosses> {
    if subset.is_empty() {
        return Err(Error::usage("cannot impute losses for an empty subset"));
    }
    let fill = ledger.global_mean();
    let mut imputed = 0;
    let losses = subset
        .iter()
        .map(|&id| {
            if id >= ledger.len() {
                return Err(Error::IdOutOfRange { id, len: ledger.len() });
            }
            Ok(ledger.latest_loss(id).unwrap_or_else(|| {
                imputed += 1;
                fill
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImputedLosses { losses, imputed })
}

/// Plans `epoch` and returns the window state for the next epoch.
///
/// The dataset size is the ledger length. Only curriculum epochs advance
/// the window counter.
pub fn plan_epoch(
    config: &SchedulerConfig,
    ledger: &LossLedger,
    epoch: usize,
    window: &WindowState,
) -> Result<(EpochPlan, WindowState)> {
    config.validate()?;
    if epoch >= config.epochs {
        return Err(Error::usage(format!("epoch {epoch} is past the last epoch {}", config.epochs - 1)));
    }
    let size = ledger.len();
    match config.phase_of(epoch) {
        Phase::Bootstrap => {
            let subset = downsample(size, config.r, &mut rng::stream(config.seed, Purpose::Downsample, 0))?;
            let m = subset.len();
            Ok((EpochPlan::new(epoch, Phase::Bootstrap, subset, None, m, size), *window))
        }
        Phase::Anneal => {
            let mut stream = rng::stream(config.seed, Purpose::Anneal, epoch as u64);
            let selected = anneal_select(size, config.r, &mut stream)?;
            Ok((EpochPlan::new(epoch, Phase::Anneal, selected, None, size, size), *window))
        }
        _ => curriculum_epoch(config, ledger, epoch, window),
    }
}

fn curriculum_epoch(
    config: &SchedulerConfig,
    ledger: &LossLedger,
    epoch: usize,
    window: &WindowState,
) -> Result<(EpochPlan, WindowState)> {
    let size = ledger.len();
    let subset = downsample(size, config.r, &mut rng::stream(config.seed, Purpose::Downsample, epoch as u64))?;
    let ImputedLosses { losses, .. } = impute_losses(&subset, ledger)?;
    let request = ClusterRequest::new(&losses, config.k).method(config.clusterer);
    let partition = cluster_losses(&request)?;

    let k_eff = partition.k();
    let w = config.window_size()?.min(k_eff);
    let bounds = window_bounds(window.n, k_eff, w, config.window_policy)?;

    let mut selected: Vec<usize> = bounds
        .clusters
        .iter()
        .map(|&j| match config.ordering {
            CurriculumOrder::EasyToHard => j,
            CurriculumOrder::HardToEasy => k_eff - 1 - j,
        })
        .flat_map(|cluster| partition.members(cluster).iter().map(|&pos| subset[pos]))
        .collect();
    selected.sort_unstable();

    let used = WindowState { n: window.n, w, s: bounds.start, e: bounds.end };
    let next = WindowState { n: window.n + 1, ..used };
    Ok((EpochPlan::new(epoch, Phase::Curriculum, selected, Some(used), subset.len(), size), next))
}

/// `1 - (1/T) * sum_t |S_t| / |D|`.
pub fn cumulative_pruned(plans: &[EpochPlan], dataset_size: usize) -> Result<f64> {
    if plans.is_empty() {
        return Err(Error::usage("no epoch plans to account"));
    }
    if dataset_size == 0 {
        return Err(Error::usage("dataset size must be positive"));
    }
    let sizes: Vec<usize> = plans.iter().map(|p| p.selected.len()).collect();
    Ok(cumulative_pruned_from_sizes(&sizes, dataset_size))
}

pub(crate) fn cumulative_pruned_from_sizes(sizes: &[usize], dataset_size: usize) -> f64 {
    let total: usize = sizes.iter().sum();
    1.0 - total as f64 / (sizes.len() * dataset_size) as f64
}

/// Time-saving estimate `rho_bar + o_data / o_model`.
///
/// This keeps the additive form exactly; a pruning overhead would usually
/// be subtracted from the savings.
pub fn estimate_time_saving(rho_bar: f64, o_data: f64, o_model: f64) -> Result<f64> {
    if !(o_model > 0.0) {
        return Err(Error::usage(format!("per-sample training time must be positive, got {o_model}")));
    }
    if !(o_data >= 0.0) {
        return Err(Error::usage(format!("per-sample pruning time must be non-negative, got {o_data}")));
    }
    Ok(rho_bar + o_data / o_model)
}

/// Stateful wrapper that owns the window across epochs.
#[derive(Debug, Clone)]
pub struct SetaScheduler {
    config: SchedulerConfig,
    window: WindowState,
}

impl SetaScheduler {
    pub fn new(config: SchedulerConfig) -> Result<Self> {
        config.validate()?;
        let window = WindowState::initial(config.window_size()?);
        Ok(Self { config, window })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.config
    }

    pub fn window(&self) -> WindowState {
        self.window
    }

    pub fn plan(&mut self, ledger: &LossLedger, epoch: usize) -> Result<EpochPlan> {
        let (plan, next) = plan_epoch(&self.config, ledger, epoch, &self.window)?;
        self.window = next;
        Ok(plan)
    }
}
