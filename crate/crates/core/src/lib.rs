//! Loss-guided dynamic dataset pruning.
//!
//! SeTa draws a random subset of the training set each epoch, clusters it by
//! per-sample loss, and trains only on a sliding window of difficulty
//! clusters that sweeps from easy to hard. The final epochs switch to a
//! stochastic partial anneal over the whole dataset.
//!
//! The crate is split into:
//!
//! - [`scheduler`]: the epoch-by-epoch selection state machine and the
//!   pruning-ratio accounting.
//! - [`clustering`]: exact 1-D k-means by dynamic programming, Lloyd's
//!   iteration, and a brute-force oracle.
//! - [`ledger`]: the per-sample loss store the scheduler clusters on.
//! - [`baselines`]: comparator selection policies sharing [`EpochPlan`].
//! - [`data`], [`model`], [`train`]: a small dense-network training stack.
//! - [`experiment`]: config-driven runs, sweeps and metrics files.

pub mod baselines;
pub mod clustering;
pub mod data;
mod error;
pub mod experiment;
pub mod ledger;
pub mod model;
pub mod rng;
pub mod scheduler;
pub mod train;

pub use baselines::{plan_epoch_baseline, BaselineConfig, BaselineMethod};
pub use clustering::{cluster_losses, oracle_best_partition, sse, ClusterMethod, ClusterPartition, ClusterRequest};
pub use data::{generate_synthetic, load_csv, Dataset, Provenance, Split, SynthSpec};
pub use error::{Error, Result};
pub use experiment::{
    run_experiment, sweep, EpochRecord, ExperimentConfig, MethodName, RunFooter, RunMetrics, SweepRow,
};
pub use ledger::LossLedger;
pub use model::{evaluate, per_sample_loss, Evaluation, ModelKind, ModelState};
pub use scheduler::{
    anneal_select, compute_window_size, cumulative_pruned, downsample, estimate_time_saving, impute_losses, plan_epoch,
    window_bounds, CurriculumOrder, EpochPlan, Phase, SchedulerConfig, SetaScheduler, WindowBounds, WindowPolicy,
    WindowState,
};
pub use train::{TrainConfig, Trainer};
