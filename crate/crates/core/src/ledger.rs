//! Per-sample loss store used as the difficulty proxy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEntry {
    pub loss: f64,
    pub epoch: usize,
}

/// Latest observed loss for every sample id in `0..len`.
///
/// Samples that were not visited in an epoch keep their stale value.
#[derive(Debug, Clone, PartialEq)]
pub struct LossLedger {
    entries: Vec<Option<LossEntry>>,
    seen: usize,
    mean: f64,
}

impl LossLedger {
    pub fn new(len: usize) -> Self {
        Self { entries: vec![None; len], seen: 0, mean: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: usize) -> Option<LossEntry> {
        self.entries.get(id).copied().flatten()
    }

    pub fn latest_loss(&self, id: usize) -> Option<f64> {
        self.entry(id).map(|e| e.loss)
    }

    pub fn epoch_seen(&self, id: usize) -> Option<usize> {
        self.entry(id).map(|e| e.epoch)
    }

    /// Number of samples with at least one observation.
    pub fn seen_count(&self) -> usize {
        self.seen
    }

    /// Mean of all latest losses of seen samples, 0 when nothing was seen.
    pub fn global_mean(&self) -> f64 {
        self.mean
    }

    /// Records a batch of `(id, loss)` observations made during `epoch`.
    ///
    /// The batch is validated as a whole first, so a rejected batch leaves
    /// the ledger untouched. Within a batch the last write for an id wins.
    pub fn record_losses(&mut self, epoch: usize, observations: &[(usize, f64)]) -> Result<()> {
        if observations.is_empty() {
            return Ok(());
        }
        for &(id, loss) in observations {
            if id >= self.entries.len() {
                return Err(Error::IdOutOfRange { id, len: self.entries.len() });
            }
            if !loss.is_finite() || loss < 0.0 {
                return Err(Error::InvalidLoss { id, loss });
            }
            if let Some(prev) = self.entries[id] {
                if prev.epoch > epoch {
                    return Err(Error::StaleObservation { id, epoch, seen: prev.epoch });
                }
            }
        }
        for &(id, loss) in observations {
            self.entries[id] = Some(LossEntry { loss, epoch });
        }
        self.recompute_mean();
        Ok(())
    }

    fn recompute_mean(&mut self) {
        let (count, sum) = self.entries.iter().flatten().fold((0usize, 0.0f64), |(c, s), e| (c + 1, s + e.loss));
        self.seen = count;
        self.mean = if count == 0 { 0.0 } else { sum / count as f64 };
    }
}
