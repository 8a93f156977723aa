//! Per-run counters and their summaries across runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counters of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: usize,
    pub seed: u64,
    pub slots: usize,
    pub pu_bits: u64,
    pub su_bits: u64,
    /// Slots in which at least one secondary transmitted.
    pub su_active_slots: usize,
    /// Secondary bits landing inside primary reception windows.
    pub su_overlap_bits: u64,
}

impl RunMetrics {
    /// Delivered primary bits per slot.
    pub fn pu_throughput(&self) -> f64 {
        self.pu_bits as f64 / self.slots as f64
    }

    pub fn su_throughput(&self) -> f64 {
        self.su_bits as f64 / self.slots as f64
    }

    /// Delivered bits per second per hertz of system band.
    pub fn spectral_efficiency(&self, slot_length: f64, bandwidth_hz: f64) -> f64 {
        (self.pu_bits + self.su_bits) as f64 / (self.slots as f64 * slot_length * bandwidth_hz)
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_stderr(&self, other: &Estimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Per-run primary throughput relative to the silent run with the same
/// seed; runs whose silent throughput is zero are skipped.
pub fn paired_ratios(scheme: &[RunMetrics], silent: &[RunMetrics]) -> Vec<f64> {
    scheme
        .iter()
        .zip(silent)
        .filter(|(_, s)| s.pu_bits > 0)
        .map(|(a, s)| a.pu_bits as f64 / s.pu_bits as f64)
        .collect()
}

/// Summary of one scheme over all runs of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pu: Estimate,
    pub su: Estimate,
    /// Primary plus secondary bits per slot.
    pub total: Estimate,
    pub spectral_efficiency: Estimate,
    pub pu_ratio: Estimate,
    pub su_overlap_bits: Estimate,
}

impl Summary {
    pub fn build(runs: &[RunMetrics], silent: &[RunMetrics], slot_length: f64, bandwidth_hz: f64) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Contract("cannot summarize an empty set of runs".into()));
        }
        let map = |f: &dyn Fn(&RunMetrics) -> f64| Estimate::of(&runs.iter().map(f).collect::<Vec<_>>());
        Ok(Self {
            pu: map(&|r| r.pu_throughput()),
            su: map(&|r| r.su_throughput()),
            total: map(&|r| r.pu_throughput() + r.su_throughput()),
            spectral_efficiency: map(&|r| r.spectral_efficiency(slot_length, bandwidth_hz)),
            pu_ratio: Estimate::of(&paired_ratios(runs, silent)),
            su_overlap_bits: map(&|r| r.su_overlap_bits as f64),
        })
    }
}
