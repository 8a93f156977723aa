//! Ground-truth slot simulation and noisy energy observations.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::topology::{distance, Network};
use super::transition::TransitionModel;
use crate::error::{Error, Result};

/// Realized result of one simulated slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlotResult {
    pub next: usize,
    pub pu_bits: u64,
    pub su_bits: u64,
}

/// Advances the model by one slot.
///
/// Always consumes `1 + hops` uniforms from `rng` regardless of activity,
/// so different policies driven by equal seeds see the same arrivals and
/// channel draws.
pub fn simulate_slot<R: Rng + ?Sized>(
    model: &TransitionModel,
    state: usize,
    delta: u32,
    rng: &mut R,
) -> Result<SlotResult> {
    let hops = model.scope().m() + model.scope().n();
    let arrival: f64 = rng.random();
    let draws: Vec<f64> = (0..hops).map(|_| rng.random()).collect();
    let outcome = model.outcome(state, delta, arrival, &draws)?;
    Ok(SlotResult {
        next: outcome.next,
        pu_bits: if outcome.pu_delivered { model.pu_bits } else { 0 },
        su_bits: if outcome.su_delivered { model.su_bits } else { 0 },
    })
}

/// Linear received powers seen by each secondary sensing node.
///
/// Secondary hop `i` senses at its transmitter. Transmitters farther than one
/// slot of propagation, and the transmitter co-located with the sensor,
/// contribute nothing.
#[derive(Debug, Clone, Serialize)]
pub struct SensingModel {
    /// `[su i][pu j]`, µPa².
    pub pu_power: Vec<Vec<f64>>,
    /// `[su i][su k]`, µPa².
    pub su_power: Vec<Vec<f64>>,
    pub sigma: f64,
}

impl SensingModel {
    pub fn build(network: &Network, sigma: Option<f64>) -> Result<Self> {
        let range = network.sound_speed() * network.spec.slot_length;
        let power_at = |u: usize, i: usize| -> Result<f64> {
            let sensor = network.hops[network.su_hop(i)].tx;
            let d = distance(&network.hops[u].tx, &sensor);
            if d > range || d == 0.0 {
                Ok(0.0)
            } else {
                network.received_power(u, &sensor)
            }
        };
        let mut pu_power = vec![vec![0.0; network.n_pu]; network.n_su];
        let mut su_power = vec![vec![0.0; network.n_su]; network.n_su];
        for i in 0..network.n_su {
            for j in 0..network.n_pu {
                pu_power[i][j] = power_at(network.pu_hop(j), i)?;
            }
            for k in 0..network.n_su {
                su_power[i][k] = power_at(network.su_hop(k), i)?;
            }
        }
        let mut model = Self {
            pu_power,
            su_power,
            sigma: 0.0,
        };
        model.sigma = match sigma {
            Some(s) if s >= 0.0 && s.is_finite() => s,
            Some(s) => return Err(Error::Config(format!("observation noise {s} must be >= 0"))),
            None => model.default_sigma(),
        };
        Ok(model)
    }

    /// Noise level giving 10 dB detection SNR for the weakest sensor's
    /// strongest primary.
    pub fn default_sigma(&self) -> f64 {
        self.pu_power
            .iter()
            .map(|row| row.iter().cloned().fold(0.0, f64::max))
            .filter(|&p| p > 0.0)
            .fold(f64::INFINITY, f64::min)
            .min(f64::MAX)
            / 10f64.sqrt()
    }

    /// Noise-free measurement of sensor `i`; `pu` and `su` are chain-index
    /// bitmasks of transmitting hops.
    pub fn mean(&self, i: usize, pu: u64, su: u64) -> f64 {
        let a: f64 = self.pu_power[i]
            .iter()
            .enumerate()
            .filter(|(j, _)| pu >> j & 1 == 1)
            .map(|(_, p)| p)
            .sum();
        let b: f64 = self.su_power[i]
            .iter()
            .enumerate()
            .filter(|(k, _)| su >> k & 1 == 1)
            .map(|(_, p)| p)
            .sum();
        a + b
    }

    pub fn observe<R: Rng + ?Sized>(&self, pu: u64, su: u64, rng: &mut R) -> Vec<f64> {
        (0..self.pu_power.len())
            .map(|i| {
                let z: f64 = StandardNormal.sample(rng);
                self.mean(i, pu, su) + self.sigma * z
            })
            .collect()
    }
}

/// Gaussian log-likelihood up to a constant; `sigma = 0` gives a 0/-inf
/// indicator with a small tolerance.
pub fn gaussian_log_likelihood(y: f64, mean: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        if (y - mean).abs() <= 1e-9 * mean.abs().max(1.0) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        let z = (y - mean) / sigma;
        -0.5 * z * z
    }
}
