//! Per-bit error profiles and packet loss of a hop under a given set of
//! simultaneously active transmitters.

use std::collections::HashMap;

use super::topology::Network;
use crate::channel::{ber_lognormal, packet_loss_segments};
use crate::error::{Error, Result};

/// A run of victim bits sharing one interferer set.
#[derive(Debug, Clone, PartialEq)]
pub struct BerSegment {
    /// First and last bit, 1-based and inclusive.
    pub bits: (u64, u64),
    /// Interfering hops present over the run.
    pub interferers: Vec<usize>,
    /// Total interference power, µPa² (infinite when blocked).
    pub interference: f64,
    pub ber: f64,
}

impl BerSegment {
    pub fn len(&self) -> u64 {
        self.bits.1 + 1 - self.bits.0
    }

    pub fn is_empty(&self) -> bool {
        self.bits.1 < self.bits.0
    }
}

/// Bitmask of hops, indexed flat.
pub type HopMask = u64;

pub fn mask_contains(mask: HopMask, hop: usize) -> bool {
    mask >> hop & 1 == 1
}

/// BER of hop `j` at interference power `interference`.
pub fn segment_ber(network: &Network, j: usize, interference: f64) -> Result<f64> {
    if interference.is_infinite() {
        return Ok(0.5);
    }
    let hop = &network.hops[j];
    let gain = &network.gains[j];
    let mu = gain.mu_ln + network.tx_power.ln() - (interference + network.noise[hop.carrier]).ln();
    ber_lognormal(mu, gain.sigma_ln, &network.quadrature)
}

/// Piecewise-constant bit error profile of hop `j` when the hops in
/// `active` transmit. `j` itself must be active.
pub fn ber_profile(network: &Network, j: usize, active: HopMask) -> Result<Vec<BerSegment>> {
    if !mask_contains(active, j) {
        return Err(Error::Contract(format!("hop {j} is not transmitting")));
    }
    let bits = network.hops[j].packet_bits;
    let entries: Vec<_> = network
        .overlap
        .for_victim(j)
        .iter()
        .filter(|e| mask_contains(active, e.interferer))
        .collect();
    let mut cuts = vec![1, bits + 1];
    for e in &entries {
        cuts.push(e.bits.0);
        cuts.push(e.bits.1 + 1);
    }
    cuts.sort_unstable();
    cuts.dedup();
    let mut segments: Vec<BerSegment> = Vec::new();
    for w in cuts.windows(2) {
        let (first, last) = (w[0], w[1] - 1);
        let hits: Vec<_> = entries
            .iter()
            .filter(|e| e.bits.0 <= first && first <= e.bits.1)
            .collect();
        let interferers: Vec<usize> = hits.iter().map(|e| e.interferer).collect();
        let interference: f64 = hits.iter().map(|e| e.power).sum();
        match segments.last_mut() {
            Some(prev) if prev.interferers == interferers => prev.bits.1 = last,
            _ => segments.push(BerSegment {
                bits: (first, last),
                ber: segment_ber(network, j, interference)?,
                interferers,
                interference,
            }),
        }
    }
    Ok(segments)
}

/// Packet loss probability of hop `j` when the hops in `active` transmit.
pub fn packet_loss_for(network: &Network, j: usize, active: HopMask) -> Result<f64> {
    let profile = ber_profile(network, j, active)?;
    let parts: Vec<(f64, u64)> = profile.iter().map(|s| (s.ber, s.len())).collect();
    packet_loss_segments(&parts)
}

/// Memoized [`packet_loss_for`], keyed on the interferers that actually
/// overlap the victim.
#[derive(Debug, Default)]
pub struct LossCache {
    relevant: Vec<HopMask>,
    memo: HashMap<(usize, HopMask), f64>,
}

impl LossCache {
    pub fn new(network: &Network) -> Self {
        let relevant = (0..network.n_hops())
            .map(|j| {
                network
                    .overlap
                    .for_victim(j)
                    .iter()
                    .fold(0, |m, e| m | 1 << e.interferer)
            })
            .collect();
        Self {
            relevant,
            memo: HashMap::new(),
        }
    }

    pub fn loss(&mut self, network: &Network, j: usize, active: HopMask) -> Result<f64> {
        if !mask_contains(active, j) {
            return Err(Error::Contract(format!("hop {j} is not transmitting")));
        }
        let key = (j, active & self.relevant[j]);
        if let Some(&p) = self.memo.get(&key) {
            return Ok(p);
        }
        let p = packet_loss_for(network, j, key.1 | 1 << j)?;
        self.memo.insert(key, p);
        Ok(p)
    }
}
