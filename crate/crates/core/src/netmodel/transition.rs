//! Per-decision transition matrices and expected throughput vectors.

use serde::{Deserialize, Serialize};

use super::link::{HopMask, LossCache};
use super::state::{Scope, StateSpace, SystemState};
use super::topology::Network;
use crate::error::{Error, Result};

/// Two-state on/off arrival chain at the primary source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficModel {
    /// Probability of turning on from off.
    pub alpha1: f64,
    /// Probability of staying on.
    pub alpha2: f64,
}

impl TrafficModel {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.alpha1) || !unit.contains(&self.alpha2) {
            return Err(Error::Config("traffic probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Long-run fraction of on cycles.
    pub fn stationary_on(&self) -> f64 {
        let denom = 1.0 + self.alpha1 - self.alpha2;
        if denom <= 0.0 {
            1.0
        } else {
            self.alpha1 / denom
        }
    }
}

/// Compressed sparse rows of a stochastic matrix.
#[derive(Debug, Clone, Default)]
pub struct SparseRows {
    ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl SparseRows {
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.ptr[r]..self.ptr[r + 1];
        self.col[span.clone()]
            .iter()
            .zip(&self.val[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(k, _)| k == c).map_or(0.0, |(_, v)| v)
    }

    pub fn rows(&self) -> usize {
        self.ptr.len().saturating_sub(1)
    }
}

/// Outcome of a slot given the random draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotOutcome {
    pub next: usize,
    pub pu_delivered: bool,
    pub su_delivered: bool,
}

/// Markov model of a scope: one matrix and throughput pair per decision.
#[derive(Debug, Clone)]
pub struct TransitionModel {
    pub space: StateSpace,
    pub traffic: TrafficModel,
    /// Bits credited when the last primary / secondary hop of the scope
    /// delivers.
    pub pu_bits: u64,
    pub su_bits: u64,
    matrices: Vec<SparseRows>,
    g_pu: Vec<Vec<f64>>,
    g_su: Vec<Vec<f64>>,
    /// Loss per (decision, state, scope hop); zero for silent hops.
    losses: Vec<Vec<f64>>,
    /// Transmitting network hops per (decision, state).
    active: Vec<Vec<HopMask>>,
}

impl TransitionModel {
    pub fn build(network: &Network, traffic: TrafficModel, scope: Scope, cap: usize) -> Result<Self> {
        traffic.validate()?;
        let space = StateSpace::new(network, scope, cap)?;
        let scope = space.scope.clone();
        let (m, n) = (scope.m(), scope.n());
        let hops = m + n;
        let pu_bits = scope.pu_hops.last().map_or(0, |&j| network.hops[network.pu_hop(j)].packet_bits);
        let su_bits = network.hops[network.su_hop(scope.su_hops[n - 1])].packet_bits;
        let mut cache = LossCache::new(network);
        let decisions = 1usize << n;
        let mut model = Self {
            space,
            traffic,
            pu_bits,
            su_bits,
            matrices: Vec::with_capacity(decisions),
            g_pu: Vec::with_capacity(decisions),
            g_su: Vec::with_capacity(decisions),
            losses: Vec::with_capacity(decisions),
            active: Vec::with_capacity(decisions),
        };
        let states = model.space.len();
        for delta in 0..decisions as u32 {
            let mut rows = SparseRows {
                ptr: vec![0],
                ..Default::default()
            };
            let mut g_pu = vec![0.0; states];
            let mut g_su = vec![0.0; states];
            let mut losses = vec![0.0; states * hops];
            let mut active_masks = vec![0; states];
            let mut next: Vec<(usize, f64)> = Vec::new();
            for si in 0..states {
                let s = model.space.state(si);
                let tx = model.transmitting(s, delta);
                let mut mask: HopMask = 0;
                for k in 0..hops {
                    if tx >> k & 1 == 1 {
                        mask |= 1 << scope.flat_hop(network, k);
                    }
                }
                active_masks[si] = mask;
                for k in 0..hops {
                    if tx >> k & 1 == 1 {
                        losses[si * hops + k] = cache.loss(network, scope.flat_hop(network, k), mask)?;
                    }
                }
                let loss = &losses[si * hops..(si + 1) * hops];
                if m > 0 && tx >> (m - 1) & 1 == 1 {
                    g_pu[si] = pu_bits as f64 * (1.0 - loss[m - 1]);
                }
                if tx >> (hops - 1) & 1 == 1 {
                    g_su[si] = su_bits as f64 * (1.0 - loss[hops - 1]);
                }
                // Hops whose success changes the next state.
                let relevant: Vec<usize> = (0..hops)
                    .filter(|&k| tx >> k & 1 == 1 && k != m.wrapping_sub(1) && k != hops - 1)
                    .collect();
                let p_on = model.on_probability(s);
                next.clear();
                for outcome in 0..1u32 << relevant.len() {
                    let mut p = 1.0;
                    let mut success = 0u64;
                    for (b, &k) in relevant.iter().enumerate() {
                        if outcome >> b & 1 == 1 {
                            p *= 1.0 - loss[k];
                            success |= 1 << k;
                        } else {
                            p *= loss[k];
                        }
                    }
                    for (on, q) in [(true, p_on), (false, 1.0 - p_on)] {
                        if q * p == 0.0 {
                            continue;
                        }
                        let target = model.advance(s, delta, on, success)?;
                        match next.iter_mut().find(|(c, _)| *c == target) {
                            Some(entry) => entry.1 += q * p,
                            None => next.push((target, q * p)),
                        }
                    }
                }
                next.sort_unstable_by_key(|&(c, _)| c);
                for &(c, v) in &next {
                    rows.col.push(c as u32);
                    rows.val.push(v);
                }
                rows.ptr.push(rows.col.len());
            }
            model.matrices.push(rows);
            model.g_pu.push(g_pu);
            model.g_su.push(g_su);
            model.losses.push(losses);
            model.active.push(active_masks);
        }
        Ok(model)
    }

    /// Probability that the arrival chain is on after leaving `s`.
    fn on_probability(&self, s: SystemState) -> f64 {
        let Some(src) = self.space.source_phase() else {
            return 0.0;
        };
        let on = s.pu & 1 == 1;
        if (s.phase + 1) % 3 == src {
            if on {
                self.traffic.alpha2
            } else {
                self.traffic.alpha1
            }
        } else if on {
            1.0
        } else {
            0.0
        }
    }

    pub fn n_states(&self) -> usize {
        self.space.len()
    }

    pub fn n_decisions(&self) -> usize {
        self.matrices.len()
    }

    pub fn scope(&self) -> &Scope {
        &self.space.scope
    }

    /// Decision bits restricted to non-empty buffers.
    pub fn effective(&self, si: usize, delta: u32) -> u32 {
        delta & self.space.state(si).su
    }

    /// Scope positions (primaries then secondaries) transmitting in `s`.
    pub fn transmitting(&self, s: SystemState, delta: u32) -> u64 {
        let m = self.scope().m();
        self.space.pu_transmitting(s) as u64 | ((delta & s.su) as u64) << m
    }

    /// Network hops transmitting in state `si` under `delta`.
    pub fn active_hops(&self, si: usize, delta: u32) -> HopMask {
        self.active[delta as usize][si]
    }

    /// Deterministic successor given the arrival chain and per-hop
    /// successes (bit `k` for scope position `k`).
    pub fn advance(&self, s: SystemState, delta: u32, chain_on: bool, success: u64) -> Result<usize> {
        let (m, n) = (self.scope().m(), self.scope().n());
        let tx = self.transmitting(s, delta);
        let delivered = tx & success;
        let mut pu = 0u32;
        if m > 0 && chain_on {
            pu |= 1;
        }
        for k in 1..m {
            if delivered >> (k - 1) & 1 == 1 {
                pu |= 1 << k;
            }
        }
        let sent = (tx >> m) as u32;
        let arrived = ((delivered >> m) as u32) << 1;
        let mask = (1u32 << n) - 1;
        let su = ((s.su & !sent) | arrived | 1) & mask;
        let next = SystemState {
            phase: (s.phase + 1) % 3,
            pu,
            su,
        };
        self.space
            .index_of(next)
            .ok_or_else(|| Error::Numerical(format!("successor {next:?} is not enumerated")))
    }

    pub fn matrix(&self, delta: u32) -> &SparseRows {
        &self.matrices[delta as usize]
    }

    pub fn g_pu(&self, delta: u32) -> &[f64] {
        &self.g_pu[delta as usize]
    }

    pub fn g_su(&self, delta: u32) -> &[f64] {
        &self.g_su[delta as usize]
    }

    /// Total expected delivered bits per state.
    pub fn g(&self, delta: u32) -> Vec<f64> {
        self.g_pu(delta).iter().zip(self.g_su(delta)).map(|(a, b)| a + b).collect()
    }

    /// Loss of scope position `k` in state `si` (zero when silent).
    pub fn loss(&self, si: usize, delta: u32, k: usize) -> f64 {
        let hops = self.scope().m() + self.scope().n();
        self.losses[delta as usize][si * hops + k]
    }

    /// `ωᵀ P(δ)`.
    pub fn predict(&self, belief: &[f64], delta: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states()];
        let matrix = self.matrix(delta);
        for (r, &w) in belief.iter().enumerate() {
            if w != 0.0 {
                for (c, p) in matrix.row(r) {
                    out[c] += w * p;
                }
            }
        }
        out
    }

    /// Samples the slot outcome from uniform draws: `arrival` for the
    /// arrival chain and `draws[k]` for scope position `k`.
    pub fn outcome(&self, si: usize, delta: u32, arrival: f64, draws: &[f64]) -> Result<SlotOutcome> {
        let s = self.space.state(si);
        let (m, n) = (self.scope().m(), self.scope().n());
        if delta & !s.su & ((1 << n) - 1) != 0 {
            return Err(Error::Contract(format!(
                "decision {delta:#b} transmits from an empty buffer in state {s:?}"
            )));
        }
        let tx = self.transmitting(s, delta);
        let mut success = 0u64;
        for (k, &u) in draws.iter().enumerate().take(m + n) {
            if tx >> k & 1 == 1 && u >= self.loss(si, delta, k) {
                success |= 1 << k;
            }
        }
        let chain_on = arrival < self.on_probability(s);
        let next = self.advance(s, delta, chain_on, success)?;
        Ok(SlotOutcome {
            next,
            pu_delivered: m > 0 && success >> (m - 1) & 1 == 1,
            su_delivered: success >> (m + n - 1) & 1 == 1,
        })
    }
}
