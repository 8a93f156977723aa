//! Joint primary/secondary state encoding.

use serde::Serialize;

use super::topology::{Network, REUSE_FACTOR};
use crate::error::{Error, Result};

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_CAP: usize = 1 << 16;

/// Hops covered by a model: contiguous runs of each chain. The first
/// primary hop carries the on/off arrival chain and the first secondary
/// hop is permanently backlogged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Scope {
    pub pu_hops: Vec<usize>,
    pub su_hops: Vec<usize>,
}

impl Scope {
    pub fn full(network: &Network) -> Self {
        Self {
            pu_hops: (0..network.n_pu).collect(),
            su_hops: (0..network.n_su).collect(),
        }
    }

    /// Primary hops `pu` (possibly empty) and the single secondary hop `su`.
    pub fn local(pu: std::ops::Range<usize>, su: usize) -> Self {
        Self {
            pu_hops: pu.collect(),
            su_hops: vec![su],
        }
    }

    pub fn m(&self) -> usize {
        self.pu_hops.len()
    }

    pub fn n(&self) -> usize {
        self.su_hops.len()
    }

    /// Flat network hop index of scope position `k` (primaries first).
    pub fn flat_hop(&self, network: &Network, k: usize) -> usize {
        if k < self.m() {
            network.pu_hop(self.pu_hops[k])
        } else {
            network.su_hop(self.su_hops[k - self.m()])
        }
    }

    fn validate(&self, network: &Network) -> Result<()> {
        let contiguous = |v: &[usize], n: usize| {
            v.windows(2).all(|w| w[1] == w[0] + 1) && v.iter().all(|&h| h < n)
        };
        if !contiguous(&self.pu_hops, network.n_pu) || !contiguous(&self.su_hops, network.n_su) {
            return Err(Error::Config("model scope must be contiguous runs of existing hops".into()));
        }
        if self.su_hops.is_empty() {
            return Err(Error::Config("model scope needs a secondary hop".into()));
        }
        Ok(())
    }
}

/// Slot phase plus primary and secondary bit vectors, in scope order.
///
/// Primary bit 0 is the arrival chain's on/off state; primary bit `k >= 1`
/// marks a packet waiting at that hop, which only happens in the hop's
/// eligible phase. Secondary bit 0 is always set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SystemState {
    pub phase: u8,
    pub pu: u32,
    pub su: u32,
}

/// Enumerated reachable states of a scope.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub scope: Scope,
    /// Eligible phase of each primary hop in scope.
    pub pu_phase: Vec<u8>,
    states: Vec<SystemState>,
    lookup: Vec<u32>,
}

impl StateSpace {
    pub fn new(network: &Network, scope: Scope, cap: usize) -> Result<Self> {
        scope.validate(network)?;
        let (m, n) = (scope.m(), scope.n());
        if m + n > 24 {
            return Err(Error::Config(format!("scope of {} hops exceeds the state-space cap", m + n)));
        }
        let pu_phase: Vec<u8> = scope.pu_hops.iter().map(|&j| (j % REUSE_FACTOR) as u8).collect();
        let mut states = Vec::new();
        let mut lookup = vec![u32::MAX; REUSE_FACTOR << (m + n)];
        for phase in 0..REUSE_FACTOR as u8 {
            for su in 0..1u32 << n {
                if su & 1 == 0 {
                    continue;
                }
                for pu in 0..1u32 << m {
                    let ok = (1..m).all(|k| pu >> k & 1 == 0 || pu_phase[k] == phase);
                    if !ok {
                        continue;
                    }
                    let s = SystemState { phase, pu, su };
                    lookup[Self::key(m, s)] = states.len() as u32;
                    states.push(s);
                    if states.len() > cap {
                        return Err(Error::Config(format!(
                            "state space exceeds the cap of {cap} states"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            scope,
            pu_phase,
            states,
            lookup,
        })
    }

    fn key(m: usize, s: SystemState) -> usize {
        s.phase as usize + REUSE_FACTOR * ((s.pu as usize) | (s.su as usize) << m)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, index: usize) -> SystemState {
        self.states[index]
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn index_of(&self, s: SystemState) -> Option<usize> {
        self.lookup
            .get(Self::key(self.scope.m(), s))
            .filter(|&&i| i != u32::MAX)
            .map(|&i| i as usize)
    }

    /// Phase in which the arrival chain is redrawn.
    pub fn source_phase(&self) -> Option<u8> {
        self.pu_phase.first().copied()
    }

    /// Scope positions of primary hops transmitting in `s`.
    pub fn pu_transmitting(&self, s: SystemState) -> u32 {
        (0..self.scope.m())
            .filter(|&k| s.pu >> k & 1 == 1 && self.pu_phase[k] == s.phase)
            .fold(0, |acc, k| acc | 1 << k)
    }

    /// Start of an episode at global slot `t = 0`: idle primaries,
    /// only the backlogged secondary source holding data.
    pub fn initial_index(&self) -> usize {
        self.index_of(SystemState { phase: 0, pu: 0, su: 1 })
            .expect("initial state is always enumerated")
    }
}
