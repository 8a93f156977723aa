//! Comparison schemes: fixed-threshold cognitive access over time or
//! frequency division, interference alignment against a broadcast primary
//! schedule, and the frequency-division variant of the network itself.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::channel::Band;
use crate::decentral::{local_beta, LocalModel, LocalTracker};
use crate::error::{Error, Result};
use crate::netmodel::{Carrier, Network, NetworkSpec, TransitionModel, REUSE_FACTOR};
use crate::policy::{Policy, SlotContext};

/// Occupancy probability above which the threshold schemes stay silent.
pub const OCCUPANCY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubChannel {
    pub center_khz: f64,
    pub bandwidth_khz: f64,
    pub bit_rate_kbps: f64,
}

/// Split of the system band into sub-channels, assigned to hops by hop
/// index modulo the channel count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandPlan {
    pub channels: Vec<SubChannel>,
    pub guard_khz: f64,
}

impl BandPlan {
    /// Three 1.2 kHz channels at 30.6, 32 and 33.4 kHz with 0.2 kHz guards.
    pub fn three_way() -> Self {
        let ch = |center_khz| SubChannel {
            center_khz,
            bandwidth_khz: 1.2,
            bit_rate_kbps: 3.0,
        };
        Self {
            channels: vec![ch(30.6), ch(32.0), ch(33.4)],
            guard_khz: 0.2,
        }
    }

    pub fn assignment(&self, hop: usize) -> usize {
        hop % self.channels.len()
    }

    pub fn validate(&self, system: &Band) -> Result<()> {
        let tol = 1e-9;
        if self.channels.is_empty() {
            return Err(Error::Config("band plan has no channels".into()));
        }
        if self.channels.len() == 2 {
            return Err(Error::Config(
                "two channels cannot keep three consecutive nodes apart".into(),
            ));
        }
        if !(self.guard_khz >= 0.0) {
            return Err(Error::Config("guard band must be non-negative".into()));
        }
        let mut edges = Vec::new();
        for c in &self.channels {
            let band = Band::new(c.center_khz, c.bandwidth_khz)?;
            if !(c.bit_rate_kbps > 0.0) {
                return Err(Error::Config("sub-channel bit rate must be positive".into()));
            }
            if band.low_khz() < system.low_khz() - tol || band.high_khz() > system.high_khz() + tol {
                return Err(Error::Config(format!(
                    "sub-channel at {} kHz leaves the system band",
                    c.center_khz
                )));
            }
            edges.push((band.low_khz(), band.high_khz()));
        }
        edges.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in edges.windows(2) {
            if w[1].0 - w[0].1 < self.guard_khz - tol {
                return Err(Error::Config("sub-channels violate the guard band".into()));
            }
        }
        Ok(())
    }
}

/// Frequency-division variant: every hop moves to its sub-channel and each
/// packet shrinks, if needed, to fit the slot at the sub-channel rate.
pub fn build_fdm_spec(spec: &NetworkSpec, plan: &BandPlan, system: &Band) -> Result<NetworkSpec> {
    plan.validate(system)?;
    let mut out = spec.clone();
    out.carriers = plan
        .channels
        .iter()
        .map(|c| {
            Ok(Carrier {
                band: Band::new(c.center_khz, c.bandwidth_khz)?,
                bit_rate_kbps: c.bit_rate_kbps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.pu_carrier = (0..spec.topology.n_pu()).map(|j| plan.assignment(j)).collect();
    out.su_carrier = (0..spec.topology.n_su()).map(|i| plan.assignment(i)).collect();
    let c = spec.environment.sound_speed;
    let fit = |length: f64, carrier: usize, bits: u64| -> Result<u64> {
        let room = (spec.slot_length - length / c) * out.carriers[carrier].bit_rate_kbps * 1e3;
        let fitted = ((room + 1e-9).floor() as u64) / 8 * 8;
        if fitted == 0 {
            return Err(Error::Config("a sub-channel cannot carry any packet within the slot".into()));
        }
        Ok(bits.min(fitted))
    };
    let hops = spec.hops();
    let n_pu = spec.topology.n_pu();
    for (k, hop) in hops.iter().enumerate() {
        if k < n_pu {
            out.pu_packet_bits[k] = fit(hop.length, out.pu_carrier[k], hop.packet_bits)?;
        } else {
            let i = k - n_pu;
            out.su_packet_bits[i] = fit(hop.length, out.su_carrier[i], hop.packet_bits)?;
        }
    }
    Ok(out)
}

/// Which occupancy the threshold rule looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Occupancy {
    /// Any local primary, with the reuse cycle (time division).
    AllWithReuse,
    /// Local primaries on the hop's own sub-channel, every slot.
    SameChannel,
}

/// `δ = X · Y` with `X ~ Bernoulli(1 - β̄)` and `Y` the occupancy test.
pub fn threshold_rule(occupancy: f64, x_draw: f64, beta_bar: f64) -> bool {
    x_draw < 1.0 - beta_bar && occupancy <= OCCUPANCY_THRESHOLD
}

/// The fixed-threshold cognitive schemes.
#[derive(Debug, Clone)]
pub struct ThresholdPolicy<'a> {
    locals: &'a [LocalModel],
    trackers: Vec<LocalTracker>,
    beta_bar: f64,
    mode: Occupancy,
    actions: u32,
}

impl<'a> ThresholdPolicy<'a> {
    pub fn new(locals: &'a [LocalModel], beta: f64, mode: Occupancy) -> Self {
        Self {
            trackers: locals.iter().map(LocalTracker::new).collect(),
            beta_bar: local_beta(beta, locals.len()),
            locals,
            mode,
            actions: 0,
        }
    }
}

impl Policy for ThresholdPolicy<'_> {
    fn decide(&mut self, ctx: &SlotContext, rng: &mut dyn RngCore) -> Result<u32> {
        let mut delta = 0;
        for (i, local) in self.locals.iter().enumerate() {
            let x: f64 = rng.random();
            let tracker = &mut self.trackers[i];
            tracker.advance(local);
            let (occupancy, eligible) = match self.mode {
                Occupancy::AllWithReuse => (
                    local.occupancy(&tracker.predicted),
                    ctx.t % REUSE_FACTOR == i % REUSE_FACTOR,
                ),
                Occupancy::SameChannel => (local.channel_occupancy(&tracker.predicted), true),
            };
            if eligible && threshold_rule(occupancy, x, self.beta_bar) {
                delta |= 1 << i;
            }
        }
        self.actions = delta & ctx.buffers;
        Ok(delta)
    }

    fn observe(&mut self, _: usize, y: &[f64]) -> Result<()> {
        for (i, local) in self.locals.iter().enumerate() {
            self.trackers[i].update(local, self.actions >> i & 1 == 1, y[i])?;
        }
        Ok(())
    }
}

/// Alignment settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignmentSettings {
    /// Slots per primary schedule broadcast; the first slot of each frame
    /// is spent on the broadcast.
    pub frame_slots: usize,
    pub access_probability: f64,
}

impl Default for AlignmentSettings {
    fn default() -> Self {
        Self {
            frame_slots: 30,
            access_probability: 1.0 / 3.0,
        }
    }
}

impl AlignmentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.frame_slots < 2 {
            return Err(Error::Config("alignment frame needs at least two slots".into()));
        }
        if !(0.0..=1.0).contains(&self.access_probability) {
            return Err(Error::Config("access probability outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Whether secondary hop `i`'s signal would overlap the reception of any
/// primary hop in `pu_tx` (chain-index bitmask).
pub fn hits_primary(network: &Network, i: usize, pu_tx: u32) -> bool {
    let su = network.su_hop(i);
    (0..network.n_pu)
        .filter(|&j| pu_tx >> j & 1 == 1)
        .any(|j| network.overlap.entry(su, network.pu_hop(j)).is_some())
}

/// Interference alignment against the known primary schedule with random
/// access among secondaries.
#[derive(Debug, Clone)]
pub struct AlignmentPolicy<'a> {
    network: &'a Network,
    model: &'a TransitionModel,
    settings: AlignmentSettings,
}

impl<'a> AlignmentPolicy<'a> {
    pub fn new(network: &'a Network, model: &'a TransitionModel, settings: AlignmentSettings) -> Self {
        Self {
            network,
            model,
            settings,
        }
    }
}

impl Policy for AlignmentPolicy<'_> {
    fn decide(&mut self, ctx: &SlotContext, rng: &mut dyn RngCore) -> Result<u32> {
        let pu_tx = self.model.space.pu_transmitting(ctx.state);
        let broadcast = ctx.t.is_multiple_of(self.settings.frame_slots);
        let mut delta = 0;
        for i in 0..self.network.n_su {
            let u: f64 = rng.random();
            if !broadcast && u < self.settings.access_probability && !hits_primary(self.network, i, pu_tx) {
                delta |= 1 << i;
            }
        }
        Ok(delta)
    }

    fn observe(&mut self, _: usize, _: &[f64]) -> Result<()> {
        Ok(())
    }
}
