//! Node placement, carriers and the built physical layer of a network.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::overlap::OverlapTable;
use crate::channel::{
    band_path_gain, db_to_linear, fit_link_gain, in_band_noise_power, AcousticEnvironment, Band,
    GaussHermite, LinkGainModel, MultipathGeometry, PathSpec, DEFAULT_GH_ORDER,
};
use crate::error::{Error, Result};

/// Reuse period of the slot eligibility cycle along a chain.
pub const REUSE_FACTOR: usize = 3;

/// Frequency points used when integrating in-band noise.
const NOISE_GRID_POINTS: usize = 201;

pub type Point = [f64; 3];

pub fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Positions of the primary and secondary relay chains, metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub pu_nodes: Vec<Point>,
    pub su_nodes: Vec<Point>,
}

impl Topology {
    /// Two straight chains crossing at right angles: primaries along the
    /// x axis, secondaries along y at `su_x`.
    pub fn crossing(n_pu: usize, n_su: usize, hop: f64, su_x: f64, depth: f64) -> Self {
        let pu_nodes = (0..=n_pu).map(|j| [hop * j as f64, 0.0, -depth]).collect();
        let half = hop * n_su as f64 / 2.0;
        let su_nodes = (0..=n_su)
            .map(|i| [su_x, hop * i as f64 - half, -depth])
            .collect();
        Self { pu_nodes, su_nodes }
    }

    pub fn n_pu(&self) -> usize {
        self.pu_nodes.len().saturating_sub(1)
    }

    pub fn n_su(&self) -> usize {
        self.su_nodes.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pu() < 1 || self.n_su() < 1 {
            return Err(Error::Config("both chains need at least one hop".into()));
        }
        for (name, nodes) in [("pu_nodes", &self.pu_nodes), ("su_nodes", &self.su_nodes)] {
            if nodes.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("{name} contains a non-finite coordinate")));
            }
            if nodes.iter().any(|p| p[2] > 0.0) {
                return Err(Error::Config(format!("{name} must lie below the surface (z <= 0)")));
            }
            for (k, w) in nodes.windows(2).enumerate() {
                if !(distance(&w[0], &w[1]) > 0.0) {
                    return Err(Error::Config(format!("{name} hop {k} has zero length")));
                }
            }
        }
        Ok(())
    }
}

/// One frequency channel with its signalling rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub band: Band,
    pub bit_rate_kbps: f64,
}

/// Which chain a hop belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chain {
    Primary,
    Secondary,
}

/// Everything needed to build the physical layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub topology: Topology,
    pub environment: AcousticEnvironment,
    pub paths: PathSpec,
    pub slot_length: f64,
    pub tx_power_db: f64,
    pub carriers: Vec<Carrier>,
    pub pu_carrier: Vec<usize>,
    pub su_carrier: Vec<usize>,
    pub pu_packet_bits: Vec<u64>,
    pub su_packet_bits: Vec<u64>,
    /// Seed for the channel-gain fits, independent of episode seeds.
    pub channel_seed: u64,
}

/// A transmitter/receiver pair of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Hop {
    pub chain: Chain,
    /// Index within its chain.
    pub index: usize,
    pub tx: Point,
    pub rx: Point,
    /// Node identifiers `(chain, node index)` used for half-duplex checks.
    pub tx_node: (Chain, usize),
    pub rx_node: (Chain, usize),
    pub length: f64,
    pub carrier: usize,
    pub packet_bits: u64,
    /// Bits per second.
    pub bit_rate: f64,
}

impl Hop {
    /// Time for the packet to leave the transmitter, seconds.
    pub fn duration(&self) -> f64 {
        self.packet_bits as f64 / self.bit_rate
    }
}

/// The built physical layer: hops, fitted gains, noise and overlaps.
///
/// Hops are indexed flat: primaries `0..n_pu`, then secondaries.
#[derive(Debug, Clone)]
pub struct Network {
    pub spec: NetworkSpec,
    pub hops: Vec<Hop>,
    pub n_pu: usize,
    pub n_su: usize,
    /// In-band noise power per carrier, µPa².
    pub noise: Vec<f64>,
    /// Desired-signal gain model per hop.
    pub gains: Vec<LinkGainModel>,
    /// Ratio of mean fitted gain to the deterministic band gain, per hop.
    pub fading_factor: Vec<f64>,
    pub overlap: OverlapTable,
    pub tx_power: f64,
    pub quadrature: GaussHermite,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.environment.validate()?;
        self.paths.validate()?;
        let (n_pu, n_su) = (self.topology.n_pu(), self.topology.n_su());
        if n_pu + n_su > 40 {
            return Err(Error::Config("at most 40 hops are supported".into()));
        }
        if !(self.slot_length > 0.0) {
            return Err(Error::Config("slot length must be positive".into()));
        }
        if self.carriers.is_empty() {
            return Err(Error::Config("at least one carrier is required".into()));
        }
        for c in &self.carriers {
            Band::new(c.band.center_khz, c.band.bandwidth_khz)?;
            if !(c.bit_rate_kbps > 0.0) {
                return Err(Error::Config("carrier bit rate must be positive".into()));
            }
        }
        let lens = [
            ("pu_carrier", self.pu_carrier.len(), n_pu),
            ("su_carrier", self.su_carrier.len(), n_su),
            ("pu_packet_bits", self.pu_packet_bits.len(), n_pu),
            ("su_packet_bits", self.su_packet_bits.len(), n_su),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(Error::Config(format!("{name} has {got} entries, expected {want}")));
            }
        }
        if self
            .pu_carrier
            .iter()
            .chain(&self.su_carrier)
            .any(|&c| c >= self.carriers.len())
        {
            return Err(Error::Config("hop assigned to an unknown carrier".into()));
        }
        if self.pu_packet_bits.iter().chain(&self.su_packet_bits).any(|&b| b == 0) {
            return Err(Error::Config("packet sizes must be positive".into()));
        }
        Ok(())
    }

    /// Flat list of hops in primary-then-secondary order.
    pub fn hops(&self) -> Vec<Hop> {
        let mut hops = Vec::new();
        let chains = [
            (Chain::Primary, &self.topology.pu_nodes, &self.pu_carrier, &self.pu_packet_bits),
            (Chain::Secondary, &self.topology.su_nodes, &self.su_carrier, &self.su_packet_bits),
        ];
        for (chain, nodes, carrier, bits) in chains {
            for k in 0..nodes.len().saturating_sub(1) {
                let c = carrier[k];
                hops.push(Hop {
                    chain,
                    index: k,
                    tx: nodes[k],
                    rx: nodes[k + 1],
                    tx_node: (chain, k),
                    rx_node: (chain, k + 1),
                    length: distance(&nodes[k], &nodes[k + 1]),
                    carrier: c,
                    packet_bits: bits[k],
                    bit_rate: self.carriers[c].bit_rate_kbps * 1e3,
                });
            }
        }
        hops
    }
}

impl Network {
    pub fn build(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let hops = spec.hops();
        let env = &spec.environment;
        for hop in &hops {
            let end = hop.length / env.sound_speed + hop.duration();
            if end > spec.slot_length + 1e-9 {
                return Err(Error::Config(format!(
                    "{:?} hop {} needs {end:.3} s but the slot is {} s",
                    hop.chain, hop.index, spec.slot_length
                )));
            }
        }
        let noise = spec
            .carriers
            .iter()
            .map(|c| in_band_noise_power(&c.band, env, NOISE_GRID_POINTS))
            .collect::<Result<Vec<_>>>()?;

        let mut fits: HashMap<[i64; 4], LinkGainModel> = HashMap::new();
        let mut gains = Vec::with_capacity(hops.len());
        let mut fading_factor = Vec::with_capacity(hops.len());
        for hop in &hops {
            let range = (hop.tx[0] - hop.rx[0]).hypot(hop.tx[1] - hop.rx[1]);
            let key = [
                (range * 1e3).round() as i64,
                (hop.tx[2] * 1e3).round() as i64,
                (hop.rx[2] * 1e3).round() as i64,
                hop.carrier as i64,
            ];
            let band = spec.carriers[hop.carrier].band;
            let fit = match fits.get(&key) {
                Some(fit) => *fit,
                None => {
                    let fit = fit_hop(&spec, &band, range, -hop.tx[2], -hop.rx[2], key)?;
                    fits.insert(key, fit);
                    fit
                }
            };
            fading_factor.push(fit.mean_gain() / band_path_gain(hop.length, &band, env)?);
            gains.push(fit);
        }
        let tx_power = db_to_linear(spec.tx_power_db);
        let mut network = Self {
            n_pu: spec.topology.n_pu(),
            n_su: spec.topology.n_su(),
            spec,
            hops,
            noise,
            gains,
            fading_factor,
            overlap: OverlapTable::default(),
            tx_power,
            quadrature: GaussHermite::new(DEFAULT_GH_ORDER)?,
        };
        network.overlap = OverlapTable::build(&network)?;
        Ok(network)
    }

    /// Rebuilds overlaps for new secondary packet sizes, keeping the fitted
    /// physics.
    pub fn with_su_packet_bits(&self, bits: &[u64]) -> Result<Self> {
        if bits.len() != self.n_su {
            return Err(Error::Config("one packet size per secondary hop is required".into()));
        }
        let mut next = self.clone();
        next.spec.su_packet_bits = bits.to_vec();
        for (i, &b) in bits.iter().enumerate() {
            let hop = &mut next.hops[self.n_pu + i];
            hop.packet_bits = b;
            let end = hop.length / self.spec.environment.sound_speed + hop.duration();
            if b == 0 || end > self.spec.slot_length + 1e-9 {
                return Err(Error::Config(format!("secondary packet of {b} bits does not fit hop {i}")));
            }
        }
        next.overlap = OverlapTable::build(&next)?;
        Ok(next)
    }

    pub fn n_hops(&self) -> usize {
        self.hops.len()
    }

    pub fn pu_hop(&self, j: usize) -> usize {
        j
    }

    pub fn su_hop(&self, i: usize) -> usize {
        self.n_pu + i
    }

    pub fn sound_speed(&self) -> f64 {
        self.spec.environment.sound_speed
    }

    /// Mean power received at `point` from the transmitter of hop `u`.
    pub fn received_power(&self, u: usize, point: &Point) -> Result<f64> {
        let hop = &self.hops[u];
        let d = distance(&hop.tx, point);
        if !(d > 0.0) {
            return Err(Error::Domain("receiver coincides with the transmitter".into()));
        }
        let band = self.spec.carriers[hop.carrier].band;
        Ok(self.tx_power * band_path_gain(d, &band, &self.spec.environment)? * self.fading_factor[u])
    }
}

fn fit_hop(
    spec: &NetworkSpec,
    band: &Band,
    range: f64,
    tx_depth: f64,
    rx_depth: f64,
    key: [i64; 4],
) -> Result<LinkGainModel> {
    let geometry = MultipathGeometry::surface_bottom(range, tx_depth, rx_depth, &spec.paths, band.center_khz)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.channel_seed);
    let stream = key
        .iter()
        .fold(0u64, |acc, &k| acc.wrapping_mul(0x100_0000_01b3).wrapping_add(k as u64));
    rng.set_stream(stream);
    fit_link_gain(&geometry, band, &spec.environment, spec.paths.sample_count, &mut rng)
}
