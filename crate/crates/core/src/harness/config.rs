//! Scenario configuration files.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{build_fdm_spec, AlignmentSettings, BandPlan};
use crate::channel::{AcousticEnvironment, Band, PathSpec};
use crate::error::{Error, Result, ValidationIssue};
use crate::netmodel::{Carrier, NetworkSpec, Point, Topology, TrafficModel, DEFAULT_STATE_CAP};

/// Horizon and run count of a quick desk run.
pub const DESK_HORIZON: usize = 300;
pub const DESK_RUNS: usize = 30;
/// Horizon and run count matching the full-size evaluation.
pub const FULL_HORIZON: usize = 1000;
pub const FULL_RUNS: usize = 100;

/// Secondary scheduling schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Ccts,
    Dcts,
    Ctdm,
    Ia,
    Cfdm,
    DctsFdm,
    Silent,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Ccts,
        Scheme::Dcts,
        Scheme::Ctdm,
        Scheme::Ia,
        Scheme::Cfdm,
        Scheme::DctsFdm,
        Scheme::Silent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ccts => "ccts",
            Scheme::Dcts => "dcts",
            Scheme::Ctdm => "ctdm",
            Scheme::Ia => "ia",
            Scheme::Cfdm => "cfdm",
            Scheme::DctsFdm => "dcts-fdm",
            Scheme::Silent => "silent",
        }
    }

    /// Whether the scheme runs on the frequency-division network.
    pub fn uses_fdm(self) -> bool {
        matches!(self, Scheme::Cfdm | Scheme::DctsFdm)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyConfig {
    /// Straight chains crossing at right angles; the secondary chain sits
    /// `su_position` primary hops along the primary chain.
    Crossing {
        n_pu: usize,
        n_su: usize,
        hop_length: f64,
        su_position: f64,
        depth: f64,
    },
    Explicit {
        pu_nodes: Vec<Point>,
        su_nodes: Vec<Point>,
    },
}

impl TopologyConfig {
    pub fn build(&self) -> Topology {
        match self {
            TopologyConfig::Crossing {
                n_pu,
                n_su,
                hop_length,
                su_position,
                depth,
            } => Topology::crossing(*n_pu, *n_su, *hop_length, su_position * hop_length, *depth),
            TopologyConfig::Explicit { pu_nodes, su_nodes } => Topology {
                pu_nodes: pu_nodes.clone(),
                su_nodes: su_nodes.clone(),
            },
        }
    }
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig::Crossing {
            n_pu: 4,
            n_su: 4,
            hop_length: 2500.0,
            su_position: 0.5,
            depth: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Slotting {
    /// Slot length, s.
    pub slot_length: f64,
    pub horizon: usize,
}

impl Default for Slotting {
    fn default() -> Self {
        Self {
            slot_length: 3.0,
            horizon: DESK_HORIZON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Radio {
    /// Source level, dB re 1 µPa.
    pub tx_power_db: f64,
    pub center_khz: f64,
    pub bandwidth_khz: f64,
    pub bit_rate_kbps: f64,
}

impl Default for Radio {
    fn default() -> Self {
        Self {
            tx_power_db: 130.0,
            center_khz: 32.0,
            bandwidth_khz: 4.0,
            bit_rate_kbps: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Packets {
    pub pu_bytes: u64,
    pub su_bytes: u64,
    /// Pick each secondary packet size by the throughput LP.
    pub optimize: bool,
}

impl Default for Packets {
    fn default() -> Self {
        Self {
            pu_bytes: 1500,
            su_bytes: 1500,
            optimize: false,
        }
    }
}

fn default_runs() -> usize {
    DESK_RUNS
}

fn default_cap() -> usize {
    DEFAULT_STATE_CAP
}

fn default_traffic() -> TrafficModel {
    TrafficModel {
        alpha1: 0.05,
        alpha2: 0.2,
    }
}

/// Attenuation constant of -10 dB, which puts a lone 2.5 km hop at a few
/// percent packet loss with the default radio.
fn default_environment() -> AcousticEnvironment {
    AcousticEnvironment {
        normalizing_constant: 0.1,
        ..Default::default()
    }
}

fn default_beta() -> f64 {
    0.8
}

fn default_channel_seed() -> u64 {
    7
}

/// Complete description of one evaluation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default = "default_environment")]
    pub environment: AcousticEnvironment,
    #[serde(default)]
    pub multipath: PathSpec,
    #[serde(default = "default_traffic")]
    pub traffic: TrafficModel,
    /// Required fraction of the silent-secondary primary throughput.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub slotting: Slotting,
    #[serde(default)]
    pub radio: Radio,
    #[serde(default)]
    pub packets: Packets,
    /// Sub-channels of the frequency-division schemes.
    #[serde(default = "BandPlan::three_way")]
    pub band_plan: BandPlan,
    /// Energy measurement noise; derived from the geometry when absent.
    #[serde(default)]
    pub observation_sigma: Option<f64>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub alignment: AlignmentSettings,
    /// Seed of the multipath gain fits.
    #[serde(default = "default_channel_seed")]
    pub channel_seed: u64,
    #[serde(default = "default_cap")]
    pub state_cap: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty object yields defaults")
    }
}

impl ScenarioConfig {
    /// Reads and validates a JSON configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let mut check = |ok: bool, path: &str, message: &str| {
            if !ok {
                issues.push(ValidationIssue::new(path, message));
            }
        };
        let unit = 0.0..=1.0;
        let (a1, a2) = (self.traffic.alpha1, self.traffic.alpha2);
        check(unit.contains(&a1), "traffic.alpha1", "must lie in [0, 1]");
        check(unit.contains(&a2), "traffic.alpha2", "must lie in [0, 1]");
        check(a1 < a2, "traffic.alpha1", "must be smaller than traffic.alpha2");
        check(unit.contains(&self.beta), "beta", "must lie in [0, 1]");
        check(
            self.slotting.slot_length > 0.0 && self.slotting.slot_length.is_finite(),
            "slotting.slot_length",
            "must be positive",
        );
        check(self.slotting.horizon >= 1, "slotting.horizon", "must be at least 1");
        check(self.runs >= 1, "runs", "must be at least 1");
        check(self.state_cap >= 1, "state_cap", "must be at least 1");
        check(self.radio.tx_power_db.is_finite(), "radio.tx_power_db", "must be finite");
        check(self.radio.bit_rate_kbps > 0.0, "radio.bit_rate_kbps", "must be positive");
        let band = Band::new(self.radio.center_khz, self.radio.bandwidth_khz);
        check(band.is_ok(), "radio", "center and bandwidth must give a positive band");
        check(self.packets.pu_bytes >= 1, "packets.pu_bytes", "must be at least 1");
        check(self.packets.su_bytes >= 1, "packets.su_bytes", "must be at least 1");
        if let Some(s) = self.observation_sigma {
            check(s >= 0.0 && s.is_finite(), "observation_sigma", "must be non-negative");
        }
        let nested: [(&str, Result<()>); 4] = [
            ("environment", self.environment.validate()),
            ("multipath", self.multipath.validate()),
            ("alignment", self.alignment.validate()),
            ("topology", self.topology.build().validate()),
        ];
        for (path, r) in nested {
            if let Err(e) = r {
                issues.push(ValidationIssue::new(path, strip(&e)));
            }
        }
        if let Ok(band) = band {
            if let Err(e) = self.band_plan.validate(&band) {
                issues.push(ValidationIssue::new("band_plan", strip(&e)));
            }
        }
        let topo = self.topology.build();
        if topo.n_pu() + topo.n_su() > 24 {
            issues.push(ValidationIssue::new("topology", "at most 24 hops in total"));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }

    /// Physical network with every hop on the full band.
    pub fn network_spec(&self) -> Result<NetworkSpec> {
        let topology = self.topology.build();
        let (n_pu, n_su) = (topology.n_pu(), topology.n_su());
        Ok(NetworkSpec {
            environment: self.environment,
            paths: self.multipath,
            slot_length: self.slotting.slot_length,
            tx_power_db: self.radio.tx_power_db,
            carriers: vec![Carrier {
                band: self.band()?,
                bit_rate_kbps: self.radio.bit_rate_kbps,
            }],
            pu_carrier: vec![0; n_pu],
            su_carrier: vec![0; n_su],
            pu_packet_bits: vec![self.packets.pu_bytes * 8; n_pu],
            su_packet_bits: vec![self.packets.su_bytes * 8; n_su],
            channel_seed: self.channel_seed,
            topology,
        })
    }

    /// Frequency-division variant of [`Self::network_spec`].
    pub fn fdm_network_spec(&self) -> Result<NetworkSpec> {
        build_fdm_spec(&self.network_spec()?, &self.band_plan, &self.band()?)
    }

    pub fn band(&self) -> Result<Band> {
        Band::new(self.radio.center_khz, self.radio.bandwidth_khz)
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Config(m) | Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}
