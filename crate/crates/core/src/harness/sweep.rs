//! One-parameter sweeps over a base scenario.

use std::str::FromStr;

use serde::Serialize;

use super::config::{ScenarioConfig, Scheme, TopologyConfig};
use super::{evaluate, Scenario, SchemeResult};
use crate::error::{Error, Result};

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// Burst arrival probability; the idle-state probability follows as a
    /// quarter of it.
    Alpha2,
    Beta,
    /// Center frequency, kHz; sub-channels move with it.
    Fc,
    /// Hop length of a crossing topology, m.
    Distance,
    /// 0 or 1: secondary packet-size optimization.
    PacketOpt,
    /// Hops per chain of a crossing topology.
    Topology,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::Alpha2,
        Axis::Beta,
        Axis::Fc,
        Axis::Distance,
        Axis::PacketOpt,
        Axis::Topology,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Alpha2 => "alpha2",
            Axis::Beta => "beta",
            Axis::Fc => "fc",
            Axis::Distance => "distance",
            Axis::PacketOpt => "packet-opt",
            Axis::Topology => "topology",
        }
    }

    /// Copy of `base` with the axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        match self {
            Axis::Alpha2 => {
                c.traffic.alpha2 = value;
                c.traffic.alpha1 = value / 4.0;
            }
            Axis::Beta => c.beta = value,
            Axis::Fc => {
                let shift = value - c.radio.center_khz;
                c.radio.center_khz = value;
                for ch in &mut c.band_plan.channels {
                    ch.center_khz += shift;
                }
            }
            Axis::Distance => match &mut c.topology {
                TopologyConfig::Crossing { hop_length, .. } => *hop_length = value,
                TopologyConfig::Explicit { .. } => {
                    return Err(Error::Config("distance sweeps need a crossing topology".into()))
                }
            },
            Axis::PacketOpt => {
                c.packets.optimize = match value {
                    0.0 => false,
                    1.0 => true,
                    _ => return Err(Error::Config("packet-opt values must be 0 or 1".into())),
                }
            }
            Axis::Topology => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config("topology values must be positive integers".into()));
                }
                match &mut c.topology {
                    TopologyConfig::Crossing { n_pu, n_su, .. } => {
                        *n_pu = value as usize;
                        *n_su = value as usize;
                    }
                    TopologyConfig::Explicit { .. } => {
                        return Err(Error::Config("topology sweeps need a crossing topology".into()))
                    }
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown sweep axis '{s}'")))
    }
}

/// Results at one sweep point; a single scenario has no axis.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis: Option<Axis>,
    pub value: f64,
    pub results: Vec<SchemeResult>,
}

impl SweepPoint {
    pub fn axis_name(&self) -> &'static str {
        self.axis.map_or("none", Axis::name)
    }
}

/// Evaluates `schemes` on one scenario.
pub fn run_single(config: ScenarioConfig, schemes: &[Scheme]) -> Result<SweepPoint> {
    let with_fdm = schemes.iter().any(|s| s.uses_fdm());
    let scenario = Scenario::build(config, with_fdm)?;
    Ok(SweepPoint {
        axis: None,
        value: 0.0,
        results: evaluate(&scenario, schemes)?,
    })
}

/// Evaluates `schemes` at every value of the axis.
pub fn run_sweep(base: &ScenarioConfig, axis: Axis, values: &[f64], schemes: &[Scheme]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let with_fdm = schemes.iter().any(|s| s.uses_fdm());
    values
        .iter()
        .map(|&value| {
            let config = axis.apply(base, value).map_err(|e| e.context(format!("{axis}={value}")))?;
            let scenario = Scenario::build(config, with_fdm)?;
            Ok(SweepPoint {
                axis: Some(axis),
                value,
                results: evaluate(&scenario, schemes)?,
            })
        })
        .collect()
}
