//! Per-bit overlap between transmissions, derived from propagation delays
//! with every transmission starting at the slot boundary.

use serde::Serialize;

use super::topology::{distance, Network};
use crate::error::Result;

/// Slack used when converting overlap times to bit indices.
const BIT_EPS: f64 = 1e-9;

/// Half-open time window `[start, end)` in seconds from slot start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn intersect(&self, other: &Window) -> Option<Window> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (end - start > BIT_EPS).then_some(Window { start, end })
    }
}

/// Interference that transmitter `interferer` puts on the packet received
/// over hop `victim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapEntry {
    pub interferer: usize,
    pub victim: usize,
    /// Arrival time of the interfering signal at the victim receiver.
    pub offset: f64,
    /// First and last overlapped bit of the victim packet, 1-based.
    pub bits: (u64, u64),
    /// Mean received interference power, µPa².
    pub power: f64,
    /// The victim receiver is itself transmitting (half duplex).
    pub blocking: bool,
}

/// All non-empty overlaps, grouped by victim hop.
#[derive(Debug, Clone, Default)]
pub struct OverlapTable {
    by_victim: Vec<Vec<OverlapEntry>>,
}

/// Reception window of hop `j`'s own packet at its receiver.
pub fn reception_window(network: &Network, j: usize) -> Window {
    let hop = &network.hops[j];
    let start = hop.length / network.sound_speed();
    Window {
        start,
        end: start + hop.duration(),
    }
}

/// Window in which the transmission of hop `u` is heard at hop `j`'s
/// receiver.
pub fn arrival_window(network: &Network, u: usize, j: usize) -> Window {
    let src = &network.hops[u];
    let start = distance(&src.tx, &network.hops[j].rx) / network.sound_speed();
    Window {
        start,
        end: start + src.duration(),
    }
}

/// Victim bit interval covered by an overlap window.
pub fn bits_in(window: &Window, reception: &Window, bit_rate: f64, packet_bits: u64) -> (u64, u64) {
    let first = ((window.start - reception.start) * bit_rate + BIT_EPS).floor().max(0.0) as u64 + 1;
    let last = ((window.end - reception.start) * bit_rate - BIT_EPS).ceil().max(1.0) as u64;
    (first.min(packet_bits), last.min(packet_bits))
}

impl OverlapTable {
    pub fn build(network: &Network) -> Result<Self> {
        let n = network.n_hops();
        let mut by_victim = vec![Vec::new(); n];
        for (j, entries) in by_victim.iter_mut().enumerate() {
            let victim = &network.hops[j];
            let reception = reception_window(network, j);
            for u in 0..n {
                let src = &network.hops[u];
                if u == j || src.carrier != victim.carrier {
                    continue;
                }
                let arrival = arrival_window(network, u, j);
                let Some(hit) = arrival.intersect(&reception) else {
                    continue;
                };
                let blocking = src.tx_node == victim.rx_node;
                let power = if blocking {
                    f64::INFINITY
                } else {
                    network.received_power(u, &victim.rx)?
                };
                entries.push(OverlapEntry {
                    interferer: u,
                    victim: j,
                    offset: arrival.start,
                    bits: bits_in(&hit, &reception, victim.bit_rate, victim.packet_bits),
                    power,
                    blocking,
                });
            }
        }
        Ok(Self { by_victim })
    }

    pub fn for_victim(&self, j: usize) -> &[OverlapEntry] {
        &self.by_victim[j]
    }

    pub fn entry(&self, interferer: usize, victim: usize) -> Option<&OverlapEntry> {
        self.by_victim[victim].iter().find(|e| e.interferer == interferer)
    }

    pub fn entries(&self) -> impl Iterator<Item = &OverlapEntry> {
        self.by_victim.iter().flatten()
    }
}
