//! Cognitive multi-hop network model: topology and physics, per-bit
//! interference overlap, the Markov state space with its per-decision
//! transition matrices, and the ground-truth slot simulator.

mod link;
mod overlap;
mod sim;
mod state;
mod topology;
mod transition;

pub use link::{ber_profile, mask_contains, packet_loss_for, segment_ber, BerSegment, HopMask, LossCache};
pub use overlap::{arrival_window, bits_in, reception_window, OverlapEntry, OverlapTable, Window};
pub use sim::{gaussian_log_likelihood, simulate_slot, SensingModel, SlotResult};
pub use state::{Scope, StateSpace, SystemState, DEFAULT_STATE_CAP};
pub use topology::{distance, Carrier, Chain, Hop, Network, NetworkSpec, Point, Topology, REUSE_FACTOR};
pub use transition::{SlotOutcome, SparseRows, TrafficModel, TransitionModel};
