//! Interference-constrained scheduling for cognitive multi-hop underwater
//! acoustic networks.
//!
//! The crate is layered bottom-up: [`channel`] holds the acoustic physics,
//! [`netmodel`] turns a topology into a Markov model over joint primary and
//! secondary states, [`central`] and [`decentral`] plan secondary
//! transmissions under a primary throughput constraint, [`baselines`]
//! provides the comparison schemes, and [`harness`] runs configured Monte
//! Carlo experiments.

pub mod baselines;
pub mod belief;
pub mod central;
pub mod channel;
pub mod decentral;
pub mod error;
pub mod harness;
pub mod netmodel;
pub mod policy;

pub use error::{Error, Result};
