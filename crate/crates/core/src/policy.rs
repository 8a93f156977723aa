//! Runtime interface shared by all scheduling schemes.

use rand::RngCore;

use crate::error::Result;
use crate::netmodel::SystemState;

/// What a scheme may see when deciding slot `t`.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext {
    pub t: usize,
    /// True global state. Only the primary schedule oracle of the
    /// alignment baseline reads anything beyond the buffers.
    pub state: SystemState,
    /// Secondary buffer occupancy, known locally by each secondary node.
    pub buffers: u32,
}

/// A secondary scheduling scheme driven slot by slot.
pub trait Policy {
    /// Decision bits for slot `ctx.t`, one per secondary hop.
    fn decide(&mut self, ctx: &SlotContext, rng: &mut dyn RngCore) -> Result<u32>;

    /// Measurements taken during slot `t`, one per secondary sensor.
    fn observe(&mut self, t: usize, y: &[f64]) -> Result<()>;
}

/// Never transmits.
#[derive(Debug, Default, Clone, Copy)]
pub struct Silent;

impl Policy for Silent {
    fn decide(&mut self, _: &SlotContext, _: &mut dyn RngCore) -> Result<u32> {
        Ok(0)
    }

    fn observe(&mut self, _: usize, _: &[f64]) -> Result<()> {
        Ok(())
    }
}
