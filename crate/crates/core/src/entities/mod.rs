//! Vertex state machines and the sub-models they draw on.
//!
//! Each handler runs once per step. It sees only its own state, the inbox
//! pulled during the communication phase, and (for caller regions) its own
//! random stream. Everything it wants other vertices to see goes into the
//! returned outgoing list and becomes visible one step later.

mod caller_region;
pub mod models;
mod psap;
mod record;
mod responder;

use crate::config::SimulationConfig;
use crate::graph::EscsGraph;

pub use caller_region::{caller_region_step, CallerRegionState};
pub use psap::{psap_step, ActiveCall, PsapState, QueuedCall};
pub use record::{CallRecord, Disposition, ResponseLog};
pub use responder::{responder_step, Assignment, ResponderState};

/// Read-only view handed to every handler.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub graph: &'a EscsGraph,
    pub cfg: &'a SimulationConfig,
    pub step: u64,
}

impl StepContext<'_> {
    pub fn now_seconds(&self) -> f64 {
        self.step as f64 * self.cfg.step_duration
    }

    /// Occupancy in steps for a duration in seconds; at least one step.
    pub fn busy_steps(&self, seconds: f64) -> u64 {
        self.cfg.steps_for(seconds).max(1)
    }
}
