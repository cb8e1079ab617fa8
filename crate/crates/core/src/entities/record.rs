use std::fmt;

use crate::arrivals::CallEvent;
use crate::graph::{CallType, VertexId};

/// Final state of one call attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Disposition {
    /// Answered and service completed.
    Served,
    /// Hung up while queued.
    Abandoned,
    /// Busy signal: all trunks occupied.
    Blocked,
    /// Still pending, queued, in transit or in service when the run ended.
    InSystem,
}

impl Disposition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Disposition::Served => "SERVED",
            Disposition::Abandoned => "ABANDONED",
            Disposition::Blocked => "BLOCKED",
            Disposition::InSystem => "IN_SYSTEM",
        }
    }
}

impl fmt::Display for Disposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything recorded about one call attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub call_id: u64,
    pub original_call_id: u64,
    pub caller_region: VertexId,
    pub psap: Option<VertexId>,
    pub call_type: CallType,
    /// Seconds at which the caller placed the call.
    pub placed_time: u64,
    /// Step the PSAP received the call.
    pub arrival_step: Option<u64>,
    pub answer_step: Option<u64>,
    /// Step service completed, the caller hung up, or the busy signal was given.
    pub end_step: Option<u64>,
    /// Seconds spent queued (served and abandoned calls).
    pub wait_s: Option<f64>,
    pub disposition: Disposition,
    /// A later attempt re-dialed after this one failed.
    pub redialed: bool,
    pub patience: f64,
    pub service_duration: f64,
    pub responder: Option<VertexId>,
    pub dispatch_step: Option<u64>,
    pub on_scene_step: Option<u64>,
    /// Seconds from PSAP arrival to the unit reaching the scene.
    pub response_time_s: Option<f64>,
}

impl CallRecord {
    pub(crate) fn new(call: &CallEvent, disposition: Disposition) -> Self {
        CallRecord {
            call_id: call.call_id,
            original_call_id: call.original_call_id,
            caller_region: call.vertex_id,
            psap: None,
            call_type: call.call_type,
            placed_time: call.time,
            arrival_step: None,
            answer_step: None,
            end_step: None,
            wait_s: None,
            disposition,
            redialed: false,
            patience: call.patience,
            service_duration: call.service_duration,
            responder: None,
            dispatch_step: None,
            on_scene_step: None,
            response_time_s: None,
        }
    }

    /// True for attempts that reached a PSAP queue or server.
    pub fn entered_queue(&self) -> bool {
        matches!(self.disposition, Disposition::Served | Disposition::Abandoned)
            || (self.disposition == Disposition::InSystem && self.arrival_step.is_some())
    }
}

/// A completed responder assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseLog {
    pub call_id: u64,
    pub responder: VertexId,
    pub start_step: u64,
    pub on_scene_step: u64,
    pub clear_step: u64,
    pub response_time_s: f64,
}
