use crate::arrivals::CallEvent;
use crate::geo::GeoPoint;
use crate::graph::{CallType, EdgeSemantic, VertexId};

/// Instruction from a PSAP to a responder station.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchOrder {
    pub call_id: u64,
    pub psap: VertexId,
    pub incident: GeoPoint,
    pub call_type: CallType,
    pub on_scene_duration: f64,
    /// Step the PSAP issued the dispatch.
    pub dispatch_step: u64,
    /// Step the call reached the PSAP; response time is measured from here.
    pub call_arrival_step: u64,
}

/// Availability report from a responder station.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitStatus {
    pub responder: VertexId,
    pub available_units: u32,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    /// Caller region to PSAP.
    Call(CallEvent),
    /// PSAP back to the caller region: all trunks were busy.
    BusySignal(CallEvent),
    /// PSAP back to the caller region: the caller hung up while queued.
    Abandoned(CallEvent),
    /// PSAP to responder.
    Dispatch(DispatchOrder),
    /// Responder to PSAP.
    UnitAvailable(UnitStatus),
}

impl Message {
    /// Edge semantic the message travels on, and whether it travels against
    /// the edge direction.
    pub fn route(&self) -> (EdgeSemantic, bool) {
        match self {
            Message::Call(_) => (EdgeSemantic::Call, false),
            Message::BusySignal(_) | Message::Abandoned(_) => (EdgeSemantic::Call, true),
            Message::Dispatch(_) => (EdgeSemantic::Dispatch, false),
            Message::UnitAvailable(_) => (EdgeSemantic::Status, false),
        }
    }
}

/// A message together with the dense index of its sender.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub src: usize,
    pub msg: Message,
}

/// A message addressed to the dense index of its receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub dst: usize,
    pub msg: Message,
}

/// Messages pulled by one vertex during a communication phase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Inbox {
    pub messages: Vec<Envelope>,
    /// Calls that arrived while the inbox was full.
    pub overflow: Vec<Envelope>,
}

impl Inbox {
    pub fn is_empty(&self) -> bool {
        self.messages.is_empty() && self.overflow.is_empty()
    }

    pub fn clear(&mut self) {
        self.messages.clear();
        self.overflow.clear();
    }
}
