use std::collections::VecDeque;

use super::{ResponseLog, StepContext};
use crate::engine::{DispatchOrder, Inbox, Message, Outgoing, UnitStatus};
use crate::entities::models::driving_time;
use crate::geo::GeoPoint;
use crate::graph::{EdgeSemantic, EscsGraph, VertexId};

/// A unit out on a call.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub order: DispatchOrder,
    pub start_step: u64,
    pub on_scene_step: u64,
    pub clear_step: u64,
}

/// Responder station with a fixed number of identical units.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponderState {
    pub id: VertexId,
    pub location: GeoPoint,
    pub units: Vec<Option<Assignment>>,
    /// Dispatches waiting for a free unit.
    pub queue: VecDeque<DispatchOrder>,
    pub logs: Vec<ResponseLog>,
    /// Dense indices of the PSAPs this station reports to.
    pub status_targets: Vec<usize>,
}

impl ResponderState {
    pub fn new(graph: &EscsGraph, index: usize, units: u32) -> Self {
        let v = &graph.vertices()[index];
        let status_targets = graph
            .outgoing_with(index, EdgeSemantic::Status)
            .map(|e| graph.index_of(graph.edges()[e].dst).expect("validated edge"))
            .collect();
        ResponderState {
            id: v.id,
            location: v.location,
            units: vec![None; units as usize],
            queue: VecDeque::new(),
            logs: Vec::new(),
            status_targets,
        }
    }

    pub fn busy_units(&self) -> u32 {
        self.units.iter().filter(|u| u.is_some()).count() as u32
    }

    pub fn free_units(&self) -> u32 {
        self.units.len() as u32 - self.busy_units()
    }
}

pub fn responder_step(state: &mut ResponderState, inbox: &Inbox, ctx: &StepContext<'_>) -> Vec<Outgoing> {
    let step = ctx.step;
    let dt = ctx.cfg.step_duration;
    let mut released = false;

    for slot in state.units.iter_mut() {
        if !slot.as_ref().is_some_and(|a| a.clear_step <= step) {
            continue;
        }
        let a = slot.take().unwrap();
        state.logs.push(ResponseLog {
            call_id: a.order.call_id,
            responder: state.id,
            start_step: a.start_step,
            on_scene_step: a.on_scene_step,
            clear_step: a.clear_step,
            response_time_s: (a.on_scene_step - a.order.call_arrival_step) as f64 * dt,
        });
        released = true;
    }

    for env in inbox.messages.iter().chain(&inbox.overflow) {
        match &env.msg {
            Message::Dispatch(order) => state.queue.push_back(order.clone()),
            other => log::warn!("responder {}: unexpected message {other:?}", state.id.0),
        }
    }

    for slot in state.units.iter_mut().filter(|u| u.is_none()) {
        let Some(order) = state.queue.pop_front() else { break };
        // Speed is validated positive, so the drive time is always defined.
        let drive = driving_time(&state.location, &order.incident, ctx.cfg.responder_speed).unwrap_or(0.0);
        let on_scene_step = step + ctx.cfg.steps_for(drive);
        let clear_step = step + ctx.busy_steps(drive + order.on_scene_duration);
        *slot = Some(Assignment {
            order,
            start_step: step,
            on_scene_step,
            clear_step,
        });
    }

    if !released {
        return Vec::new();
    }
    let status = UnitStatus {
        responder: state.id,
        available_units: state.free_units(),
        step,
    };
    state
        .status_targets
        .iter()
        .map(|&dst| Outgoing {
            dst,
            msg: Message::UnitAvailable(status.clone()),
        })
        .collect()
}
